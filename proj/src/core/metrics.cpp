// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/core/metrics.hpp"

#include <stdexcept>
#include <string>

namespace meml {

nlohmann::ordered_json to_json(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["stage"] = "rl";
  j["grpo_loss"] = r.losses.grpo_loss;
  j["kl_loss"] = r.losses.kl_loss;
  j["sft_loss"] = r.losses.sft_loss;
  j["total_loss"] = r.losses.total_loss;
  j["mean_reward_per_expert"] = r.mean_reward_per_expert;
  j["buffer_fill"] = r.buffer_fill;
  return j;
}

StepRecord step_record_from_json(const nlohmann::json& j) {
  StepRecord r;
  r.step = j.at("step").get<std::int64_t>();
  r.losses.grpo_loss = j.at("grpo_loss").get<double>();
  r.losses.kl_loss = j.at("kl_loss").get<double>();
  r.losses.sft_loss = j.at("sft_loss").get<double>();
  r.losses.total_loss = j.at("total_loss").get<double>();
  r.mean_reward_per_expert = j.at("mean_reward_per_expert").get<std::vector<double>>();
  r.buffer_fill = j.at("buffer_fill").get<std::size_t>();
  return r;
}

MetricsLog::MetricsLog(const std::filesystem::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open metrics log " + path.string());
}

void MetricsLog::write(const StepRecord& r) {
  out_ << to_json(r).dump() << '\n';
  out_.flush();
}

void MetricsLog::write(const MefRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["stage"] = "mef";
  j["epoch"] = r.epoch;
  j["sft_loss"] = r.sft_loss;
  j["mean_sft_loss"] = r.mean_sft_loss;
  out_ << j.dump() << '\n';
}

std::vector<StepRecord> read_step_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics log " + path.string());
  std::vector<StepRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    if (!j.contains("total_loss")) continue;
    records.push_back(step_record_from_json(j));
  }
  return records;
}

}  // namespace meml
