// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/core/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace meml {

namespace {

constexpr int kMaxExperts = 8;

void require(bool ok, const char* field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, std::string("wrong type: ") + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (enable_moe) {
    require(num_experts >= 2, "num_experts", "N must be >= 2 when enable_moe is on");
  } else {
    require(num_experts == 1, "num_experts", "N must be 1 when enable_moe is off");
  }
  require(num_experts <= kMaxExperts, "num_experts", "N must be <= 8");
  require(teacher_pool >= 1 && teacher_pool <= kMaxExperts, "teacher_pool",
          "must be in [1, 8]");
  require(!enable_moe || num_experts <= teacher_pool, "num_experts",
          "N exceeds teacher_pool");
  require(baseline_teacher >= 0 && baseline_teacher < teacher_pool, "baseline_teacher",
          "must index the teacher pool");
  require(group_size >= 2, "group_size", "G must be >= 2");
  require(incorrect_threshold >= 1, "incorrect_threshold", "K must be >= 1");
  require(incorrect_threshold <= group_size, "incorrect_threshold",
          "K exceeds G (K=" + std::to_string(incorrect_threshold) +
              ", G=" + std::to_string(group_size) + ")");
  require(buffer_capacity >= 1, "buffer_capacity", "B must be >= 1");
  require(std::isfinite(lambda_kl) && lambda_kl >= 0.0, "lambda_kl", "must be >= 0");
  require(std::isfinite(lambda_sft) && lambda_sft >= 0.0, "lambda_sft", "must be >= 0");
  require(std::isfinite(lr_sft) && lr_sft > 0.0, "lr_sft", "must be > 0");
  require(std::isfinite(lr_rl) && lr_rl > 0.0, "lr_rl", "must be > 0");
  require(warmup_fraction > 0.0 && warmup_fraction < 1.0, "warmup_fraction",
          "must be strictly between 0 and 1");
  require(epochs_sft >= 1, "epochs_sft", "must be >= 1");
  require(epochs_rl >= 1, "epochs_rl", "must be >= 1");
  require(batch_size_sft >= 1, "batch_size_sft", "must be >= 1");
  require(batch_size_rl >= 1, "batch_size_rl", "must be >= 1");
  require(num_questions >= 2, "num_questions", "M must be >= 2");
  require(num_eval_questions >= 1, "num_eval_questions", "must be >= 1");
  require(task_difficulty >= 0 && task_difficulty <= 6, "task_difficulty", "must be in [0, 6]");
  require(teacher_error_rate >= 0.0 && teacher_error_rate < 1.0, "teacher_error_rate",
          "must be in [0, 1)");
  require(teacher_overlap >= 0.0 && teacher_overlap <= teacher_error_rate, "teacher_overlap",
          "must be in [0, teacher_error_rate]");
  const int erring = teacher_pool - (ground_truth_expert0 ? 1 : 0);
  require(teacher_overlap + erring * (teacher_error_rate - teacher_overlap) <= 1.0 + 1e-12,
          "teacher_error_rate", "exclusive error bands do not fit in the question space");
  require(embed_dim >= 1, "embed_dim", "must be >= 1");
  require(hidden_dim >= 1, "hidden_dim", "must be >= 1");
  require(context_length >= 4, "context_length", "must be >= 4");
  require(std::isfinite(init_scale) && init_scale >= 0.0, "init_scale", "must be >= 0");
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["num_experts"] = c.num_experts;
  j["group_size"] = c.group_size;
  j["incorrect_threshold"] = c.incorrect_threshold;
  j["buffer_capacity"] = c.buffer_capacity;
  j["lambda_kl"] = c.lambda_kl;
  j["lambda_sft"] = c.lambda_sft;
  j["lr_sft"] = c.lr_sft;
  j["lr_rl"] = c.lr_rl;
  j["warmup_fraction"] = c.warmup_fraction;
  j["epochs_sft"] = c.epochs_sft;
  j["epochs_rl"] = c.epochs_rl;
  j["master_seed"] = c.master_seed;
  j["enable_moe"] = c.enable_moe;
  j["enable_hsft"] = c.enable_hsft;
  j["enable_iml"] = c.enable_iml;
  j["batch_size_sft"] = c.batch_size_sft;
  j["batch_size_rl"] = c.batch_size_rl;
  j["num_questions"] = c.num_questions;
  j["num_eval_questions"] = c.num_eval_questions;
  j["task_kind"] = std::string(to_string(c.task_kind));
  j["task_difficulty"] = c.task_difficulty;
  j["teacher_pool"] = c.teacher_pool;
  j["teacher_error_rate"] = c.teacher_error_rate;
  j["teacher_overlap"] = c.teacher_overlap;
  j["ground_truth_expert0"] = c.ground_truth_expert0;
  j["baseline_teacher"] = c.baseline_teacher;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["context_length"] = c.context_length;
  j["init_scale"] = c.init_scale;
  j["dump_rollouts"] = c.dump_rollouts;
  return j;
}

bool is_config_key(const std::string& key) {
  static const nlohmann::ordered_json defaults = to_json(TrainConfig{});
  return defaults.contains(key);
}

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!is_config_key(key)) throw ConfigError(key, "unknown config key");
  }
  TrainConfig c;
  read_field(j, "num_experts", c.num_experts);
  read_field(j, "group_size", c.group_size);
  c.incorrect_threshold = std::max(1, c.group_size / 2);
  read_field(j, "incorrect_threshold", c.incorrect_threshold);
  read_field(j, "buffer_capacity", c.buffer_capacity);
  read_field(j, "lambda_kl", c.lambda_kl);
  read_field(j, "lambda_sft", c.lambda_sft);
  read_field(j, "lr_sft", c.lr_sft);
  read_field(j, "lr_rl", c.lr_rl);
  read_field(j, "warmup_fraction", c.warmup_fraction);
  read_field(j, "epochs_sft", c.epochs_sft);
  read_field(j, "epochs_rl", c.epochs_rl);
  read_field(j, "master_seed", c.master_seed);
  read_field(j, "enable_moe", c.enable_moe);
  read_field(j, "enable_hsft", c.enable_hsft);
  read_field(j, "enable_iml", c.enable_iml);
  read_field(j, "batch_size_sft", c.batch_size_sft);
  read_field(j, "batch_size_rl", c.batch_size_rl);
  read_field(j, "num_questions", c.num_questions);
  read_field(j, "num_eval_questions", c.num_eval_questions);
  if (auto it = j.find("task_kind"); it != j.end()) {
    try {
      c.task_kind = task_kind_from_string(it->get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError("task_kind", e.what());
    }
  }
  read_field(j, "task_difficulty", c.task_difficulty);
  read_field(j, "teacher_pool", c.teacher_pool);
  read_field(j, "teacher_error_rate", c.teacher_error_rate);
  read_field(j, "teacher_overlap", c.teacher_overlap);
  read_field(j, "ground_truth_expert0", c.ground_truth_expert0);
  read_field(j, "baseline_teacher", c.baseline_teacher);
  read_field(j, "embed_dim", c.embed_dim);
  read_field(j, "hidden_dim", c.hidden_dim);
  read_field(j, "context_length", c.context_length);
  read_field(j, "init_scale", c.init_scale);
  read_field(j, "dump_rollouts", c.dump_rollouts);
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", std::string("parse failure in ") + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

void apply_config_override(nlohmann::json& j, const std::string& key, const std::string& value) {
  static const nlohmann::ordered_json defaults = to_json(TrainConfig{});
  auto it = defaults.find(key);
  if (it == defaults.end()) throw ConfigError(key, "unknown config key");
  try {
    if (it->is_boolean()) {
      if (value == "true" || value == "1") {
        j[key] = true;
      } else if (value == "false" || value == "0") {
        j[key] = false;
      } else {
        throw ConfigError(key, "expected true/false, got '" + value + "'");
      }
    } else if (it->is_number_unsigned()) {
      j[key] = std::stoull(value);
    } else if (it->is_number_integer()) {
      j[key] = std::stoll(value);
    } else if (it->is_number_float()) {
      j[key] = std::stod(value);
    } else {
      j[key] = value;
    }
  } catch (const std::logic_error&) {
    throw ConfigError(key, "cannot parse '" + value + "'");
  }
}

}  // namespace meml
