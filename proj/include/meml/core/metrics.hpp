// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited JSON metrics log. RL records carry the LossBreakdown fields;
// MEF progress records carry stage "mef" and no total_loss.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "meml/core/types.hpp"

namespace meml {

struct StepRecord {
  std::int64_t step = 0;
  LossBreakdown losses;
  std::vector<double> mean_reward_per_expert;
  std::size_t buffer_fill = 0;
};

struct MefRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double sft_loss = 0.0;       // summed negative log-likelihood of the minibatch
  double mean_sft_loss = 0.0;  // per-sample mean
};

nlohmann::ordered_json to_json(const StepRecord& r);
StepRecord step_record_from_json(const nlohmann::json& j);

class MetricsLog {
 public:
  // Truncates any existing file.
  explicit MetricsLog(const std::filesystem::path& path, bool append = false);

  void write(const StepRecord& r);
  void write(const MefRecord& r);

 private:
  std::ofstream out_;
};

// Reads back every RL step record (records without total_loss are skipped).
std::vector<StepRecord> read_step_records(const std::filesystem::path& path);

}  // namespace meml
