// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Training configuration. The on-disk format is a flat JSON object whose keys
// are the field names below; omitted keys take the documented defaults and
// unknown keys are rejected.
//
// Large-model defaults: G=8, lr_rl=1e-6, lr_sft=1e-5, one epoch per stage,
// warm-up fraction 0.2. Those learning rates are tuned for billion-parameter
// models; the toy configs under configs/ override them (see toy_config()).

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "meml/core/types.hpp"

namespace meml {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct TrainConfig {
  // RIEL
  int num_experts = 3;           // N
  int group_size = 8;            // G
  int incorrect_threshold = 4;   // K, defaults to G/2 when omitted
  int buffer_capacity = 64;      // B
  double lambda_kl = 0.1;        // weight of the mutual-learning term
  double lambda_sft = 1.0;       // weight of the hard-example SFT term
  double lr_sft = 1e-5;
  double lr_rl = 1e-6;
  double warmup_fraction = 0.2;
  int epochs_sft = 1;
  int epochs_rl = 1;
  std::uint64_t master_seed = 42;
  bool enable_moe = true;
  bool enable_hsft = true;
  bool enable_iml = true;

  int batch_size_sft = 16;  // samples per MEF step
  int batch_size_rl = 4;    // questions per RL step

  // data
  int num_questions = 1000;  // M
  int num_eval_questions = 200;
  TaskKind task_kind = TaskKind::kModularArithmetic;
  int task_difficulty = 1;

  // teachers
  int teacher_pool = 3;
  double teacher_error_rate = 0.2;
  double teacher_overlap = 0.03;
  bool ground_truth_expert0 = true;
  int baseline_teacher = 0;  // teacher used by the single expert when enable_moe is off

  // policy architecture
  int embed_dim = 8;
  int hidden_dim = 32;
  int context_length = 24;
  double init_scale = 0.1;

  bool dump_rollouts = false;

  // Throws ConfigError naming the first violated field.
  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
// Parses and validates.
TrainConfig config_from_json(const nlohmann::json& j);

TrainConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const TrainConfig& config);

// Applies a textual "--key value" override, typed by the field's default.
void apply_config_override(nlohmann::json& j, const std::string& key, const std::string& value);
bool is_config_key(const std::string& key);

}  // namespace meml
