// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner: stages, plans, and the ablation grid.
//
// Output layout under a plan's output_dir:
//   effective_config           resolved TrainConfig (JSON)
//   dataset.jsonl              training questions
//   eval_dataset.jsonl         held-out questions
//   teacher_responses.jsonl    teacher answers for the training questions
//   checkpoints/sft.ckpt       after multi-expert fine-tuning
//   checkpoints/rl.ckpt        after RL
//   sft_metrics.log            per-minibatch fine-tuning loss
//   metrics.log                per-RL-step loss breakdown
//   rollouts.dump              only with dump_rollouts
//   eval_report                greedy accuracy per expert, MV, delta (JSON)
//   overlap_report             teacher error overlap (JSON)

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "meml/core/config.hpp"
#include "meml/eval/eval.hpp"
#include "meml/policy/policy.hpp"
#include "meml/tasks/tasks.hpp"

namespace meml::cli {

enum class Stage { kGenerateData, kSft, kTrainRl, kEval, kAnalyzeOverlap };

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);

struct ExperimentPlan {
  std::string name;
  TrainConfig config;
  std::vector<Stage> pipeline;
  std::filesystem::path output_dir;

  // Stages must appear in pipeline order without repeats, and eval needs a
  // checkpoint-producing stage before it.
  void validate() const;
};

nlohmann::ordered_json to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& j);
ExperimentPlan load_plan(const std::filesystem::path& path);
void save_plan(const std::filesystem::path& path, const ExperimentPlan& plan);

// Toy-scale base configuration used by the grid and the acceptance suite.
// Learning rates, epochs and sizes are overrides of the large-model defaults.
TrainConfig toy_config();

// Five ablation rows (none, MoE, MoE+HSFT, MoE+IML, MoE+HSFT+IML) followed by
// one single-expert baseline per pool teacher. Output dirs are out_root/name.
std::vector<ExperimentPlan> build_experiment_grid(const TrainConfig& base,
                                                  const std::filesystem::path& out_root);
std::vector<ExperimentPlan> build_experiment_grid();

// Experts in use: prompts and the teacher behind each one.
struct ExpertSetup {
  std::vector<ExpertPrompt> prompts;
  std::vector<tasks::TeacherProfile> teachers;
};
ExpertSetup expert_setup(const TrainConfig& config);

policy::PolicyArch policy_arch(const TrainConfig& config);

// Seeded shuffle then prefix split; the first round(fraction * M) questions
// go to warm-up SFT, the rest to RL. Both parts are sorted by question id.
std::pair<std::vector<Question>, std::vector<Question>> split_warmup(
    const std::vector<Question>& questions, double fraction, std::uint64_t seed);

// Stage bodies; each reads and writes only under `out`.
void stage_generate_data(const TrainConfig& config, const std::filesystem::path& out);
void stage_sft(const TrainConfig& config, const std::filesystem::path& out);
void stage_train_rl(const TrainConfig& config, const std::filesystem::path& out);
eval::EvalReport stage_eval(const TrainConfig& config, const std::filesystem::path& out,
                            const std::optional<std::filesystem::path>& checkpoint = std::nullopt);
eval::OverlapReport stage_analyze_overlap(const TrainConfig& config,
                                          const std::filesystem::path& out);

struct RunOutcome {
  int exit_status = 0;
  std::string failed_stage;
  std::string error;
  std::optional<eval::EvalReport> eval_report;
  std::optional<eval::OverlapReport> overlap_report;
};

RunOutcome run_plan(const ExperimentPlan& plan);
// Runs the plan and reports failures on stderr; returns the exit status.
int run(const ExperimentPlan& plan);

}  // namespace meml::cli
