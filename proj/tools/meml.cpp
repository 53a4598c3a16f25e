// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// meml: experiment runner for the multi-expert mutual-learning lab.
//
//   meml generate-data --out runs/a --seed 7 [--config cfg.json] [--<key> <value>...]
//   meml sft           --out runs/a --seed 7 ...
//   meml train-rl      --out runs/a --seed 7 ...
//   meml eval          --out runs/a --seed 7 [--checkpoint path]
//   meml analyze-overlap --out runs/a --seed 7
//   meml run-plan      --plan plan.json
//   meml grid          --out runs/grid [--seed 7] [--config base.json] [--run]

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "meml/cli/runner.hpp"
#include "meml/core/config.hpp"

namespace {

namespace fs = std::filesystem;
using meml::cli::Stage;

struct StageArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  std::string checkpoint;
  std::map<std::string, std::string> overrides;
};

void add_config_flags(CLI::App* cmd, StageArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON config file (defaults to the toy config)");
  const auto defaults = meml::to_json(meml::TrainConfig{});
  for (const auto& [key, value] : defaults.items()) {
    if (key == "master_seed") continue;
    cmd->add_option_function<std::string>(
        "--" + key, [&args, key = key](const std::string& v) { args.overrides[key] = v; },
        "override " + key);
  }
}

meml::TrainConfig resolve_config(const StageArgs& args) {
  nlohmann::json j;
  if (args.config_path.empty()) {
    j = meml::to_json(meml::cli::toy_config());
  } else {
    std::ifstream in(args.config_path);
    if (!in) throw meml::ConfigError("<file>", "cannot open " + args.config_path);
    j = nlohmann::json::parse(in);
  }
  for (const auto& [key, value] : args.overrides) meml::apply_config_override(j, key, value);
  j["master_seed"] = args.seed;
  return meml::config_from_json(j);
}

int run_stage(Stage stage, const StageArgs& args) {
  meml::cli::ExperimentPlan plan;
  plan.name = meml::cli::stage_name(stage);
  plan.config = resolve_config(args);
  plan.output_dir = args.out;
  fs::create_directories(plan.output_dir);
  meml::save_config(plan.output_dir / "effective_config", plan.config);
  if (stage == Stage::kEval) {
    std::optional<fs::path> ckpt;
    if (!args.checkpoint.empty()) ckpt = args.checkpoint;
    const auto report = meml::cli::stage_eval(plan.config, plan.output_dir, ckpt);
    for (std::size_t i = 0; i < report.per_expert_accuracy.size(); ++i)
      std::cout << "Expert" << i << " " << report.per_expert_accuracy[i] << '\n';
    std::cout << "MV " << report.majority_vote_accuracy << "\nDelta " << report.delta << '\n';
    return 0;
  }
  // Single-stage plans skip the ordering check that requires sft before eval.
  switch (stage) {
    case Stage::kGenerateData:
      meml::cli::stage_generate_data(plan.config, plan.output_dir);
      break;
    case Stage::kSft:
      meml::cli::stage_sft(plan.config, plan.output_dir);
      break;
    case Stage::kTrainRl:
      meml::cli::stage_train_rl(plan.config, plan.output_dir);
      break;
    case Stage::kAnalyzeOverlap: {
      const auto report = meml::cli::stage_analyze_overlap(plan.config, plan.output_dir);
      std::cout << meml::eval::to_json(report).dump(2) << '\n';
      break;
    }
    case Stage::kEval:
      break;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-expert mutual-learning GRPO lab"};
  app.require_subcommand(1);

  std::map<Stage, StageArgs> stage_args;
  std::map<Stage, CLI::App*> stage_cmds;
  for (Stage s : {Stage::kGenerateData, Stage::kSft, Stage::kTrainRl, Stage::kEval,
                  Stage::kAnalyzeOverlap}) {
    StageArgs& args = stage_args[s];
    CLI::App* cmd = app.add_subcommand(meml::cli::stage_name(s));
    cmd->add_option("--seed", args.seed, "master seed")->required();
    cmd->add_option("--out", args.out, "output directory")->required();
    if (s == Stage::kEval) cmd->add_option("--checkpoint", args.checkpoint, "checkpoint to evaluate");
    add_config_flags(cmd, args);
    stage_cmds[s] = cmd;
  }

  std::string plan_path;
  CLI::App* run_plan = app.add_subcommand("run-plan", "run every stage of a plan file");
  run_plan->add_option("--plan", plan_path, "plan JSON")->required();

  std::string grid_out = "runs/grid";
  std::string grid_config;
  std::optional<std::uint64_t> grid_seed;
  bool grid_run = false;
  CLI::App* grid = app.add_subcommand("grid", "write (and optionally run) the ablation grid");
  grid->add_option("--out", grid_out, "root directory for plan files and outputs");
  grid->add_option("--config", grid_config, "base config (defaults to the toy config)");
  grid->add_option("--seed", grid_seed, "master seed for every plan");
  grid->add_flag("--run", grid_run, "execute the plans after writing them");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [stage, cmd] : stage_cmds) {
      if (cmd->parsed()) return run_stage(stage, stage_args[stage]);
    }
    if (run_plan->parsed()) return meml::cli::run(meml::cli::load_plan(plan_path));
    if (grid->parsed()) {
      meml::TrainConfig base =
          grid_config.empty() ? meml::cli::toy_config() : meml::load_config(grid_config);
      if (grid_seed) base.master_seed = *grid_seed;
      const auto plans = meml::cli::build_experiment_grid(base, grid_out);
      fs::create_directories(grid_out);
      int status = 0;
      for (const auto& plan : plans) {
        const fs::path file = fs::path(grid_out) / (plan.name + ".plan.json");
        meml::cli::save_plan(file, plan);
        std::cout << file.string() << '\n';
        if (grid_run) {
          if (meml::cli::run(plan) != 0) {
            status = 1;
            continue;
          }
          const auto report = meml::cli::stage_eval(plan.config, plan.output_dir);
          std::cout << "  best expert " << report.best_expert() << " accuracy "
                    << report.per_expert_accuracy[report.best_expert()] << ", MV "
                    << report.majority_vote_accuracy << ", delta " << report.delta << '\n';
        }
      }
      return status;
    }
  } catch (const meml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
