// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "meml/core/metrics.hpp"
#include "meml/core/rng.hpp"
#include "meml/mef/mef.hpp"
#include "meml/riel/riel.hpp"

namespace meml::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<Stage, std::string>>& stage_names() {
  static const std::vector<std::pair<Stage, std::string>> names = {
      {Stage::kGenerateData, "generate-data"},
      {Stage::kSft, "sft"},
      {Stage::kTrainRl, "train-rl"},
      {Stage::kEval, "eval"},
      {Stage::kAnalyzeOverlap, "analyze-overlap"},
  };
  return names;
}

fs::path checkpoint_dir(const fs::path& out) { return out / "checkpoints"; }

std::vector<Question> read_training_questions(const fs::path& out) {
  const fs::path path = out / "dataset.jsonl";
  if (!fs::exists(path)) throw std::runtime_error("missing " + path.string() + " (run generate-data)");
  return tasks::read_questions(path);
}

}  // namespace

std::string stage_name(Stage s) {
  for (const auto& [stage, name] : stage_names()) {
    if (stage == s) return name;
  }
  return "unknown";
}

Stage stage_from_name(const std::string& name) {
  for (const auto& [stage, n] : stage_names()) {
    if (n == name) return stage;
  }
  throw std::invalid_argument("unknown stage '" + name + "'");
}

void ExperimentPlan::validate() const {
  if (name.empty()) throw std::invalid_argument("plan: empty name");
  if (output_dir.empty()) throw std::invalid_argument("plan: empty output_dir");
  if (pipeline.empty()) throw std::invalid_argument("plan: empty pipeline");
  config.validate();
  bool has_checkpoint = false;
  for (std::size_t i = 0; i < pipeline.size(); ++i) {
    if (i > 0 && static_cast<int>(pipeline[i]) <= static_cast<int>(pipeline[i - 1]))
      throw std::invalid_argument("plan: stages must follow pipeline order without repeats");
    if (pipeline[i] == Stage::kSft || pipeline[i] == Stage::kTrainRl) has_checkpoint = true;
    if (pipeline[i] == Stage::kEval && !has_checkpoint)
      throw std::invalid_argument("plan: eval needs an earlier sft or train-rl stage");
  }
}

nlohmann::ordered_json to_json(const ExperimentPlan& plan) {
  nlohmann::ordered_json j;
  j["name"] = plan.name;
  j["output_dir"] = plan.output_dir.string();
  j["pipeline"] = nlohmann::ordered_json::array();
  for (Stage s : plan.pipeline) j["pipeline"].push_back(stage_name(s));
  j["config"] = meml::to_json(plan.config);
  return j;
}

ExperimentPlan plan_from_json(const nlohmann::json& j) {
  ExperimentPlan plan;
  plan.name = j.at("name").get<std::string>();
  plan.output_dir = j.at("output_dir").get<std::string>();
  for (const auto& s : j.at("pipeline")) plan.pipeline.push_back(stage_from_name(s.get<std::string>()));
  plan.config = config_from_json(j.at("config"));
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan " + path.string());
  return plan_from_json(nlohmann::json::parse(in));
}

void save_plan(const fs::path& path, const ExperimentPlan& plan) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(plan).dump(2) << '\n';
}

TrainConfig toy_config() {
  TrainConfig c;
  c.num_experts = 3;
  c.teacher_pool = 3;
  c.group_size = 8;
  c.incorrect_threshold = 4;
  // the flush loss is a sum over the buffer, so a small buffer and a small
  // weight keep the flush step comparable to a fine-tuning minibatch
  c.buffer_capacity = 16;
  c.lambda_kl = 0.1;
  c.lambda_sft = 0.05;
  // toy-scale overrides of the large-model learning rates and epochs
  c.lr_sft = 0.1;
  c.lr_rl = 0.05;
  c.epochs_sft = 20;
  c.epochs_rl = 1;
  c.batch_size_sft = 16;
  c.batch_size_rl = 8;
  c.warmup_fraction = 0.2;
  c.num_questions = 2000;
  c.num_eval_questions = 500;
  c.task_kind = TaskKind::kModularArithmetic;
  c.task_difficulty = 4;
  c.teacher_error_rate = 0.2;
  c.teacher_overlap = 0.03;
  c.ground_truth_expert0 = false;
  c.embed_dim = 8;
  c.hidden_dim = 32;
  c.context_length = 24;
  c.init_scale = 0.5;
  return c;
}

std::vector<ExperimentPlan> build_experiment_grid(const TrainConfig& base, const fs::path& out_root) {
  const std::vector<Stage> pipeline = {Stage::kGenerateData, Stage::kSft, Stage::kTrainRl,
                                       Stage::kEval, Stage::kAnalyzeOverlap};
  const auto single = [&](int teacher) {
    TrainConfig c = base;
    c.enable_moe = false;
    c.enable_hsft = false;
    c.enable_iml = false;
    c.num_experts = 1;
    c.baseline_teacher = teacher;
    return c;
  };
  const auto moe = [&](bool hsft, bool iml) {
    TrainConfig c = base;
    c.enable_moe = true;
    c.num_experts = base.teacher_pool;
    c.enable_hsft = hsft;
    c.enable_iml = iml;
    return c;
  };
  std::vector<ExperimentPlan> plans;
  const auto add = [&](std::string name, TrainConfig c) {
    fs::path dir = out_root / name;
    plans.push_back({std::move(name), std::move(c), pipeline, std::move(dir)});
  };
  // the all-off row learns from the ground-truth teacher
  TrainConfig none = single(0);
  none.ground_truth_expert0 = true;
  add("ablation-none", none);
  add("ablation-moe", moe(false, false));
  add("ablation-moe-hsft", moe(true, false));
  add("ablation-moe-iml", moe(false, true));
  add("ablation-moe-hsft-iml", moe(true, true));
  for (int t = 0; t < base.teacher_pool; ++t) add("expert" + std::to_string(t) + "-sft-grpo", single(t));
  for (const auto& p : plans) p.validate();
  return plans;
}

std::vector<ExperimentPlan> build_experiment_grid() {
  return build_experiment_grid(toy_config(), "runs/grid");
}

ExpertSetup expert_setup(const TrainConfig& config) {
  const std::uint64_t salt = derive_key(config.master_seed, std::vector<std::uint64_t>{label(StreamTag::kTeacherSalt)});
  const auto pool = tasks::make_teacher_pool(config.teacher_pool, config.teacher_error_rate,
                                             config.teacher_overlap, config.ground_truth_expert0,
                                             salt);
  ExpertSetup setup;
  setup.prompts = mef::make_expert_prompts(config.num_experts);
  if (config.enable_moe) {
    if (config.num_experts > config.teacher_pool)
      throw std::invalid_argument("expert_setup: more experts than teachers");
    setup.teachers.assign(pool.begin(), pool.begin() + config.num_experts);
  } else {
    tasks::TeacherProfile t = pool.at(static_cast<std::size_t>(config.baseline_teacher));
    t.expert_id = 0;
    setup.teachers.push_back(t);
  }
  return setup;
}

policy::PolicyArch policy_arch(const TrainConfig& config) {
  policy::PolicyArch a;
  a.vocab_size = tasks::vocab().size();
  a.context_length = config.context_length;
  a.embed_dim = config.embed_dim;
  a.hidden_dim = config.hidden_dim;
  a.eos_token = tasks::vocab().eos();
  return a;
}

std::pair<std::vector<Question>, std::vector<Question>> split_warmup(
    const std::vector<Question>& questions, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_warmup: fraction must be in (0, 1)");
  std::vector<std::size_t> order(questions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomStream rng = derive_rng(seed, {label(StreamTag::kSplit)});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto cut = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(questions.size())));
  std::vector<std::size_t> warm(order.begin(), order.begin() + cut);
  std::vector<std::size_t> rest(order.begin() + cut, order.end());
  std::sort(warm.begin(), warm.end());
  std::sort(rest.begin(), rest.end());
  std::pair<std::vector<Question>, std::vector<Question>> out;
  for (std::size_t i : warm) out.first.push_back(questions[i]);
  for (std::size_t i : rest) out.second.push_back(questions[i]);
  return out;
}

void stage_generate_data(const TrainConfig& config, const fs::path& out) {
  fs::create_directories(out);
  const tasks::TaskSpec spec{config.task_kind, config.task_difficulty};
  RandomStream train_rng = derive_rng(config.master_seed, {label(StreamTag::kQuestions)});
  const auto questions = tasks::generate_questions(spec, config.num_questions, train_rng, 0);
  RandomStream eval_rng = derive_rng(config.master_seed, {label(StreamTag::kEvalQuestions)});
  const auto held_out =
      tasks::generate_questions(spec, config.num_eval_questions, eval_rng, config.num_questions);
  tasks::write_questions(out / "dataset.jsonl", questions);
  tasks::write_questions(out / "eval_dataset.jsonl", held_out);

  const ExpertSetup setup = expert_setup(config);
  std::vector<tasks::TeacherResponse> rows;
  for (const Question& q : questions) {
    for (std::size_t i = 0; i < setup.teachers.size(); ++i) {
      rows.push_back({q.question_id, setup.prompts[i].expert_id,
                      tasks::vocab().render(tasks::teacher_answer(setup.teachers[i], q))});
    }
  }
  tasks::write_teacher_responses(out / "teacher_responses.jsonl", rows);
}

void stage_sft(const TrainConfig& config, const fs::path& out) {
  const auto questions = read_training_questions(out);
  const auto [warmup, rl] = split_warmup(questions, config.warmup_fraction, config.master_seed);
  const ExpertSetup setup = expert_setup(config);
  const auto dataset = mef::build_dataset(warmup, setup.prompts, setup.teachers);

  RandomStream init_rng = derive_rng(config.master_seed, {label(StreamTag::kPolicyInit)});
  const auto initial = policy::init_policy(policy_arch(config), init_rng, config.init_scale);
  MetricsLog log(out / "sft_metrics.log");
  const auto trained = mef::train_mef(initial, dataset, config, &log);
  fs::create_directories(checkpoint_dir(out));
  policy::save_checkpoint(checkpoint_dir(out) / "sft.ckpt", trained);
}

void stage_train_rl(const TrainConfig& config, const fs::path& out) {
  const fs::path sft_ckpt = checkpoint_dir(out) / "sft.ckpt";
  if (!fs::exists(sft_ckpt)) throw std::runtime_error("missing " + sft_ckpt.string() + " (run sft)");
  const auto params = policy::load_checkpoint(sft_ckpt);
  const auto questions = read_training_questions(out);
  const auto [warmup, rl] = split_warmup(questions, config.warmup_fraction, config.master_seed);
  const ExpertSetup setup = expert_setup(config);

  MetricsLog log(out / "metrics.log");
  std::ofstream dump;
  if (config.dump_rollouts) {
    dump.open(out / "rollouts.dump", std::ios::trunc);
    if (!dump) throw std::runtime_error("cannot write rollouts.dump");
  }
  const auto run = riel::train_rl(params, rl, setup.prompts, config, &log,
                                  config.dump_rollouts ? &dump : nullptr);
  policy::save_checkpoint(checkpoint_dir(out) / "rl.ckpt", run.params);
}

eval::EvalReport stage_eval(const TrainConfig& config, const fs::path& out,
                            const std::optional<fs::path>& checkpoint) {
  fs::path ckpt;
  if (checkpoint) {
    ckpt = *checkpoint;
  } else if (fs::exists(checkpoint_dir(out) / "rl.ckpt")) {
    ckpt = checkpoint_dir(out) / "rl.ckpt";
  } else {
    ckpt = checkpoint_dir(out) / "sft.ckpt";
  }
  if (!fs::exists(ckpt)) throw std::runtime_error("missing checkpoint " + ckpt.string());
  const auto params = policy::load_checkpoint(ckpt);
  const fs::path data = out / "eval_dataset.jsonl";
  if (!fs::exists(data)) throw std::runtime_error("missing " + data.string() + " (run generate-data)");
  const auto questions = tasks::read_questions(data);
  const auto report = eval::evaluate(params, questions, expert_setup(config).prompts);
  eval::write_report(out / "eval_report", report);
  return report;
}

eval::OverlapReport stage_analyze_overlap(const TrainConfig& config, const fs::path& out) {
  const auto questions = read_training_questions(out);
  const fs::path path = out / "teacher_responses.jsonl";
  if (!fs::exists(path)) throw std::runtime_error("missing " + path.string());
  const auto rows = tasks::read_teacher_responses(path);

  std::map<std::int64_t, std::size_t> index;
  for (std::size_t k = 0; k < questions.size(); ++k) index[questions[k].question_id] = k;
  std::vector<std::set<std::int64_t>> errors(static_cast<std::size_t>(config.num_experts));
  for (const auto& r : rows) {
    auto it = index.find(r.question_id);
    if (it == index.end()) throw std::runtime_error("teacher response for unknown question");
    if (r.expert_id < 0 || r.expert_id >= config.num_experts)
      throw std::runtime_error("teacher response for unknown expert");
    const Question& q = questions[it->second];
    if (tasks::reward(tasks::vocab().tokenize(r.response_text), q) == 0.0)
      errors[static_cast<std::size_t>(r.expert_id)].insert(static_cast<std::int64_t>(it->second));
  }
  const auto report = eval::error_overlap(errors, static_cast<std::int64_t>(questions.size()));
  std::ofstream f(out / "overlap_report", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write overlap_report");
  f << eval::to_json(report).dump(2) << '\n';
  return report;
}

RunOutcome run_plan(const ExperimentPlan& plan) {
  RunOutcome outcome;
  Stage current = plan.pipeline.empty() ? Stage::kGenerateData : plan.pipeline.front();
  try {
    plan.validate();
    fs::create_directories(plan.output_dir);
    save_config(plan.output_dir / "effective_config", plan.config);
    for (Stage s : plan.pipeline) {
      current = s;
      switch (s) {
        case Stage::kGenerateData:
          stage_generate_data(plan.config, plan.output_dir);
          break;
        case Stage::kSft:
          stage_sft(plan.config, plan.output_dir);
          break;
        case Stage::kTrainRl:
          stage_train_rl(plan.config, plan.output_dir);
          break;
        case Stage::kEval:
          outcome.eval_report = stage_eval(plan.config, plan.output_dir);
          break;
        case Stage::kAnalyzeOverlap:
          outcome.overlap_report = stage_analyze_overlap(plan.config, plan.output_dir);
          break;
      }
    }
  } catch (const std::exception& e) {
    outcome.exit_status = 1;
    outcome.failed_stage = stage_name(current);
    outcome.error = e.what();
  }
  return outcome;
}

int run(const ExperimentPlan& plan) {
  const RunOutcome outcome = run_plan(plan);
  if (outcome.exit_status != 0) {
    std::cerr << "plan '" << plan.name << "' failed in stage " << outcome.failed_stage << ": "
              << outcome.error << '\n';
  }
  return outcome.exit_status;
}

}  // namespace meml::cli
