// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance [--meml path/to/meml] [--only N] [--work dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "meml/cli/runner.hpp"
#include "meml/core/config.hpp"
#include "meml/eval/eval.hpp"
#include "meml/mef/mef.hpp"
#include "meml/riel/riel.hpp"
#include "meml/tasks/tasks.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;
namespace cli = meml::cli;
namespace eval = meml::eval;
namespace mef = meml::mef;
namespace policy = meml::policy;
namespace riel = meml::riel;
namespace tasks = meml::tasks;
using meml::Question;
using meml::TaskKind;
using meml::TokenSeq;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::string meml_binary;
  int only = 0;
  fs::path work = fs::temp_directory_path() / "meml_acceptance";
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::vector<Question> make_questions(TaskKind kind, int difficulty, int count, std::uint64_t seed,
                                     std::int64_t first_id = 0) {
  auto rng = meml::derive_rng(seed, {2});
  return tasks::generate_questions({kind, difficulty}, count, rng, first_id);
}

// ---------------------------------------------------------------------------
// 1. analytic gradients vs central differences

Verdict gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto arch = meml::testing::small_arch(24, 3, 4);
  const auto prompts = mef::make_expert_prompts(3);
  double worst[4] = {0, 0, 0, 0};
  const int instances = 100;
  for (int n = 0; n < instances; ++n) {
    const std::uint64_t seed = 1000 + n;
    const auto params = meml::testing::random_policy(arch, seed, 1.0);
    const auto qs = make_questions(static_cast<TaskKind>(n % 3), 1, 2, seed, 0);
    auto rng = meml::derive_rng(seed, {11});

    // multi-expert fine-tuning loss on a random batch
    const auto pool = tasks::make_teacher_pool(3, 0.3, 0.1, false, seed);
    const auto data = mef::build_dataset(qs, prompts, pool);
    {
      const auto lg = mef::sft_loss(params, data);
      const double num = meml::testing::fd_relative_error(
          params, [&](const policy::PolicyParameters& p) { return mef::sft_loss(p, data).loss; }, lg.grad);
      worst[0] = std::max(worst[0], num);
    }

    // GRPO with random advantages over sampled responses
    {
      auto groups = riel::sample_rollouts(params, qs[0], prompts, 3, {seed, 0});
      std::vector<riel::AdvantageSet> adv(groups.size());
      for (auto& a : adv) {
        for (int g = 0; g < 3; ++g) a.advantages.push_back(rng.uniform() * 2.0 - 0.8);
      }
      const auto lg = riel::grpo_loss(groups, adv, params);
      const double num = meml::testing::fd_relative_error(params, [&](const policy::PolicyParameters& p) {
        std::vector<std::vector<double>> lps;
        for (const auto& gr : groups) {
          std::vector<double> lp;
          for (const auto& r : gr.responses) lp.push_back(policy::log_prob(p, gr.conditioning, r));
          lps.push_back(std::move(lp));
        }
        return riel::grpo_objective(lps, adv);
      }, lg.grad);
      worst[1] = std::max(worst[1], num);
    }

    // mutual-learning term; the best expert's branch is a constant
    {
      riel::MutualLearningSelection sel;
      sel.best_expert = static_cast<int>(rng.below(3));
      sel.worst_expert = (sel.best_expert + 1 + static_cast<int>(rng.below(2))) % 3;
      sel.positive_responses = {tasks::render_trace(static_cast<int>(rng.below(8)), qs[1], true),
                                tasks::reference_trace(qs[1])};
      const auto cb = mef::concat(qs[1], prompts[sel.best_expert]);
      const auto cw = mef::concat(qs[1], prompts[sel.worst_expert]);
      std::vector<double> fixed;
      for (const auto& o : sel.positive_responses) fixed.push_back(policy::log_prob(params, cb, o));
      const auto lg = riel::kl_mutual_loss(sel, qs[1], prompts, params);
      const double num = meml::testing::fd_relative_error(params, [&](const policy::PolicyParameters& p) {
        std::vector<double> lw;
        for (const auto& o : sel.positive_responses) lw.push_back(policy::log_prob(p, cw, o));
        return riel::kl_objective(fixed, lw);
      }, lg.grad);
      worst[2] = std::max(worst[2], num);
    }

    // hard-example loss
    {
      std::vector<riel::HardExample> entries;
      for (std::size_t j = 0; j < qs.size(); ++j) {
        const int e = static_cast<int>(rng.below(3));
        entries.push_back({qs[j].question_id, e, mef::concat(qs[j], prompts[e]), tasks::reference_trace(qs[j])});
      }
      const auto lg = riel::hard_example_loss(entries, params);
      const double num = meml::testing::fd_relative_error(
          params, [&](const policy::PolicyParameters& p) { return riel::hard_example_loss(entries, p).loss; }, lg.grad);
      worst[3] = std::max(worst[3], num);
    }
  }
  const double secs = seconds_since(t0);
  const double max_err = *std::max_element(worst, worst + 4);
  Verdict v;
  v.pass = max_err <= 1e-4 && secs < 60.0;
  v.detail = "max rel err mef=" + fmt(worst[0], 3) + " grpo=" + fmt(worst[1], 3) + " kl=" + fmt(worst[2], 3) +
             " sft=" + fmt(worst[3], 3) + " over " + std::to_string(instances) + " instances each, " +
             fmt(secs, 3) + "s";
  return v;
}

// ---------------------------------------------------------------------------
// 2. advantage algebra

Verdict advantage_algebra() {
  auto rng = meml::derive_rng(2, {21});
  double worst_sum = 0.0;
  for (int t = 0; t < 100000; ++t) {
    riel::RolloutGroup g;
    const int size = 2 + static_cast<int>(rng.below(15));
    for (int k = 0; k < size; ++k) {
      // mostly binary rewards, some real-valued
      g.rewards.push_back(t % 4 == 0 ? rng.uniform() : static_cast<double>(rng.below(2)));
    }
    double s = 0.0;
    for (double a : riel::compute_advantages(g).advantages) s += a;
    worst_sum = std::max(worst_sum, std::abs(s));
  }

  // all-equal rewards: zero advantages and zero GRPO gradient
  bool equal_ok = true;
  const auto params = meml::testing::random_policy(meml::testing::small_arch(24), 5, 0.5);
  const auto prompts = mef::make_expert_prompts(3);
  const auto qs = make_questions(TaskKind::kModularArithmetic, 2, 50, 22);
  for (const auto& q : qs) {
    auto groups = riel::sample_rollouts(params, q, prompts, 8, {22, q.question_id});
    std::vector<riel::AdvantageSet> adv;
    for (auto& g : groups) {
      const double r = static_cast<double>(q.question_id % 2);
      std::fill(g.rewards.begin(), g.rewards.end(), r);
      adv.push_back(riel::compute_advantages(g));
      for (double a : adv.back().advantages) equal_ok &= a == 0.0;
    }
    const auto lg = riel::grpo_loss(groups, adv, params);
    equal_ok &= lg.loss == 0.0;
    for (double x : lg.grad) equal_ok &= x == 0.0;
  }
  Verdict v;
  v.pass = worst_sum <= 1e-9 && equal_ok;
  v.detail = "max |sum A| = " + fmt(worst_sum, 3) + " over 1e5 vectors; equal rewards give zero advantages and gradient: " +
             (equal_ok ? "yes" : "no");
  return v;
}

// ---------------------------------------------------------------------------
// 3. buffer statistics

Verdict buffer_statistics() {
  meml::TrainConfig c;
  c.group_size = 8;
  c.incorrect_threshold = 4;
  c.buffer_capacity = 1 << 20;
  riel::HardExampleBuffer big(c.buffer_capacity);
  const auto q = make_questions(TaskKind::kModularArithmetic, 1, 1, 3)[0];
  const auto prompt = mef::make_expert_prompts(1)[0];
  auto rng = meml::derive_rng(3, {31});
  int admitted = 0;
  for (int t = 0; t < 10000; ++t) admitted += riel::buffer_admit(big, q, prompt, 5 + static_cast<int>(rng.below(4)), c, rng);
  const bool rate_ok = std::abs(admitted - 5000) <= 4 * 50;

  bool boundary_ok = true;
  riel::HardExampleBuffer empty(4);
  for (int t = 0; t < 10000; ++t) boundary_ok &= !riel::buffer_admit(empty, q, prompt, 4, c, rng);
  boundary_ok &= empty.size() == 0;

  // capacity across full RL runs with several buffer sizes
  bool capacity_ok = true;
  std::size_t peak = 0;
  const auto prompts = mef::make_expert_prompts(3);
  const auto qs = make_questions(TaskKind::kModularArithmetic, 3, 96, 33);
  for (int b : {1, 3, 8}) {
    meml::TrainConfig rc;
    rc.buffer_capacity = b;
    rc.lr_rl = 0.05;
    rc.lambda_sft = 0.05;
    rc.batch_size_rl = 4;
    rc.master_seed = 30 + b;
    const auto params = meml::testing::random_policy(meml::testing::small_arch(24), rc.master_seed, 0.5);
    riel::HardExampleBuffer buffer(b);
    auto p = params;
    for (int step = 0; step < 24; ++step) {
      const std::vector<Question> batch(qs.begin() + 4 * step, qs.begin() + 4 * step + 4);
      const auto r = riel::rl_step(p, batch, prompts, buffer, rc, step);
      capacity_ok &= r.buffer_fill <= static_cast<std::size_t>(b) && buffer.size() <= static_cast<std::size_t>(b);
      peak = std::max(peak, r.buffer_fill);
      p = r.params;
    }
  }
  Verdict v;
  v.pass = rate_ok && boundary_ok && capacity_ok;
  v.detail = "admitted " + std::to_string(admitted) + "/10000 (4 sigma band [4800, 5200]); count=K admits: " +
             (boundary_ok ? "never" : "sometimes") + "; capacity respected in every step: " +
             (capacity_ok ? "yes" : "no");
  return v;
}

// ---------------------------------------------------------------------------
// 4. mutual learning moves the weak expert toward the strong one

struct MutualLearningRun {
  double probe_log_prob = 0.0;
};

Verdict mutual_learning_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& v = tasks::vocab();
  const policy::PolicyArch arch{v.size(), 24, 8, 32, v.eos()};
  const auto prompts = mef::make_expert_prompts(2);
  int wins = 0;
  const int seeds = 20;
  std::ostringstream gaps;
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t seed = 400 + s;
    const auto train = make_questions(TaskKind::kModularArithmetic, 4, 200, seed);
    const auto probe = make_questions(TaskKind::kModularArithmetic, 4, 50, seed + 7777, 100000);

    // A imitates correct traces, B always ends on a wrong answer
    std::vector<mef::MultiExpertSample> data;
    for (const auto& q : train) {
      data.push_back({q.question_id, 0, mef::concat(q, prompts[0]), tasks::render_trace(0, q, true)});
      data.push_back({q.question_id, 1, mef::concat(q, prompts[1]), tasks::render_trace(1, q, false)});
    }
    meml::TrainConfig c = cli::toy_config();
    c.num_experts = 2;
    c.master_seed = seed;
    c.enable_hsft = false;
    auto init_rng = meml::derive_rng(seed, {meml::label(meml::StreamTag::kPolicyInit)});
    const auto init = policy::init_policy(arch, init_rng, c.init_scale);
    const auto tuned = mef::train_mef(init, data, c);

    auto run = [&](bool iml) {
      meml::TrainConfig rc = c;
      rc.enable_iml = iml;
      riel::HardExampleBuffer buffer(rc.buffer_capacity);
      auto p = tuned;
      const int batch = rc.batch_size_rl;
      for (int step = 0; step < 200; ++step) {
        std::vector<Question> qs;
        for (int k = 0; k < batch; ++k) qs.push_back(train[(step * batch + k) % train.size()]);
        p = riel::rl_step(p, qs, prompts, buffer, rc, step).params;
      }
      double total = 0.0;
      for (const auto& q : probe) {
        total += policy::log_prob(p, mef::concat(q, prompts[1]), tasks::render_trace(0, q, true));
      }
      return total / static_cast<double>(probe.size());
    };
    const double with = run(true);
    const double without = run(false);
    wins += with > without;
    gaps << (s ? "," : "") << fmt(with - without, 3);
  }
  const double secs = seconds_since(t0);
  Verdict out;
  out.pass = wins >= 18 && secs < 600.0;
  out.detail = "IML raised log p(O+ | Q, P_B) on " + std::to_string(wins) + "/" + std::to_string(seeds) +
               " seeds (need 18), " + fmt(secs, 3) + "s; gaps " + gaps.str();
  return out;
}

// ---------------------------------------------------------------------------
// 5 & 6. toy ablation grid

struct GridSeed {
  double none = 0, moe = 0, full = 0;
  double moe_delta = 0, full_delta = 0;
};

std::optional<std::vector<GridSeed>> grid_results;
double grid_seconds = 0.0;

const std::vector<GridSeed>& run_grid(const Options& opt) {
  if (grid_results) return *grid_results;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<GridSeed> rows;
  const std::vector<cli::Stage> pipeline{cli::Stage::kGenerateData, cli::Stage::kSft, cli::Stage::kTrainRl,
                                         cli::Stage::kEval};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    meml::TrainConfig base = cli::toy_config();
    base.master_seed = seed;
    const auto plans = cli::build_experiment_grid(base, opt.work / "grid" / ("seed" + std::to_string(seed)));
    GridSeed row;
    for (const auto& p : plans) {
      if (p.name != "ablation-none" && p.name != "ablation-moe" && p.name != "ablation-moe-hsft-iml") continue;
      cli::ExperimentPlan plan = p;
      plan.pipeline = pipeline;
      const auto outcome = cli::run_plan(plan);
      if (outcome.exit_status != 0 || !outcome.eval_report) {
        std::cerr << "grid plan " << plan.name << " failed: " << outcome.error << '\n';
        continue;
      }
      const auto& r = *outcome.eval_report;
      const double best = r.per_expert_accuracy[r.best_expert()];
      if (p.name == "ablation-none") row.none = best;
      if (p.name == "ablation-moe") {
        row.moe = best;
        row.moe_delta = r.delta;
      }
      if (p.name == "ablation-moe-hsft-iml") {
        row.full = best;
        row.full_delta = r.delta;
      }
    }
    rows.push_back(row);
  }
  grid_seconds = seconds_since(t0);
  grid_results = rows;
  return *grid_results;
}

Verdict headline_direction(const Options& opt) {
  const auto& rows = run_grid(opt);
  int ok = 0;
  std::ostringstream s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    ok += r.full >= r.moe && r.moe >= r.none;
    s << (i ? "; " : "") << fmt(r.full, 3) << "/" << fmt(r.moe, 3) << "/" << fmt(r.none, 3);
  }
  Verdict v;
  v.pass = ok >= 8 && grid_seconds < 1800.0;
  v.detail = "full>=moe>=single on " + std::to_string(ok) + "/10 seeds (best-expert accuracy full/moe/single: " +
             s.str() + "), " + fmt(grid_seconds, 3) + "s";
  return v;
}

Verdict delta_direction(const Options& opt) {
  const auto& rows = run_grid(opt);
  int ok = 0;
  std::ostringstream s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    ok += r.moe_delta >= 0.0 && r.full_delta <= r.moe_delta;
    s << (i ? "; " : "") << fmt(r.moe_delta, 3) << "/" << fmt(r.full_delta, 3);
  }
  Verdict v;
  v.pass = ok >= 8;
  v.detail = "moe delta>=0 and full delta<=moe delta on " + std::to_string(ok) + "/10 seeds (moe/full: " + s.str() + ")";
  return v;
}

// ---------------------------------------------------------------------------
// 7. exact reward vs a text-level oracle

// Works on the rendered text only: tokens are separated by single spaces and
// the whitespace token renders as the empty string.
std::optional<std::string> oracle_answer(const std::string& text) {
  static const std::regex eos("(^| )<eos>( |$)");
  static const std::regex marker("(^| )=>(?= |$)");
  static const std::regex number("^[0-9]( [0-9])*$");
  static const std::regex parity("^(even|odd)$");
  std::string head = text;
  std::smatch m;
  if (std::regex_search(head, m, eos)) head = head.substr(0, m.position(0));
  std::optional<std::size_t> after;
  for (auto it = std::sregex_iterator(head.begin(), head.end(), marker); it != std::sregex_iterator(); ++it) {
    const std::size_t at = it->position(0) + it->str(1).size() + 2;
    after = at;
  }
  if (!after) return std::nullopt;
  std::string body = *after <= head.size() ? head.substr(*after) : "";
  const auto first = body.find_first_not_of(' ');
  if (first == std::string::npos) return std::nullopt;
  body = body.substr(first, body.find_last_not_of(' ') - first + 1);
  if (std::regex_match(body, parity)) return body;
  if (!std::regex_match(body, number)) return std::nullopt;
  body.erase(std::remove(body.begin(), body.end(), ' '), body.end());
  return body;
}

Verdict reward_contract() {
  const auto& v = tasks::vocab();
  auto rng = meml::derive_rng(7, {71});
  const std::vector<std::string> answers{"0", "1", "2", "3", "7", "10", "12", "21", "even", "odd"};
  const auto qs = make_questions(TaskKind::kChainedAddition, 1, 300, 70);
  const auto ps = make_questions(TaskKind::kParityOfString, 2, 300, 71);
  int agree = 0, in_range = 0, positives = 0;
  const int n = 10000;
  for (int t = 0; t < n; ++t) {
    const Question& base = (t % 2 ? qs : ps)[rng.below(300)];
    Question q = base;
    if (rng.bernoulli(0.3)) q.ground_truth_answer = answers[rng.below(answers.size())];
    TokenSeq r;
    switch (rng.below(4)) {
      case 0:  // uniform noise
        for (int k = static_cast<int>(rng.below(12)); k > 0; --k) r.push_back(static_cast<int>(rng.below(v.size())));
        break;
      case 1:  // noise over answer-like tokens
        for (int k = static_cast<int>(rng.below(10)); k > 0; --k) {
          const auto pick = rng.below(6);
          r.push_back(pick < 3 ? v.digit(static_cast<int>(rng.below(10)))
                      : pick == 3 ? v.answer_marker()
                      : pick == 4 ? v.whitespace()
                                  : v.eos());
        }
        break;
      default: {  // a teacher-like trace, then perturbed
        r = tasks::render_trace(static_cast<int>(rng.below(8)), base, rng.bernoulli(0.6));
        const int edits = static_cast<int>(rng.below(4));
        for (int e = 0; e < edits && !r.empty(); ++e) {
          const std::size_t at = rng.below(r.size() + 1);
          switch (rng.below(5)) {
            case 0: r.insert(r.begin() + at, v.whitespace()); break;
            case 1: if (at < r.size()) r.erase(r.begin() + at); break;
            case 2: r.insert(r.begin() + at, v.answer_marker()); break;
            case 3: r.insert(r.begin() + at, v.digit(static_cast<int>(rng.below(10)))); break;
            case 4: r.push_back(static_cast<int>(rng.below(v.size()))); break;
          }
        }
      }
    }
    const double got = tasks::reward(r, q);
    const auto expected_answer = oracle_answer(v.render(r));
    const double expected = (expected_answer && *expected_answer == q.ground_truth_answer) ? 1.0 : 0.0;
    agree += got == expected;
    in_range += got == 0.0 || got == 1.0;
    positives += expected == 1.0;
  }
  Verdict out;
  out.pass = agree == n && in_range == n;
  out.detail = std::to_string(agree) + "/" + std::to_string(n) + " agree with the text oracle (" +
               std::to_string(positives) + " rewarded); values in {0,1}: " + std::to_string(in_range) + "/" +
               std::to_string(n);
  return out;
}

// ---------------------------------------------------------------------------
// 8. end-to-end determinism through the command-line runner

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict determinism(const Options& opt) {
  meml::TrainConfig c = cli::toy_config();
  c.num_questions = 400;
  c.num_eval_questions = 100;
  c.epochs_sft = 5;
  c.master_seed = 8;
  const std::vector<cli::Stage> pipeline{cli::Stage::kGenerateData, cli::Stage::kSft, cli::Stage::kTrainRl,
                                         cli::Stage::kEval, cli::Stage::kAnalyzeOverlap};
  const fs::path root = opt.work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  bool runs_ok = true;
  for (const char* name : {"a", "b"}) {
    const cli::ExperimentPlan plan{std::string("determinism-") + name, c, pipeline, root / name};
    const fs::path plan_file = root / (std::string(name) + ".plan.json");
    cli::save_plan(plan_file, plan);
    int status;
    if (!opt.meml_binary.empty()) {
      const std::string cmd = "\"" + opt.meml_binary + "\" run-plan --plan \"" + plan_file.string() + "\"";
      status = std::system(cmd.c_str());
    } else {
      status = cli::run(cli::load_plan(plan_file));
    }
    runs_ok &= status == 0;
  }
  std::vector<std::string> compared;
  bool same = runs_ok;
  for (const char* f : {"metrics.log", "sft_metrics.log", "eval_report", "overlap_report", "checkpoints/rl.ckpt"}) {
    const auto a = root / "a" / f, b = root / "b" / f;
    const bool eq = fs::exists(a) && fs::exists(b) && slurp(a) == slurp(b) && !slurp(a).empty();
    same &= eq;
    compared.push_back(std::string(f) + (eq ? " identical" : " differs"));
  }
  Verdict v;
  v.pass = same;
  std::string list;
  for (const auto& s : compared) list += (list.empty() ? "" : ", ") + s;
  v.detail = std::string(opt.meml_binary.empty() ? "in-process" : "meml run-plan") + " x2: " + list;
  return v;
}

// ---------------------------------------------------------------------------
// 9. error-overlap analyzer on constructed teachers

Verdict overlap_analyzer() {
  const auto pool = tasks::make_teacher_pool(3, 0.2, 0.03, false, 9090);
  const auto qs = make_questions(TaskKind::kChainedAddition, 4, 1000, 91);
  std::vector<std::set<std::int64_t>> errors(3);
  for (const auto& q : qs) {
    for (int k = 0; k < 3; ++k) {
      if (tasks::reward(tasks::teacher_answer(pool[k], q), q) == 0.0) errors[k].insert(q.question_id);
    }
  }
  const auto r = eval::error_overlap(errors, 1000);
  // independent count of the triple intersection and of the corrected sets
  std::size_t triple = 0;
  for (auto id : errors[0]) triple += errors[1].contains(id) && errors[2].contains(id);
  bool identity = r.shared_errors.size() == triple;
  for (int i = 0; i < 3; ++i) {
    std::size_t everyone_wrong = 0;
    for (auto id : errors[i]) {
      bool all = true;
      for (int k = 0; k < 3; ++k) all &= k == i || errors[k].contains(id);
      everyone_wrong += all;
    }
    identity &= r.models[i].corrected_by_others == errors[i].size() - everyone_wrong;
  }
  Verdict v;
  v.pass = std::abs(r.shared_rate - 0.03) <= 0.02 && identity;
  v.detail = "triple overlap " + fmt(r.shared_rate, 3) + " (design 0.03 +/- 0.02); corrected-by-others identity " +
             (identity ? "holds" : "violated") + " for all 3 teachers";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--meml" && i + 1 < argc) opt.meml_binary = argv[++i];
    else if (a == "--only" && i + 1 < argc) opt.only = std::atoi(argv[++i]);
    else if (a == "--work" && i + 1 < argc) opt.work = argv[++i];
    else {
      std::cerr << "usage: acceptance [--meml path] [--only N] [--work dir]\n";
      return 2;
    }
  }
  fs::create_directories(opt.work);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"advantage algebra", advantage_algebra},
      {"buffer statistics", buffer_statistics},
      {"mutual-learning direction", mutual_learning_direction},
      {"toy ablation ordering", [&] { return headline_direction(opt); }},
      {"mutual learning closes the MV gap", [&] { return delta_direction(opt); }},
      {"exact-reward contract", reward_contract},
      {"determinism", [&] { return determinism(opt); }},
      {"error-overlap analyzer", overlap_analyzer},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (opt.only && opt.only != id) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
