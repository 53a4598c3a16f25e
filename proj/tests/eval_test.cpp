// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "meml/eval/eval.hpp"
#include "meml/mef/mef.hpp"
#include "meml/tasks/tasks.hpp"
#include "test_support.hpp"

namespace {

using meml::Question;
using meml::TokenSeq;
namespace eval = meml::eval;
namespace policy = meml::policy;
namespace tasks = meml::tasks;

using Answers = std::vector<std::optional<std::string>>;

// Emits tokens[k] at position start + k regardless of the input.
policy::PolicyParameters scripted_policy(int start, const TokenSeq& tokens) {
  const auto& v = tasks::vocab();
  const int context = start + static_cast<int>(tokens.size()) + 2;
  const policy::PolicyArch arch{v.size(), context, 1, context, v.eos()};
  auto p = policy::zero_policy(arch);
  const auto l = policy::layout_of(arch);
  for (int pos = 0; pos < context; ++pos) p.theta[l.position + pos * context + pos] = 3.0;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const int pos = start + static_cast<int>(k);
    p.theta[l.w2 + tokens[k] * context + pos] = 10.0;
  }
  return p;
}

std::vector<Question> questions_with_answer_three(int count) {
  std::vector<Question> qs;
  for (int a = 0; a < 10 && static_cast<int>(qs.size()) < count; ++a) {
    for (int b = 0; b < 10 && static_cast<int>(qs.size()) < count; ++b) {
      if ((a + b) % 5 != 3) continue;
      Question q;
      q.question_id = static_cast<std::int64_t>(qs.size());
      q.prompt_tokens = tasks::vocab().tokenize(std::to_string(a) + " + " + std::to_string(b) + " mod 5 ?");
      q.ground_truth_answer = "3";
      qs.push_back(q);
    }
  }
  return qs;
}

TEST(MajorityVote, Plurality) {
  EXPECT_EQ(eval::majority_vote(Answers{"3", "5", "3"}, {0.5, 0.9, 0.1}), "3");
}

TEST(MajorityVote, TieGoesToMostAccurateExpert) {
  EXPECT_EQ(eval::majority_vote(Answers{"3", "5"}, {0.8, 0.6}), "3");
  EXPECT_EQ(eval::majority_vote(Answers{"3", "5"}, {0.6, 0.8}), "5");
  // equal accuracy: lowest id
  EXPECT_EQ(eval::majority_vote(Answers{"5", "3"}, {0.7, 0.7}), "5");
}

TEST(MajorityVote, MissingAnswersDoNotVote) {
  EXPECT_EQ(eval::majority_vote(Answers{std::nullopt, std::nullopt, "4"}, {0.9, 0.9, 0.1}), "4");
  EXPECT_EQ(eval::majority_vote(Answers{std::nullopt, std::nullopt}, {0.9, 0.9}), std::nullopt);
  EXPECT_THROW(eval::majority_vote(Answers{"1"}, {0.1, 0.2}), std::invalid_argument);
}

TEST(MajorityVote, AgreesWithExhaustiveCount) {
  auto rng = meml::derive_rng(5, {77});
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(5));
    Answers answers;
    std::vector<double> acc;
    for (int i = 0; i < n; ++i) {
      const auto r = rng.below(4);
      answers.push_back(r == 3 ? std::nullopt : std::optional<std::string>(std::to_string(r)));
      acc.push_back(static_cast<double>(rng.below(3)) / 2.0);
    }
    // oracle: highest count, then highest accuracy among backers, then lowest id
    std::optional<std::string> expected;
    int best_count = 0, best_id = -1;
    for (int i = 0; i < n; ++i) {
      if (!answers[i]) continue;
      const int count = static_cast<int>(std::count(answers.begin(), answers.end(), answers[i]));
      if (count > best_count || (count == best_count && acc[i] > acc[best_id])) {
        best_count = count;
        best_id = i;
        expected = answers[i];
      }
    }
    const auto got = eval::majority_vote(answers, acc);
    ASSERT_EQ(got, expected);
    if (got) {
      ASSERT_NE(std::find(answers.begin(), answers.end(), got), answers.end());
    }
  }
}

TEST(Evaluate, PerfectPolicy) {
  const auto qs = questions_with_answer_three(12);
  const auto prompts = meml::mef::make_expert_prompts(3);
  const int start = static_cast<int>(meml::mef::concat(qs[0], prompts[0]).size());
  const auto& v = tasks::vocab();
  const auto p = scripted_policy(start, {v.answer_marker(), v.digit(3), v.eos()});
  const auto report = eval::evaluate(p, qs, prompts);
  EXPECT_EQ(report.per_expert_accuracy, (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(report.majority_vote_accuracy, 1.0);
  EXPECT_EQ(report.delta, 0.0);
  EXPECT_EQ(report.per_question_answers.size(), qs.size() * 3);
  EXPECT_EQ(report.majority_answers.size(), qs.size());
}

TEST(Evaluate, DeterministicAndConsistent) {
  auto rng = meml::derive_rng(2, {2});
  const auto qs = tasks::generate_questions({meml::TaskKind::kModularArithmetic, 1}, 30, rng);
  const auto prompts = meml::mef::make_expert_prompts(3);
  const auto p = meml::testing::random_policy(meml::testing::small_arch(24), 3, 1.0);
  const auto a = eval::evaluate(p, qs, prompts);
  const auto b = eval::evaluate(p, qs, prompts);
  EXPECT_EQ(eval::to_json(a).dump(), eval::to_json(b).dump());
  for (std::size_t i = 0; i < 3; ++i) {
    double correct = 0.0;
    for (const auto& row : a.per_question_answers) correct += (row.expert_id == static_cast<int>(i)) && row.correct;
    EXPECT_DOUBLE_EQ(a.per_expert_accuracy[i], correct / qs.size());
  }
  EXPECT_DOUBLE_EQ(a.delta, a.majority_vote_accuracy -
                                *std::max_element(a.per_expert_accuracy.begin(), a.per_expert_accuracy.end()));
}

TEST(Evaluate, ReportLayout) {
  eval::EvalReport r;
  r.per_expert_accuracy = {0.5, 0.75};
  r.majority_vote_accuracy = 0.8;
  r.delta = 0.05;
  const auto j = eval::to_json(r);
  ASSERT_EQ(j["summary"].size(), 4u);
  EXPECT_EQ(j["summary"][0]["row"], "Expert0");
  EXPECT_EQ(j["summary"][2]["row"], "MV");
  EXPECT_EQ(j["summary"][3]["row"], "Delta");
  EXPECT_EQ(j["best_expert"], 1);
}

TEST(Overlap, Example) {
  const auto r = eval::error_overlap({{1, 2, 3}, {2, 3, 4}, {3, 5}}, 10);
  EXPECT_EQ(r.shared_errors, (std::set<std::int64_t>{3}));
  EXPECT_DOUBLE_EQ(r.shared_rate, 0.1);
  EXPECT_EQ(r.models[0].errors, 3u);
  EXPECT_EQ(r.models[0].corrected_by_others, 2u);
  EXPECT_DOUBLE_EQ(r.models[0].corrected_rate, 2.0 / 3.0);
}

TEST(Overlap, IdenticalSets) {
  const std::set<std::int64_t> s{0, 4, 7};
  const auto r = eval::error_overlap({s, s, s}, 8);
  EXPECT_EQ(r.shared_errors, s);
  for (const auto& m : r.models) EXPECT_EQ(m.corrected_by_others, 0u);
}

TEST(Overlap, DisjointSets) {
  const auto r = eval::error_overlap({{0, 1}, {2}, {3, 4, 5}}, 6);
  EXPECT_TRUE(r.shared_errors.empty());
  for (const auto& m : r.models) EXPECT_DOUBLE_EQ(m.corrected_rate, 1.0);
}

TEST(Overlap, RejectsOutOfRangeIds) {
  EXPECT_THROW(eval::error_overlap({{0, 10}}, 10), std::out_of_range);
  EXPECT_THROW(eval::error_overlap({{-1}}, 10), std::out_of_range);
}

TEST(Overlap, CorrectedCountsFollowSetIdentity) {
  auto rng = meml::derive_rng(8, {3});
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(3));
    std::vector<std::set<std::int64_t>> sets(n);
    for (auto& s : sets) {
      for (int id = 0; id < 50; ++id) {
        if (rng.bernoulli(0.3)) s.insert(id);
      }
    }
    const auto r = eval::error_overlap(sets, 50);
    for (int i = 0; i < n; ++i) {
      // errors of i that every other model shares
      std::size_t uncorrectable = 0;
      for (auto id : sets[i]) {
        bool all = true;
        for (int k = 0; k < n; ++k) all &= k == i || sets[k].contains(id);
        uncorrectable += all;
      }
      ASSERT_EQ(r.models[i].corrected_by_others, sets[i].size() - uncorrectable);
    }
  }
}

}  // namespace
