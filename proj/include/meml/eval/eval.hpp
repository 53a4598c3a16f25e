// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Greedy-decoding evaluation, majority voting across experts, and the
// error-overlap analysis of a set of models.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "meml/core/types.hpp"
#include "meml/policy/policy.hpp"

namespace meml::eval {

struct AnswerRow {
  std::int64_t question_id = 0;
  int expert_id = 0;   // -1 for the majority-vote row
  std::string answer;  // empty when no well-formed answer was extracted
  bool correct = false;
};

struct EvalReport {
  std::vector<double> per_expert_accuracy;
  double majority_vote_accuracy = 0.0;
  double delta = 0.0;  // majority vote minus best single expert
  std::vector<AnswerRow> per_question_answers;
  std::vector<AnswerRow> majority_answers;

  int best_expert() const;
};

// Plurality over the experts' answers for one question. Missing answers do
// not vote. A tied plurality goes to the answer given by the most accurate
// expert (expert_accuracy), then to the lowest expert id. Returns nullopt
// when no expert produced an answer.
std::optional<std::string> majority_vote(const std::vector<std::optional<std::string>>& answers,
                                         const std::vector<double>& expert_accuracy);

// One greedy decode per (question, expert).
EvalReport evaluate(const policy::PolicyParameters& params, const std::vector<Question>& questions,
                    const std::vector<ExpertPrompt>& prompts);

// Rows per expert, then MV and delta rows, then the raw per-question table.
nlohmann::ordered_json to_json(const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);

struct ModelOverlap {
  std::size_t errors = 0;
  double error_rate = 0.0;
  std::size_t corrected_by_others = 0;
  double corrected_rate = 0.0;  // over this model's errors; 0 when it has none
};

struct OverlapReport {
  std::size_t total = 0;
  std::vector<ModelOverlap> models;
  std::set<std::int64_t> shared_errors;  // errors common to every model
  double shared_rate = 0.0;
};

// error_sets[i] holds the question ids model i gets wrong, each in [0, total).
OverlapReport error_overlap(const std::vector<std::set<std::int64_t>>& error_sets,
                            std::int64_t total);

nlohmann::ordered_json to_json(const OverlapReport& report);

}  // namespace meml::eval
