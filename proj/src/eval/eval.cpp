// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/eval/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include "meml/mef/mef.hpp"
#include "meml/tasks/tasks.hpp"

namespace meml::eval {

int EvalReport::best_expert() const {
  if (per_expert_accuracy.empty()) return -1;
  return static_cast<int>(std::max_element(per_expert_accuracy.begin(), per_expert_accuracy.end()) -
                          per_expert_accuracy.begin());
}

std::optional<std::string> majority_vote(const std::vector<std::optional<std::string>>& answers,
                                         const std::vector<double>& expert_accuracy) {
  if (answers.size() != expert_accuracy.size())
    throw std::invalid_argument("majority_vote: one accuracy per expert required");
  std::map<std::string, int> counts;
  for (const auto& a : answers) {
    if (a) ++counts[*a];
  }
  if (counts.empty()) return std::nullopt;
  int top = 0;
  for (const auto& [answer, c] : counts) top = std::max(top, c);
  // Among experts backing a top answer, the most accurate wins; the scan
  // order makes the lowest id win residual ties.
  int chosen = -1;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (!answers[i] || counts[*answers[i]] != top) continue;
    if (chosen < 0 || expert_accuracy[i] > expert_accuracy[chosen]) chosen = static_cast<int>(i);
  }
  return *answers[chosen];
}

EvalReport evaluate(const policy::PolicyParameters& params, const std::vector<Question>& questions,
                    const std::vector<ExpertPrompt>& prompts) {
  if (prompts.empty()) throw std::invalid_argument("evaluate: no experts");
  EvalReport report;
  const std::size_t n = prompts.size();
  report.per_expert_accuracy.assign(n, 0.0);
  if (questions.empty()) return report;

  std::vector<std::vector<std::optional<std::string>>> answers(questions.size());
  for (std::size_t j = 0; j < questions.size(); ++j) {
    const Question& q = questions[j];
    if (q.ground_truth_answer.empty()) throw std::invalid_argument("evaluate: missing ground truth");
    for (std::size_t i = 0; i < n; ++i) {
      const TokenSeq cond = mef::concat(q, prompts[i]);
      const TokenSeq out =
          policy::greedy_decode(params, cond, policy::max_output_len(params.arch, cond.size()));
      auto answer = tasks::extract_answer(out);
      const bool correct = answer && *answer == q.ground_truth_answer;
      report.per_expert_accuracy[i] += correct ? 1.0 : 0.0;
      report.per_question_answers.push_back(
          {q.question_id, prompts[i].expert_id, answer.value_or(""), correct});
      answers[j].push_back(std::move(answer));
    }
  }
  const double m = static_cast<double>(questions.size());
  for (double& a : report.per_expert_accuracy) a /= m;

  double mv_correct = 0.0;
  for (std::size_t j = 0; j < questions.size(); ++j) {
    const auto mv = majority_vote(answers[j], report.per_expert_accuracy);
    const bool correct = mv && *mv == questions[j].ground_truth_answer;
    mv_correct += correct ? 1.0 : 0.0;
    report.majority_answers.push_back({questions[j].question_id, -1, mv.value_or(""), correct});
  }
  report.majority_vote_accuracy = mv_correct / m;
  report.delta = report.majority_vote_accuracy -
                 *std::max_element(report.per_expert_accuracy.begin(),
                                   report.per_expert_accuracy.end());
  return report;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.per_expert_accuracy.size(); ++i) {
    rows.push_back({{"row", "Expert" + std::to_string(i)},
                    {"accuracy", report.per_expert_accuracy[i]}});
  }
  rows.push_back({{"row", "MV"}, {"accuracy", report.majority_vote_accuracy}});
  rows.push_back({{"row", "Delta"}, {"accuracy", report.delta}});
  j["summary"] = rows;
  j["best_expert"] = report.best_expert();
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const AnswerRow& r : report.per_question_answers) {
    table.push_back({{"question_id", r.question_id},
                     {"expert_id", r.expert_id},
                     {"answer", r.answer},
                     {"correct", r.correct}});
  }
  for (const AnswerRow& r : report.majority_answers) {
    table.push_back({{"question_id", r.question_id},
                     {"expert_id", "MV"},
                     {"answer", r.answer},
                     {"correct", r.correct}});
  }
  j["per_question"] = table;
  return j;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
}

OverlapReport error_overlap(const std::vector<std::set<std::int64_t>>& error_sets,
                            std::int64_t total) {
  if (total <= 0) throw std::invalid_argument("error_overlap: total must be positive");
  for (const auto& s : error_sets) {
    for (std::int64_t id : s) {
      if (id < 0 || id >= total)
        throw std::out_of_range("error_overlap: question id " + std::to_string(id) +
                                " outside [0, " + std::to_string(total) + ")");
    }
  }
  OverlapReport report;
  report.total = static_cast<std::size_t>(total);
  if (!error_sets.empty()) {
    report.shared_errors = error_sets.front();
    for (std::size_t i = 1; i < error_sets.size(); ++i) {
      std::set<std::int64_t> next;
      std::set_intersection(report.shared_errors.begin(), report.shared_errors.end(),
                            error_sets[i].begin(), error_sets[i].end(),
                            std::inserter(next, next.end()));
      report.shared_errors = std::move(next);
    }
  }
  report.shared_rate = static_cast<double>(report.shared_errors.size()) / static_cast<double>(total);
  for (std::size_t i = 0; i < error_sets.size(); ++i) {
    ModelOverlap m;
    m.errors = error_sets[i].size();
    m.error_rate = static_cast<double>(m.errors) / static_cast<double>(total);
    for (std::int64_t id : error_sets[i]) {
      for (std::size_t k = 0; k < error_sets.size(); ++k) {
        if (k != i && !error_sets[k].contains(id)) {
          ++m.corrected_by_others;
          break;
        }
      }
    }
    m.corrected_rate =
        m.errors ? static_cast<double>(m.corrected_by_others) / static_cast<double>(m.errors) : 0.0;
    report.models.push_back(m);
  }
  return report;
}

nlohmann::ordered_json to_json(const OverlapReport& report) {
  nlohmann::ordered_json j;
  j["total"] = report.total;
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.models.size(); ++i) {
    const ModelOverlap& m = report.models[i];
    models.push_back({{"model", i},
                      {"errors", m.errors},
                      {"error_rate", m.error_rate},
                      {"corrected_by_others", m.corrected_by_others},
                      {"corrected_rate", m.corrected_rate}});
  }
  j["models"] = models;
  j["error_overlap"] = report.shared_errors.size();
  j["error_overlap_rate"] = report.shared_rate;
  return j;
}

}  // namespace meml::eval
