// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Domain values shared by every module.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace meml {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

enum class TaskKind { kModularArithmetic, kChainedAddition, kParityOfString };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view name);

// Persona instruction appended after a question. expert_id indexes [0, N).
struct ExpertPrompt {
  int expert_id = 0;
  TokenSeq instruction;

  friend bool operator==(const ExpertPrompt&, const ExpertPrompt&) = default;
};

struct Question {
  std::int64_t question_id = 0;
  TaskKind kind = TaskKind::kModularArithmetic;
  TokenSeq prompt_tokens;
  std::string ground_truth_answer;

  friend bool operator==(const Question&, const Question&) = default;
};

// One optimization step's objective, split by term. Terms skipped on a step are 0.
struct LossBreakdown {
  double grpo_loss = 0.0;
  double kl_loss = 0.0;
  double sft_loss = 0.0;
  double total_loss = 0.0;

  static LossBreakdown combine(double grpo, double kl, double sft, double lambda_kl,
                               double lambda_sft);

  bool is_additive(double lambda_kl, double lambda_sft, double tol = 1e-9) const;
};

}  // namespace meml
