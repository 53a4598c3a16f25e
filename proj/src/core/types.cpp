// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace meml {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kModularArithmetic:
      return "modular-arithmetic";
    case TaskKind::kChainedAddition:
      return "chained-addition";
    case TaskKind::kParityOfString:
      return "parity-of-string";
  }
  return "unknown";
}

TaskKind task_kind_from_string(std::string_view name) {
  if (name == "modular-arithmetic") return TaskKind::kModularArithmetic;
  if (name == "chained-addition") return TaskKind::kChainedAddition;
  if (name == "parity-of-string") return TaskKind::kParityOfString;
  throw std::invalid_argument("unknown task kind: " + std::string(name));
}

LossBreakdown LossBreakdown::combine(double grpo, double kl, double sft, double lambda_kl,
                                     double lambda_sft) {
  LossBreakdown out;
  out.grpo_loss = grpo;
  out.kl_loss = kl;
  out.sft_loss = sft;
  out.total_loss = grpo + lambda_kl * kl + lambda_sft * sft;
  return out;
}

bool LossBreakdown::is_additive(double lambda_kl, double lambda_sft, double tol) const {
  const double expected = grpo_loss + lambda_kl * kl_loss + lambda_sft * sft_loss;
  return std::abs(total_loss - expected) <= tol * std::max(1.0, std::abs(expected));
}

}  // namespace meml
