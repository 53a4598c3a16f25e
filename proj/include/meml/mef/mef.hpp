// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-expert fine-tuning: one shared policy learns every teacher's answers,
// each conditioned on that teacher's expert prompt placed after the question.

#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "meml/core/config.hpp"
#include "meml/core/metrics.hpp"
#include "meml/core/types.hpp"
#include "meml/policy/policy.hpp"
#include "meml/tasks/tasks.hpp"

namespace meml::mef {

struct MultiExpertSample {
  std::int64_t question_id = 0;
  int expert_id = 0;
  TokenSeq conditioning;  // question tokens, then the expert instruction
  TokenSeq target;        // teacher answer, ends with end-of-sequence
};

// "expert E<i> answer" for i in [0, n).
std::vector<ExpertPrompt> make_expert_prompts(int n);

TokenSeq concat(const Question& q, const ExpertPrompt& prompt);

// Sample (j, i) sits at index j * N + i.
std::vector<MultiExpertSample> build_dataset(const std::vector<Question>& questions,
                                             const std::vector<ExpertPrompt>& prompts,
                                             const std::vector<tasks::TeacherProfile>& teachers);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Sum over the batch of -log p(target | conditioning), with its gradient.
LossAndGrad sft_loss(const policy::PolicyParameters& params,
                     const std::vector<MultiExpertSample>& batch);

// Per-sample mean of the SFT loss over a dataset (no gradient).
double mean_sft_loss(const policy::PolicyParameters& params,
                     const std::vector<MultiExpertSample>& dataset);

// epochs_sft passes of shuffled minibatch SGD with lr_sft on the batch-mean
// loss. Shuffles draw from {kSftShuffle, epoch}.
policy::PolicyParameters train_mef(const policy::PolicyParameters& params,
                                   const std::vector<MultiExpertSample>& dataset,
                                   const TrainConfig& config, MetricsLog* log = nullptr);

}  // namespace meml::mef
