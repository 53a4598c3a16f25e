// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reinforced inter-expert learning.
//
// Per question and expert i, G responses are sampled from pi(. | Q, P_i) and
// scored with the exact-match reward. Advantages are mean-centred inside each
// expert group. The policy-gradient term is the literal score-function loss
//
//   L_grpo = (1/N) sum_i  -(1/G) sum_g  log pi(O_g^i | Q, P_i) * max(A_g^i, 0)
//
// with no importance ratio and no clipping. The mutual-learning term raises
// the weakest expert's likelihood of the strongest expert's correct answers:
//
//   L_kl = mean_{o in O+} [ log p(o | Q, P_best) - log p(o | Q, P_worst) ]
//
// where the P_best branch is held constant. Hard questions (more than K of G
// wrong) enter a bounded buffer with probability K/G; a full buffer is
// flushed through a ground-truth SFT term on the same step. The step
// objective is L_grpo + lambda_kl * L_kl + lambda_sft * L_sft.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <utility>
#include <vector>

#include "meml/core/config.hpp"
#include "meml/core/metrics.hpp"
#include "meml/core/rng.hpp"
#include "meml/core/types.hpp"
#include "meml/mef/mef.hpp"
#include "meml/policy/policy.hpp"

namespace meml::riel {

using mef::LossAndGrad;

struct RolloutGroup {
  std::int64_t question_id = 0;
  int expert_id = 0;
  TokenSeq conditioning;
  std::vector<TokenSeq> responses;
  std::vector<double> rewards;
  std::vector<double> log_probs;
  double mean_reward = 0.0;
};

struct AdvantageSet {
  std::vector<double> advantages;
};

struct MutualLearningSelection {
  int best_expert = 0;
  int worst_expert = 0;
  std::vector<TokenSeq> positive_responses;  // reward-1 responses of the best expert

  bool kl_applicable() const { return !positive_responses.empty() && best_expert != worst_expert; }
};

struct HardExample {
  std::int64_t question_id = 0;
  int expert_id = 0;
  TokenSeq conditioning;
  TokenSeq target;  // ground-truth trace
};

// Bounded store; grows only through buffer_admit and empties only on flush.
class HardExampleBuffer {
 public:
  explicit HardExampleBuffer(int capacity);

  int capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool full() const { return entries_.size() >= static_cast<std::size_t>(capacity_); }
  const std::vector<HardExample>& entries() const { return entries_; }

 private:
  friend bool buffer_admit(HardExampleBuffer&, const Question&, const ExpertPrompt&, int,
                           const TrainConfig&, RandomStream&);
  friend std::vector<HardExample> drain(HardExampleBuffer&);

  int capacity_;
  std::vector<HardExample> entries_;
};

// Seed coordinates of one RL step. Each rollout draws from
// {kRollout, step, question_id, expert_id, g}.
struct StepSeed {
  std::uint64_t master_seed = 0;
  std::int64_t step = 0;
};

std::vector<RolloutGroup> sample_rollouts(const policy::PolicyParameters& params,
                                          const Question& q,
                                          const std::vector<ExpertPrompt>& prompts, int group_size,
                                          const StepSeed& seed);

AdvantageSet compute_advantages(const RolloutGroup& group);

// Loss value from precomputed log-probabilities (one vector per group).
double grpo_objective(const std::vector<std::vector<double>>& log_probs,
                      const std::vector<AdvantageSet>& advantages);

// Gradient flows only through the log-probabilities.
LossAndGrad grpo_loss(const std::vector<RolloutGroup>& groups,
                      const std::vector<AdvantageSet>& advantages,
                      const policy::PolicyParameters& params);

// Argmax/argmin of mean reward; ties go to the lowest expert id.
MutualLearningSelection select_experts(const std::vector<RolloutGroup>& groups);

// mean(log p under best - log p under worst) over the positive responses.
double kl_objective(const std::vector<double>& log_probs_best,
                    const std::vector<double>& log_probs_worst);

// Requires selection.kl_applicable(); the caller skips the term otherwise.
LossAndGrad kl_mutual_loss(const MutualLearningSelection& selection, const Question& q,
                           const std::vector<ExpertPrompt>& prompts,
                           const policy::PolicyParameters& params);

// Admits (Q, P_i, ground truth) with probability K/G when incorrect_count > K
// and the buffer has room. Returns whether the entry was added.
bool buffer_admit(HardExampleBuffer& buffer, const Question& q, const ExpertPrompt& prompt,
                  int incorrect_count, const TrainConfig& config, RandomStream& rng);

// Removes and returns every entry.
std::vector<HardExample> drain(HardExampleBuffer& buffer);

// Sum over entries of -log p(target | conditioning), with gradient.
LossAndGrad hard_example_loss(const std::vector<HardExample>& entries,
                              const policy::PolicyParameters& params);

// Standalone flush: one SGD step of lr_rl on lambda_sft * L_sft, then empties
// the buffer. Requires a full buffer. Returns the new parameters and L_sft.
std::pair<policy::PolicyParameters, double> buffer_flush_sft(HardExampleBuffer& buffer,
                                                              const policy::PolicyParameters& params,
                                                              const TrainConfig& config);

struct RlStepResult {
  policy::PolicyParameters params;
  LossBreakdown losses;
  std::vector<double> mean_reward_per_expert;
  std::size_t buffer_fill = 0;  // after admissions, before any flush
  bool flushed = false;
  std::vector<std::vector<RolloutGroup>> rollouts;  // per question
};

// One combined parameter step over a batch of questions. L_grpo and L_kl are
// averaged over the batch; L_sft is summed over the flushed buffer.
RlStepResult rl_step(const policy::PolicyParameters& params, const std::vector<Question>& batch,
                     const std::vector<ExpertPrompt>& prompts, HardExampleBuffer& buffer,
                     const TrainConfig& config, std::int64_t step);

struct RlRunResult {
  policy::PolicyParameters params;
  std::vector<StepRecord> records;
  std::int64_t steps = 0;
};

// epochs_rl passes over `questions` in batches of batch_size_rl. Order is
// reshuffled each epoch from {kRlShuffle, epoch}.
RlRunResult train_rl(const policy::PolicyParameters& params, const std::vector<Question>& questions,
                     const std::vector<ExpertPrompt>& prompts, const TrainConfig& config,
                     MetricsLog* log = nullptr, std::ostream* rollout_dump = nullptr);

// Optional debugging dump: one JSON line per rollout
// {question_id, expert_id, g, response, reward}.
void write_rollouts(std::ostream& out, const std::vector<RolloutGroup>& groups);

}  // namespace meml::riel
