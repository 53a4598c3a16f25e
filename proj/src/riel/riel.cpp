// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/riel/riel.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "meml/tasks/tasks.hpp"

namespace meml::riel {

HardExampleBuffer::HardExampleBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("HardExampleBuffer: capacity must be >= 1");
}

std::vector<RolloutGroup> sample_rollouts(const policy::PolicyParameters& params,
                                          const Question& q,
                                          const std::vector<ExpertPrompt>& prompts, int group_size,
                                          const StepSeed& seed) {
  if (group_size < 2) throw std::invalid_argument("sample_rollouts: G must be >= 2");
  if (prompts.empty()) throw std::invalid_argument("sample_rollouts: no experts");
  std::vector<RolloutGroup> groups;
  groups.reserve(prompts.size());
  for (const ExpertPrompt& prompt : prompts) {
    RolloutGroup group;
    group.question_id = q.question_id;
    group.expert_id = prompt.expert_id;
    group.conditioning = mef::concat(q, prompt);
    const int max_len = policy::max_output_len(params.arch, group.conditioning.size());
    for (int g = 0; g < group_size; ++g) {
      RandomStream rng = derive_rng(
          seed.master_seed,
          {label(StreamTag::kRollout), static_cast<std::uint64_t>(seed.step),
           static_cast<std::uint64_t>(q.question_id), static_cast<std::uint64_t>(prompt.expert_id),
           static_cast<std::uint64_t>(g)});
      TokenSeq response = policy::sample(params, group.conditioning, rng, max_len);
      group.rewards.push_back(tasks::reward(response, q));
      group.log_probs.push_back(policy::log_prob(params, group.conditioning, response));
      group.responses.push_back(std::move(response));
    }
    group.mean_reward = std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0) /
                        static_cast<double>(group_size);
    groups.push_back(std::move(group));
  }
  return groups;
}

AdvantageSet compute_advantages(const RolloutGroup& group) {
  if (group.rewards.empty()) throw std::invalid_argument("compute_advantages: empty group");
  const double mean = std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0) /
                      static_cast<double>(group.rewards.size());
  AdvantageSet out;
  out.advantages.reserve(group.rewards.size());
  for (double r : group.rewards) out.advantages.push_back(r - mean);
  return out;
}

double grpo_objective(const std::vector<std::vector<double>>& log_probs,
                      const std::vector<AdvantageSet>& advantages) {
  if (log_probs.size() != advantages.size() || log_probs.empty())
    throw std::invalid_argument("grpo_objective: one advantage set per group required");
  double total = 0.0;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    const auto& lp = log_probs[i];
    const auto& adv = advantages[i].advantages;
    if (lp.size() != adv.size() || lp.empty())
      throw std::invalid_argument("grpo_objective: group size mismatch");
    double expert = 0.0;
    for (std::size_t g = 0; g < lp.size(); ++g) expert -= lp[g] * std::max(adv[g], 0.0);
    total += expert / static_cast<double>(lp.size());
  }
  return total / static_cast<double>(log_probs.size());
}

LossAndGrad grpo_loss(const std::vector<RolloutGroup>& groups,
                      const std::vector<AdvantageSet>& advantages,
                      const policy::PolicyParameters& params) {
  if (groups.size() != advantages.size() || groups.empty())
    throw std::invalid_argument("grpo_loss: one advantage set per group required");
  LossAndGrad out{0.0, std::vector<double>(params.theta.size(), 0.0)};
  const double inv_n = 1.0 / static_cast<double>(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const RolloutGroup& group = groups[i];
    const auto& adv = advantages[i].advantages;
    if (adv.size() != group.responses.size() || adv.empty())
      throw std::invalid_argument("grpo_loss: advantage count does not match group size");
    const double inv_g = 1.0 / static_cast<double>(adv.size());
    for (std::size_t g = 0; g < adv.size(); ++g) {
      const double w = std::max(adv[g], 0.0) * inv_g * inv_n;
      if (w == 0.0) continue;
      const double lp = policy::accumulate_grad_log_prob(params, group.conditioning,
                                                         group.responses[g], -w, out.grad);
      out.loss -= w * lp;
    }
  }
  return out;
}

MutualLearningSelection select_experts(const std::vector<RolloutGroup>& groups) {
  if (groups.empty()) throw std::invalid_argument("select_experts: no groups");
  std::size_t best = 0, worst = 0;
  const auto before = [&](std::size_t a, std::size_t b) {
    return groups[a].expert_id < groups[b].expert_id;
  };
  for (std::size_t i = 1; i < groups.size(); ++i) {
    const double m = groups[i].mean_reward;
    if (m > groups[best].mean_reward || (m == groups[best].mean_reward && before(i, best))) best = i;
    if (m < groups[worst].mean_reward || (m == groups[worst].mean_reward && before(i, worst)))
      worst = i;
  }
  MutualLearningSelection sel;
  sel.best_expert = groups[best].expert_id;
  sel.worst_expert = groups[worst].expert_id;
  const RolloutGroup& g = groups[best];
  for (std::size_t k = 0; k < g.responses.size(); ++k) {
    if (g.rewards[k] == 1.0) sel.positive_responses.push_back(g.responses[k]);
  }
  return sel;
}

double kl_objective(const std::vector<double>& log_probs_best,
                    const std::vector<double>& log_probs_worst) {
  if (log_probs_best.size() != log_probs_worst.size() || log_probs_best.empty())
    throw std::invalid_argument("kl_objective: need matching, non-empty log-prob vectors");
  double total = 0.0;
  for (std::size_t k = 0; k < log_probs_best.size(); ++k)
    total += log_probs_best[k] - log_probs_worst[k];
  return total / static_cast<double>(log_probs_best.size());
}

namespace {

const ExpertPrompt& prompt_for(const std::vector<ExpertPrompt>& prompts, int expert_id) {
  for (const ExpertPrompt& p : prompts) {
    if (p.expert_id == expert_id) return p;
  }
  throw std::invalid_argument("no prompt for expert " + std::to_string(expert_id));
}

}  // namespace

LossAndGrad kl_mutual_loss(const MutualLearningSelection& selection, const Question& q,
                           const std::vector<ExpertPrompt>& prompts,
                           const policy::PolicyParameters& params) {
  if (!selection.kl_applicable())
    throw std::invalid_argument(
        "kl_mutual_loss: needs non-empty positive responses and distinct best/worst experts");
  const TokenSeq cond_best = mef::concat(q, prompt_for(prompts, selection.best_expert));
  const TokenSeq cond_worst = mef::concat(q, prompt_for(prompts, selection.worst_expert));
  LossAndGrad out{0.0, std::vector<double>(params.theta.size(), 0.0)};
  const double inv = 1.0 / static_cast<double>(selection.positive_responses.size());
  for (const TokenSeq& o : selection.positive_responses) {
    const double lp_best = policy::log_prob(params, cond_best, o);
    const double lp_worst = policy::accumulate_grad_log_prob(params, cond_worst, o, -inv, out.grad);
    out.loss += inv * (lp_best - lp_worst);
  }
  return out;
}

bool buffer_admit(HardExampleBuffer& buffer, const Question& q, const ExpertPrompt& prompt,
                  int incorrect_count, const TrainConfig& config, RandomStream& rng) {
  if (incorrect_count < 0 || incorrect_count > config.group_size)
    throw std::invalid_argument("buffer_admit: incorrect_count outside [0, G]");
  if (incorrect_count <= config.incorrect_threshold || buffer.full()) return false;
  const double p = static_cast<double>(config.incorrect_threshold) /
                   static_cast<double>(config.group_size);
  if (!rng.bernoulli(p)) return false;
  buffer.entries_.push_back(
      {q.question_id, prompt.expert_id, mef::concat(q, prompt), tasks::reference_trace(q)});
  return true;
}

std::vector<HardExample> drain(HardExampleBuffer& buffer) {
  std::vector<HardExample> out;
  out.swap(buffer.entries_);
  return out;
}

LossAndGrad hard_example_loss(const std::vector<HardExample>& entries,
                              const policy::PolicyParameters& params) {
  LossAndGrad out{0.0, std::vector<double>(params.theta.size(), 0.0)};
  for (const HardExample& e : entries) {
    out.loss -= policy::accumulate_grad_log_prob(params, e.conditioning, e.target, -1.0, out.grad);
  }
  return out;
}

std::pair<policy::PolicyParameters, double> buffer_flush_sft(HardExampleBuffer& buffer,
                                                              const policy::PolicyParameters& params,
                                                              const TrainConfig& config) {
  if (!buffer.full()) throw std::logic_error("buffer_flush_sft: buffer is not full");
  LossAndGrad lg = hard_example_loss(buffer.entries(), params);
  for (double& g : lg.grad) g *= config.lambda_sft;
  policy::PolicyParameters updated = policy::apply_update(params, lg.grad, config.lr_rl);
  drain(buffer);
  return {std::move(updated), lg.loss};
}

RlStepResult rl_step(const policy::PolicyParameters& params, const std::vector<Question>& batch,
                     const std::vector<ExpertPrompt>& prompts, HardExampleBuffer& buffer,
                     const TrainConfig& config, std::int64_t step) {
  if (batch.empty()) throw std::invalid_argument("rl_step: empty batch");
  if (prompts.empty()) throw std::invalid_argument("rl_step: no experts");
  const std::size_t n = prompts.size();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  std::vector<double> grad(params.theta.size(), 0.0);
  double grpo_total = 0.0, kl_total = 0.0;

  RlStepResult result;
  result.mean_reward_per_expert.assign(n, 0.0);
  result.rollouts.reserve(batch.size());

  for (const Question& q : batch) {
    std::vector<RolloutGroup> groups =
        sample_rollouts(params, q, prompts, config.group_size, {config.master_seed, step});
    std::vector<AdvantageSet> advantages;
    advantages.reserve(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
      advantages.push_back(compute_advantages(groups[i]));
      result.mean_reward_per_expert[i] += groups[i].mean_reward * inv_batch;
    }

    const LossAndGrad grpo = grpo_loss(groups, advantages, params);
    grpo_total += grpo.loss * inv_batch;
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += grpo.grad[k] * inv_batch;

    if (config.enable_iml) {
      const MutualLearningSelection sel = select_experts(groups);
      if (sel.kl_applicable()) {
        const LossAndGrad kl = kl_mutual_loss(sel, q, prompts, params);
        kl_total += kl.loss * inv_batch;
        const double w = config.lambda_kl * inv_batch;
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += kl.grad[k] * w;
      }
    }

    if (config.enable_hsft) {
      for (std::size_t i = 0; i < groups.size(); ++i) {
        int correct = 0;
        for (double r : groups[i].rewards) correct += (r == 1.0) ? 1 : 0;
        RandomStream rng = derive_rng(
            config.master_seed,
            {label(StreamTag::kAdmit), static_cast<std::uint64_t>(step),
             static_cast<std::uint64_t>(q.question_id),
             static_cast<std::uint64_t>(groups[i].expert_id)});
        buffer_admit(buffer, q, prompts[i], config.group_size - correct, config, rng);
      }
    }
    result.rollouts.push_back(std::move(groups));
  }

  double sft = 0.0;
  result.buffer_fill = buffer.size();
  if (config.enable_hsft && buffer.full()) {
    const LossAndGrad lg = hard_example_loss(drain(buffer), params);
    sft = lg.loss;
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += lg.grad[k] * config.lambda_sft;
    result.flushed = true;
  }

  result.losses = LossBreakdown::combine(grpo_total, kl_total, sft, config.lambda_kl,
                                         config.lambda_sft);
  result.params = policy::apply_update(params, grad, config.lr_rl);
  return result;
}

RlRunResult train_rl(const policy::PolicyParameters& params, const std::vector<Question>& questions,
                     const std::vector<ExpertPrompt>& prompts, const TrainConfig& config,
                     MetricsLog* log, std::ostream* rollout_dump) {
  RlRunResult run{params, {}, 0};
  if (questions.empty()) return run;
  HardExampleBuffer buffer(config.buffer_capacity);
  const std::size_t batch_size = static_cast<std::size_t>(std::max(1, config.batch_size_rl));
  std::vector<std::size_t> order(questions.size());
  std::vector<Question> batch;
  for (int epoch = 0; epoch < config.epochs_rl; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream rng = derive_rng(config.master_seed,
                                  {label(StreamTag::kRlShuffle), static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) batch.push_back(questions[order[k]]);
      RlStepResult r = rl_step(run.params, batch, prompts, buffer, config, run.steps);
      StepRecord rec{run.steps, r.losses, r.mean_reward_per_expert, r.buffer_fill};
      if (log) log->write(rec);
      if (rollout_dump) {
        for (const auto& groups : r.rollouts) write_rollouts(*rollout_dump, groups);
      }
      run.records.push_back(std::move(rec));
      run.params = std::move(r.params);
      ++run.steps;
    }
  }
  return run;
}

void write_rollouts(std::ostream& out, const std::vector<RolloutGroup>& groups) {
  for (const RolloutGroup& group : groups) {
    for (std::size_t g = 0; g < group.responses.size(); ++g) {
      nlohmann::ordered_json j;
      j["question_id"] = group.question_id;
      j["expert_id"] = group.expert_id;
      j["g"] = g;
      j["response"] = tasks::vocab().render(group.responses[g]);
      j["reward"] = group.rewards[g];
      out << j.dump() << '\n';
    }
  }
}

}  // namespace meml::riel
