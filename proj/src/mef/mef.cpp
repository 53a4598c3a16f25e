// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/mef/mef.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace meml::mef {

std::vector<ExpertPrompt> make_expert_prompts(int n) {
  const auto& v = tasks::vocab();
  std::vector<ExpertPrompt> prompts;
  for (int i = 0; i < n; ++i) {
    prompts.push_back({i, {v.id("expert"), v.expert_tag(i), v.id("answer")}});
  }
  return prompts;
}

TokenSeq concat(const Question& q, const ExpertPrompt& prompt) {
  TokenSeq out = q.prompt_tokens;
  out.insert(out.end(), prompt.instruction.begin(), prompt.instruction.end());
  return out;
}

std::vector<MultiExpertSample> build_dataset(const std::vector<Question>& questions,
                                             const std::vector<ExpertPrompt>& prompts,
                                             const std::vector<tasks::TeacherProfile>& teachers) {
  if (prompts.size() != teachers.size())
    throw std::invalid_argument("build_dataset: " + std::to_string(prompts.size()) +
                                " prompts but " + std::to_string(teachers.size()) + " teachers");
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (prompts[i].expert_id != static_cast<int>(i))
      throw std::invalid_argument("build_dataset: expert ids must be contiguous from 0");
  }
  std::vector<MultiExpertSample> out;
  out.reserve(questions.size() * prompts.size());
  for (const Question& q : questions) {
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      out.push_back({q.question_id, prompts[i].expert_id, concat(q, prompts[i]),
                     tasks::teacher_answer(teachers[i], q)});
    }
  }
  return out;
}

LossAndGrad sft_loss(const policy::PolicyParameters& params,
                     const std::vector<MultiExpertSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("sft_loss: empty batch");
  LossAndGrad out{0.0, std::vector<double>(params.theta.size(), 0.0)};
  for (const MultiExpertSample& s : batch) {
    out.loss -= policy::accumulate_grad_log_prob(params, s.conditioning, s.target, -1.0, out.grad);
  }
  return out;
}

double mean_sft_loss(const policy::PolicyParameters& params,
                     const std::vector<MultiExpertSample>& dataset) {
  if (dataset.empty()) return 0.0;
  double total = 0.0;
  for (const MultiExpertSample& s : dataset) total -= policy::log_prob(params, s.conditioning, s.target);
  return total / static_cast<double>(dataset.size());
}

policy::PolicyParameters train_mef(const policy::PolicyParameters& params,
                                   const std::vector<MultiExpertSample>& dataset,
                                   const TrainConfig& config, MetricsLog* log) {
  policy::PolicyParameters current = params;
  if (dataset.empty() || config.epochs_sft <= 0) return current;
  const std::size_t batch_size = static_cast<std::size_t>(std::max(1, config.batch_size_sft));
  std::vector<std::size_t> order(dataset.size());
  std::vector<MultiExpertSample> batch;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs_sft; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream rng = derive_rng(config.master_seed,
                                  {label(StreamTag::kSftShuffle), static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      batch.clear();
      for (std::size_t k = begin; k < end; ++k) batch.push_back(dataset[order[k]]);
      LossAndGrad lg = sft_loss(current, batch);
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (double& g : lg.grad) g *= inv;
      policy::apply_update_in_place(current, lg.grad, config.lr_sft);
      if (log) log->write(MefRecord{step, epoch, lg.loss, lg.loss * inv});
      ++step;
    }
  }
  return current;
}

}  // namespace meml::mef
