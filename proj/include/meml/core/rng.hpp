// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random streams. Every random draw in the lab comes from a
// stream derived from (master_seed, labels); a stream is owned by exactly one
// consumer and never shared across threads.
//
// Label scheme: the first label is a StreamTag naming the consumer, followed
// by the consumer's coordinates, e.g.
//   {kRollout, step, question_id, expert_id, rollout_index}
//   {kAdmit, step, question_id, expert_id}
// so serial and parallel execution draw identical samples.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace meml {

enum class StreamTag : std::uint64_t {
  kPolicyInit = 1,
  kQuestions = 2,
  kEvalQuestions = 3,
  kSplit = 4,
  kTeacherSalt = 5,
  kSftShuffle = 6,
  kRollout = 7,
  kAdmit = 8,
  kRlShuffle = 9,
};

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_key(std::uint64_t master_seed, std::span<const std::uint64_t> labels);

RandomStream derive_rng(std::uint64_t master_seed, std::span<const std::uint64_t> labels);
RandomStream derive_rng(std::uint64_t master_seed, std::initializer_list<std::uint64_t> labels);

constexpr std::uint64_t label(StreamTag tag) { return static_cast<std::uint64_t>(tag); }

}  // namespace meml
