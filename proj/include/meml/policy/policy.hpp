// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Tiny autoregressive token policy.
//
// Next-token predictor over a fixed context window of `context_length`
// positions. Each filled position s contributes W1[:, s] * E[x_s] to a hidden
// pre-activation; positions not yet generated contribute nothing. A learned
// per-position bias tells the network which slot it is predicting:
//
//   h_p      = tanh(b1 + P[p] + sum_{s<p} W1_s E[x_s])
//   logits_p = W2 h_p + b2
//
// The last context slot only admits the end-of-sequence token, so every
// sequence terminates inside the window and sequence probabilities are
// normalized.
//
// Optimizer: plain SGD (apply_update). Training-time sampling uses
// temperature 1.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "meml/core/rng.hpp"
#include "meml/core/types.hpp"

namespace meml::policy {

struct PolicyArch {
  int vocab_size = 0;
  int context_length = 0;
  int embed_dim = 0;
  int hidden_dim = 0;
  Token eos_token = 0;

  std::size_t param_count() const;
  void validate() const;

  friend bool operator==(const PolicyArch&, const PolicyArch&) = default;
};

struct PolicyParameters {
  PolicyArch arch;
  std::vector<double> theta;

  friend bool operator==(const PolicyParameters&, const PolicyParameters&) = default;
};

// Offsets of each weight block inside theta.
struct ParamLayout {
  std::size_t embedding;  // [vocab][embed]
  std::size_t w1;         // [hidden][context * embed]
  std::size_t position;   // [context][hidden]
  std::size_t b1;         // [hidden]
  std::size_t w2;         // [vocab][hidden]
  std::size_t b2;         // [vocab]
  std::size_t total;
};

ParamLayout layout_of(const PolicyArch& arch);

PolicyParameters zero_policy(const PolicyArch& arch);
// Weights ~ N(0, scale^2 / fan_in); biases zero.
PolicyParameters init_policy(const PolicyArch& arch, RandomStream& rng, double scale);

// Next-token distribution after `prefix` (conditioning plus generated tokens).
std::vector<double> next_token_probs(const PolicyParameters& params, std::span<const Token> prefix);

// Draws tokens until end-of-sequence. When `max_len` tokens have been drawn
// without termination, end-of-sequence is appended.
TokenSeq sample(const PolicyParameters& params, std::span<const Token> conditioning,
                RandomStream& rng, int max_len);

// Argmax decoding (beam width 1); ties go to the lowest token id.
TokenSeq greedy_decode(const PolicyParameters& params, std::span<const Token> conditioning,
                       int max_len);

double log_prob(const PolicyParameters& params, std::span<const Token> conditioning,
                std::span<const Token> output);

std::vector<double> grad_log_prob(const PolicyParameters& params,
                                  std::span<const Token> conditioning,
                                  std::span<const Token> output);

// grad += weight * d log_prob / d theta. Returns log_prob.
double accumulate_grad_log_prob(const PolicyParameters& params,
                                std::span<const Token> conditioning,
                                std::span<const Token> output, double weight,
                                std::span<double> grad);

// theta - lr * gradient. Throws on dimension mismatch or non-finite entries.
PolicyParameters apply_update(const PolicyParameters& params, std::span<const double> gradient,
                              double lr);
void apply_update_in_place(PolicyParameters& params, std::span<const double> gradient, double lr);

// Remaining output budget for a conditioning of the given length.
int max_output_len(const PolicyArch& arch, std::size_t conditioning_len);

// Versioned little-endian binary dump: magic, version, arch, raw doubles.
void save_checkpoint(const std::filesystem::path& path, const PolicyParameters& params);
PolicyParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace meml::policy
