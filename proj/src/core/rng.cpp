// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/core/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace meml {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t master_seed, std::span<const std::uint64_t> labels) {
  std::uint64_t h = mix64(master_seed ^ 0x6D656D6C2D677270ULL);
  // Length is folded in so {} and {0} differ.
  h = mix64(h ^ labels.size());
  for (std::uint64_t l : labels) h = mix64(h ^ mix64(l));
  return h;
}

RandomStream::RandomStream(std::uint64_t key) {
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                    static_cast<std::uint32_t>(mix64(key)),
                    static_cast<std::uint32_t>(mix64(key) >> 32)};
  engine_.seed(seq);
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RandomStream::below: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

RandomStream derive_rng(std::uint64_t master_seed, std::span<const std::uint64_t> labels) {
  return RandomStream(derive_key(master_seed, labels));
}

RandomStream derive_rng(std::uint64_t master_seed, std::initializer_list<std::uint64_t> labels) {
  return derive_rng(master_seed, std::span<const std::uint64_t>(labels.begin(), labels.size()));
}

}  // namespace meml
