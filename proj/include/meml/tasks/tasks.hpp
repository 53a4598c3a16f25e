// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic verifiable tasks, simulated teachers and the exact-match reward.
//
// Question layouts (tokens):
//   modular-arithmetic  a + b mod m ?          m = min(9, 3 + difficulty)
//   chained-addition    a1 + a2 + ... + ak ?   k = 2 + difficulty
//   parity-of-string    c1 c2 ... cL ?         L = 3 + difficulty, c in {a, b}
//                                              answer: parity of the count of b
//
// Responses end with "=> ANSWER <eos>". The answer is read after the last
// "=>" marker, up to end-of-sequence, with whitespace tokens trimmed on both
// sides. A well-formed answer is one or more digit tokens or exactly one of
// "even"/"odd"; anything else is a format failure and earns reward 0.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "meml/core/rng.hpp"
#include "meml/core/types.hpp"
#include "meml/tasks/vocab.hpp"

namespace meml::tasks {

struct TaskSpec {
  TaskKind kind = TaskKind::kModularArithmetic;
  int difficulty = 1;
};

std::vector<Question> generate_questions(const TaskSpec& spec, int count, RandomStream& rng,
                                         std::int64_t first_id = 0);

// Canonical answer and the intermediate quantity the reasoning traces show.
struct Solution {
  std::string answer;
  TokenSeq answer_tokens;
  TokenSeq intermediate;
};

Solution solve(const Question& q);

// Stable 64-bit key of the question content (kind + tokens), independent of id.
std::uint64_t content_hash(const Question& q);

// Questions a teacher gets wrong: hash the content into u in [0,1); the
// teacher errs when u falls in the shared region [0, shared) or in its own
// band [band_lo, band_hi). Bands of different teachers are disjoint, so the
// shared region is exactly the all-teacher intersection.
struct ErrorSupport {
  double shared = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
  std::uint64_t salt = 0;

  bool contains(const Question& q) const;
  double rate() const { return shared + (band_hi - band_lo); }
};

struct TeacherProfile {
  int expert_id = 0;
  int style = 0;
  double error_rate = 0.0;
  ErrorSupport error_support;
};

// Teacher k gets style k. With ground_truth_first, teacher 0 never errs.
std::vector<TeacherProfile> make_teacher_pool(int pool_size, double error_rate, double overlap,
                                              bool ground_truth_first, std::uint64_t salt);

// Reasoning trace in `style`, ending in the correct answer or in a
// deterministic wrong one.
TokenSeq render_trace(int style, const Question& q, bool correct);

// Correct iff q is outside the teacher's error support.
TokenSeq teacher_answer(const TeacherProfile& profile, const Question& q);

// Ground-truth target used by the hard-example buffer (style 0, correct).
TokenSeq reference_trace(const Question& q);

std::optional<std::string> extract_answer(std::span<const Token> response);

double reward(std::span<const Token> response, const Question& q);

// Style of a response, read from its opening marker token; -1 if none.
int classify_style(std::span<const Token> response);

// Line-delimited JSON: {question_id, task_kind, question_text, ground_truth}.
void write_questions(const std::filesystem::path& path, const std::vector<Question>& questions);
std::vector<Question> read_questions(const std::filesystem::path& path);

struct TeacherResponse {
  std::int64_t question_id = 0;
  int expert_id = 0;
  std::string response_text;

  friend bool operator==(const TeacherResponse&, const TeacherResponse&) = default;
};

// Line-delimited JSON: {question_id, expert_id, response_text}.
void write_teacher_responses(const std::filesystem::path& path,
                             const std::vector<TeacherResponse>& rows);
std::vector<TeacherResponse> read_teacher_responses(const std::filesystem::path& path);

}  // namespace meml::tasks
