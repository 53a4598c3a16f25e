// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Shared token table for every task kind.
//
// Text form: token texts joined by single spaces. The whitespace token has
// empty text, so it shows up as a doubled space and split(' ') inverts the
// rendering exactly.

#pragma once

#include <string>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "meml/core/types.hpp"

namespace meml::tasks {

class Vocab {
 public:
  static const Vocab& instance();

  int size() const { return static_cast<int>(texts_.size()); }
  const std::string& text(Token t) const;
  Token id(std::string_view text) const;  // throws on unknown text

  Token eos() const { return eos_; }
  Token whitespace() const { return ws_; }
  Token answer_marker() const { return marker_; }  // "=>"
  Token digit(int d) const;
  bool is_digit(Token t) const { return t >= digit0_ && t < digit0_ + 10; }
  int digit_value(Token t) const { return t - digit0_; }
  Token expert_tag(int expert_id) const;  // "E0".."E7"
  Token style_marker(int style) const;    // one distinct opening token per style
  int style_of_marker(Token t) const;     // -1 if t is not a style marker
  static constexpr int kMaxStyles = 8;

  std::string render(std::span<const Token> seq) const;
  TokenSeq tokenize(std::string_view text) const;

 private:
  Vocab();
  std::vector<std::string> texts_;
  std::unordered_map<std::string, Token> ids_;
  Token eos_, ws_, marker_, digit0_, expert0_, style0_;
};

const Vocab& vocab();

}  // namespace meml::tasks
