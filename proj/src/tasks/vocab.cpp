// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/tasks/vocab.hpp"

#include <stdexcept>

namespace meml::tasks {

namespace {

constexpr const char* kStyleMarkers[Vocab::kMaxStyles] = {"so",   "thus",  "hence", "then",
                                                          "note", "check", "well",  "ok"};

}  // namespace

Vocab::Vocab() {
  const auto add = [this](std::string text) {
    const Token t = static_cast<Token>(texts_.size());
    ids_.emplace(text, t);
    texts_.push_back(std::move(text));
    return t;
  };
  digit0_ = add("0");
  for (int d = 1; d < 10; ++d) add(std::to_string(d));
  add("+");
  add("mod");
  add("?");
  add("=");
  marker_ = add("=>");
  eos_ = add("<eos>");
  ws_ = add("");
  add("a");
  add("b");
  add("even");
  add("odd");
  add("expert");
  add("answer");
  expert0_ = add("E0");
  for (int i = 1; i < kMaxStyles; ++i) add("E" + std::to_string(i));
  style0_ = add(kStyleMarkers[0]);
  for (int i = 1; i < kMaxStyles; ++i) add(kStyleMarkers[i]);
}

const Vocab& Vocab::instance() {
  static const Vocab v;
  return v;
}

const Vocab& vocab() { return Vocab::instance(); }

const std::string& Vocab::text(Token t) const {
  if (t < 0 || t >= size()) throw std::out_of_range("vocab: token id out of range");
  return texts_[t];
}

Token Vocab::id(std::string_view text) const {
  auto it = ids_.find(std::string(text));
  if (it == ids_.end()) throw std::invalid_argument("vocab: unknown token '" + std::string(text) + "'");
  return it->second;
}

Token Vocab::digit(int d) const {
  if (d < 0 || d > 9) throw std::out_of_range("vocab: digit out of range");
  return digit0_ + d;
}

Token Vocab::expert_tag(int expert_id) const {
  if (expert_id < 0 || expert_id >= kMaxStyles) throw std::out_of_range("vocab: expert id");
  return expert0_ + expert_id;
}

Token Vocab::style_marker(int style) const {
  if (style < 0 || style >= kMaxStyles) throw std::out_of_range("vocab: style index");
  return style0_ + style;
}

int Vocab::style_of_marker(Token t) const {
  if (t >= style0_ && t < style0_ + kMaxStyles) return t - style0_;
  return -1;
}

std::string Vocab::render(std::span<const Token> seq) const {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += text(seq[i]);
  }
  return out;
}

TokenSeq Vocab::tokenize(std::string_view text) const {
  TokenSeq out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = text.find(' ', start);
    out.push_back(id(text.substr(start, end == std::string_view::npos ? end : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace meml::tasks
