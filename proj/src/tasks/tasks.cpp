// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/tasks/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace meml::tasks {

namespace {

TokenSeq number_tokens(int n) {
  const Vocab& v = vocab();
  TokenSeq out;
  for (char ch : std::to_string(n)) out.push_back(v.digit(ch - '0'));
  return out;
}

int modulus_for(int difficulty) { return std::min(9, 3 + difficulty); }
int operand_count_for(int difficulty) { return 2 + difficulty; }
int string_length_for(int difficulty) { return 3 + difficulty; }

int digit_at(const Question& q, std::size_t i) {
  if (i >= q.prompt_tokens.size() || !vocab().is_digit(q.prompt_tokens[i]))
    throw std::invalid_argument("malformed question " + std::to_string(q.question_id));
  return vocab().digit_value(q.prompt_tokens[i]);
}

struct Parsed {
  int answer = 0;        // numeric answer, or count parity for parity-of-string
  int intermediate = 0;  // value shown in the trace
  int modulus = 0;       // modular-arithmetic only
};

Parsed parse(const Question& q) {
  const Vocab& v = vocab();
  Parsed p;
  switch (q.kind) {
    case TaskKind::kModularArithmetic: {
      const int a = digit_at(q, 0), b = digit_at(q, 2), m = digit_at(q, 4);
      if (m < 2) throw std::invalid_argument("modulus must be >= 2");
      p.modulus = m;
      p.intermediate = a + b;
      p.answer = (a + b) % m;
      return p;
    }
    case TaskKind::kChainedAddition: {
      int sum = 0;
      int count = 0;
      for (std::size_t i = 0; i + 1 < q.prompt_tokens.size(); i += 2) {
        const int d = digit_at(q, i);
        sum += d;
        if (++count == 2) p.intermediate = sum;
      }
      if (count < 2) throw std::invalid_argument("chained-addition needs >= 2 operands");
      p.answer = sum;
      return p;
    }
    case TaskKind::kParityOfString: {
      const Token b = v.id("b");
      int count = 0;
      for (Token t : q.prompt_tokens) count += (t == b) ? 1 : 0;
      p.intermediate = count;
      p.answer = count % 2;
      return p;
    }
  }
  throw std::invalid_argument("unknown task kind");
}

std::string parity_word(int parity) { return parity == 0 ? "even" : "odd"; }

}  // namespace

std::vector<Question> generate_questions(const TaskSpec& spec, int count, RandomStream& rng,
                                         std::int64_t first_id) {
  if (count < 1) throw std::invalid_argument("generate_questions: count must be >= 1");
  const Vocab& v = vocab();
  std::vector<Question> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Question q;
    q.question_id = first_id + i;
    q.kind = spec.kind;
    switch (spec.kind) {
      case TaskKind::kModularArithmetic: {
        const int a = static_cast<int>(rng.below(10));
        const int b = static_cast<int>(rng.below(10));
        const int m = modulus_for(spec.difficulty);
        q.prompt_tokens = {v.digit(a), v.id("+"), v.digit(b), v.id("mod"), v.digit(m), v.id("?")};
        q.ground_truth_answer = std::to_string((a + b) % m);
        break;
      }
      case TaskKind::kChainedAddition: {
        int sum = 0;
        for (int k = 0; k < operand_count_for(spec.difficulty); ++k) {
          const int d = static_cast<int>(rng.below(10));
          if (k) q.prompt_tokens.push_back(v.id("+"));
          q.prompt_tokens.push_back(v.digit(d));
          sum += d;
        }
        q.prompt_tokens.push_back(v.id("?"));
        q.ground_truth_answer = std::to_string(sum);
        break;
      }
      case TaskKind::kParityOfString: {
        int count_b = 0;
        for (int k = 0; k < string_length_for(spec.difficulty); ++k) {
          const bool is_b = rng.below(2) == 1;
          count_b += is_b ? 1 : 0;
          q.prompt_tokens.push_back(v.id(is_b ? "b" : "a"));
        }
        q.prompt_tokens.push_back(v.id("?"));
        q.ground_truth_answer = parity_word(count_b % 2);
        break;
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

Solution solve(const Question& q) {
  const Parsed p = parse(q);
  Solution s;
  s.intermediate = number_tokens(p.intermediate);
  if (q.kind == TaskKind::kParityOfString) {
    s.answer = parity_word(p.answer);
    s.answer_tokens = {vocab().id(s.answer)};
  } else {
    s.answer = std::to_string(p.answer);
    s.answer_tokens = number_tokens(p.answer);
  }
  return s;
}

std::uint64_t content_hash(const Question& q) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(q.kind) + 0x51ED270B27F1A3C5ULL);
  for (Token t : q.prompt_tokens) h = mix64(h ^ static_cast<std::uint64_t>(t));
  return h;
}

bool ErrorSupport::contains(const Question& q) const {
  const double u = static_cast<double>(mix64(content_hash(q) ^ salt) >> 11) * 0x1.0p-53;
  return u < shared || (u >= band_lo && u < band_hi);
}

std::vector<TeacherProfile> make_teacher_pool(int pool_size, double error_rate, double overlap,
                                              bool ground_truth_first, std::uint64_t salt) {
  if (pool_size < 1 || pool_size > Vocab::kMaxStyles)
    throw std::invalid_argument("make_teacher_pool: pool size must be in [1, 8]");
  if (error_rate < 0.0 || error_rate >= 1.0 || overlap < 0.0 || overlap > error_rate)
    throw std::invalid_argument("make_teacher_pool: need 0 <= overlap <= error_rate < 1");
  const double exclusive = error_rate - overlap;
  std::vector<TeacherProfile> pool;
  for (int k = 0; k < pool_size; ++k) {
    TeacherProfile t;
    t.expert_id = k;
    t.style = k;
    if (!(ground_truth_first && k == 0)) {
      const int band = k - (ground_truth_first ? 1 : 0);
      t.error_support.shared = overlap;
      t.error_support.band_lo = overlap + band * exclusive;
      t.error_support.band_hi = t.error_support.band_lo + exclusive;
      if (t.error_support.band_hi > 1.0 + 1e-12)
        throw std::invalid_argument("make_teacher_pool: error bands exceed the question space");
    }
    t.error_support.salt = salt;
    t.error_rate = t.error_support.rate();
    pool.push_back(t);
  }
  return pool;
}

TokenSeq render_trace(int style, const Question& q, bool correct) {
  const Vocab& v = vocab();
  const Solution s = solve(q);
  TokenSeq answer = s.answer_tokens;
  if (!correct) {
    const Parsed p = parse(q);
    const std::uint64_t h = mix64(content_hash(q) ^ (0xA5A5ULL + static_cast<std::uint64_t>(style)));
    switch (q.kind) {
      case TaskKind::kModularArithmetic:
        answer = number_tokens((p.answer + 1 + static_cast<int>(h % (p.modulus - 1))) % p.modulus);
        break;
      case TaskKind::kChainedAddition:
        answer = number_tokens(p.answer + 1 + static_cast<int>(h % 3));
        break;
      case TaskKind::kParityOfString:
        answer = {v.id(parity_word(1 - p.answer))};
        break;
    }
  }
  TokenSeq out{v.style_marker(style)};
  switch (style % 3) {
    case 0:
      out.insert(out.end(), s.intermediate.begin(), s.intermediate.end());
      break;
    case 1:
      break;
    case 2:
      out.insert(out.end(), s.intermediate.begin(), s.intermediate.end());
      out.push_back(v.id("="));
      out.insert(out.end(), answer.begin(), answer.end());
      break;
  }
  out.push_back(v.answer_marker());
  out.insert(out.end(), answer.begin(), answer.end());
  out.push_back(v.eos());
  return out;
}

TokenSeq teacher_answer(const TeacherProfile& profile, const Question& q) {
  return render_trace(profile.style, q, !profile.error_support.contains(q));
}

TokenSeq reference_trace(const Question& q) { return render_trace(0, q, true); }

std::optional<std::string> extract_answer(std::span<const Token> response) {
  const Vocab& v = vocab();
  std::size_t end = response.size();
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (response[i] == v.eos()) {
      end = i;
      break;
    }
  }
  std::size_t marker = end;
  for (std::size_t i = end; i-- > 0;) {
    if (response[i] == v.answer_marker()) {
      marker = i;
      break;
    }
  }
  if (marker == end) return std::nullopt;
  std::size_t lo = marker + 1, hi = end;
  while (lo < hi && response[lo] == v.whitespace()) ++lo;
  while (hi > lo && response[hi - 1] == v.whitespace()) --hi;
  if (lo == hi) return std::nullopt;
  const auto body = response.subspan(lo, hi - lo);
  if (body.size() == 1 && (v.text(body[0]) == "even" || v.text(body[0]) == "odd"))
    return v.text(body[0]);
  std::string digits;
  for (Token t : body) {
    if (!v.is_digit(t)) return std::nullopt;
    digits += v.text(t);
  }
  return digits;
}

double reward(std::span<const Token> response, const Question& q) {
  const auto answer = extract_answer(response);
  return (answer && *answer == q.ground_truth_answer) ? 1.0 : 0.0;
}

int classify_style(std::span<const Token> response) {
  if (response.empty()) return -1;
  return vocab().style_of_marker(response[0]);
}

void write_questions(const std::filesystem::path& path, const std::vector<Question>& questions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const Question& q : questions) {
    nlohmann::ordered_json j;
    j["question_id"] = q.question_id;
    j["task_kind"] = std::string(to_string(q.kind));
    j["question_text"] = vocab().render(q.prompt_tokens);
    j["ground_truth"] = q.ground_truth_answer;
    out << j.dump() << '\n';
  }
}

std::vector<Question> read_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Question> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    Question q;
    q.question_id = j.at("question_id").get<std::int64_t>();
    q.kind = task_kind_from_string(j.at("task_kind").get<std::string>());
    q.prompt_tokens = vocab().tokenize(j.at("question_text").get<std::string>());
    q.ground_truth_answer = j.at("ground_truth").get<std::string>();
    if (q.prompt_tokens.empty() || q.ground_truth_answer.empty())
      throw std::runtime_error("empty question or answer in " + path.string());
    out.push_back(std::move(q));
  }
  return out;
}

void write_teacher_responses(const std::filesystem::path& path,
                             const std::vector<TeacherResponse>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const TeacherResponse& r : rows) {
    nlohmann::ordered_json j;
    j["question_id"] = r.question_id;
    j["expert_id"] = r.expert_id;
    j["response_text"] = r.response_text;
    out << j.dump() << '\n';
  }
}

std::vector<TeacherResponse> read_teacher_responses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TeacherResponse> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    out.push_back({j.at("question_id").get<std::int64_t>(), j.at("expert_id").get<int>(),
                   j.at("response_text").get<std::string>()});
  }
  return out;
}

}  // namespace meml::tasks
