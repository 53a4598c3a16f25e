// Copyright (c) 2026, MEML-GRPO Lab contributors
// SPDX-License-Identifier: Apache-2.0

#include "meml/policy/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

namespace meml::policy {

std::size_t PolicyArch::param_count() const { return layout_of(*this).total; }

void PolicyArch::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("policy: vocab_size must be >= 2");
  if (context_length < 2) throw std::invalid_argument("policy: context_length must be >= 2");
  if (embed_dim < 1 || hidden_dim < 1) throw std::invalid_argument("policy: empty layer");
  if (eos_token < 0 || eos_token >= vocab_size)
    throw std::invalid_argument("policy: eos_token out of vocabulary");
}

ParamLayout layout_of(const PolicyArch& a) {
  const std::size_t v = a.vocab_size, c = a.context_length, d = a.embed_dim, h = a.hidden_dim;
  ParamLayout l{};
  l.embedding = 0;
  l.w1 = l.embedding + v * d;
  l.position = l.w1 + h * c * d;
  l.b1 = l.position + c * h;
  l.w2 = l.b1 + h;
  l.b2 = l.w2 + v * h;
  l.total = l.b2 + v;
  return l;
}

PolicyParameters zero_policy(const PolicyArch& arch) {
  arch.validate();
  return PolicyParameters{arch, std::vector<double>(arch.param_count(), 0.0)};
}

PolicyParameters init_policy(const PolicyArch& arch, RandomStream& rng, double scale) {
  PolicyParameters p = zero_policy(arch);
  const ParamLayout l = layout_of(arch);
  const auto fill = [&](std::size_t begin, std::size_t end, double fan_in) {
    const double s = scale / std::sqrt(fan_in);
    for (std::size_t i = begin; i < end; ++i) p.theta[i] = s * rng.normal();
  };
  fill(l.embedding, l.w1, 1.0);
  fill(l.w1, l.position, static_cast<double>(arch.embed_dim) * 4.0);
  fill(l.position, l.b1, 1.0);
  fill(l.w2, l.b2, static_cast<double>(arch.hidden_dim));
  return p;
}

int max_output_len(const PolicyArch& arch, std::size_t conditioning_len) {
  return std::max(0, arch.context_length - static_cast<int>(conditioning_len));
}

namespace {

// Read-only view of the network inside a parameter vector.
class Net {
 public:
  explicit Net(const PolicyParameters& p)
      : v_(p.arch.vocab_size),
        c_(p.arch.context_length),
        d_(p.arch.embed_dim),
        h_(p.arch.hidden_dim),
        eos_(p.arch.eos_token),
        l_(layout_of(p.arch)),
        th_(p.theta.data()) {
    if (p.theta.size() != l_.total)
      throw std::invalid_argument("policy: theta size does not match architecture");
  }

  int vocab() const { return v_; }
  int context() const { return c_; }
  int hidden() const { return h_; }
  Token eos() const { return eos_; }

  void check_token(Token t) const {
    if (t < 0 || t >= v_)
      throw std::out_of_range("policy: token " + std::to_string(t) + " out of vocabulary");
  }

  std::vector<double> bias() const { return {th_ + l_.b1, th_ + l_.b1 + h_}; }

  // acc += W1_slot E[tok]
  void add_slot(std::vector<double>& acc, int slot, Token tok) const {
    const double* e = th_ + l_.embedding + static_cast<std::size_t>(tok) * d_;
    const std::size_t row = static_cast<std::size_t>(c_) * d_;
    for (int j = 0; j < h_; ++j) {
      const double* w = th_ + l_.w1 + j * row + static_cast<std::size_t>(slot) * d_;
      double s = 0.0;
      for (int k = 0; k < d_; ++k) s += w[k] * e[k];
      acc[j] += s;
    }
  }

  // Hidden activations and next-token probabilities at position p.
  void head(const std::vector<double>& acc, int p, double* hid, double* probs) const {
    const double* pos = th_ + l_.position + static_cast<std::size_t>(p) * h_;
    for (int j = 0; j < h_; ++j) hid[j] = std::tanh(acc[j] + pos[j]);
    if (p >= c_ - 1) {
      std::fill(probs, probs + v_, 0.0);
      probs[eos_] = 1.0;
      return;
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < v_; ++v) {
      const double* w = th_ + l_.w2 + static_cast<std::size_t>(v) * h_;
      double z = th_[l_.b2 + v];
      for (int j = 0; j < h_; ++j) z += w[j] * hid[j];
      probs[v] = z;
      max_logit = std::max(max_logit, z);
    }
    double total = 0.0;
    for (int v = 0; v < v_; ++v) {
      probs[v] = std::exp(probs[v] - max_logit);
      total += probs[v];
    }
    for (int v = 0; v < v_; ++v) probs[v] /= total;
  }

  // Accumulates the backward pass of weight * log p(output | conditioning).
  double forward_backward(std::span<const Token> cond, std::span<const Token> out, double weight,
                          double* grad) const {
    const int c = static_cast<int>(cond.size());
    const int n = static_cast<int>(out.size());
    if (c + n > c_) throw std::length_error("policy: conditioning + output exceeds context");
    std::vector<Token> x(cond.begin(), cond.end());
    x.insert(x.end(), out.begin(), out.end());
    for (Token t : x) check_token(t);
    if (n == 0) return 0.0;

    std::vector<double> acc = bias();
    for (int s = 0; s < c; ++s) add_slot(acc, s, x[s]);
    std::vector<double> hs(static_cast<std::size_t>(n) * h_);
    std::vector<double> ps(static_cast<std::size_t>(n) * v_);
    double logp = 0.0;
    for (int t = 0; t < n; ++t) {
      const int p = c + t;
      head(acc, p, &hs[t * h_], &ps[t * v_]);
      logp += std::log(ps[t * v_ + x[p]]);
      if (p + 1 < c + n) add_slot(acc, p, x[p]);
    }
    if (grad == nullptr || weight == 0.0) return logp;
    if (!std::isfinite(logp))
      throw std::domain_error("policy: gradient of a zero-probability sequence");

    std::vector<double> dpre(static_cast<std::size_t>(n) * h_, 0.0);
    std::vector<double> dl(v_);
    for (int t = 0; t < n; ++t) {
      const int p = c + t;
      if (p >= c_ - 1) continue;  // forced end-of-sequence: constant
      const double* hid = &hs[t * h_];
      const double* probs = &ps[t * v_];
      for (int v = 0; v < v_; ++v) dl[v] = weight * ((v == x[p] ? 1.0 : 0.0) - probs[v]);
      double* dpre_t = &dpre[t * h_];
      for (int v = 0; v < v_; ++v) {
        grad[l_.b2 + v] += dl[v];
        const double* w = th_ + l_.w2 + static_cast<std::size_t>(v) * h_;
        double* gw = grad + l_.w2 + static_cast<std::size_t>(v) * h_;
        for (int j = 0; j < h_; ++j) {
          gw[j] += dl[v] * hid[j];
          dpre_t[j] += w[j] * dl[v];
        }
      }
      double* gpos = grad + l_.position + static_cast<std::size_t>(p) * h_;
      for (int j = 0; j < h_; ++j) {
        dpre_t[j] *= 1.0 - hid[j] * hid[j];
        grad[l_.b1 + j] += dpre_t[j];
        gpos[j] += dpre_t[j];
      }
    }

    // Slot s feeds every prediction at positions > s.
    std::vector<double> upstream(h_, 0.0);
    const std::size_t row = static_cast<std::size_t>(c_) * d_;
    for (int s = c + n - 2; s >= 0; --s) {
      const int t = s + 1 - c;
      if (t >= 0) {
        for (int j = 0; j < h_; ++j) upstream[j] += dpre[t * h_ + j];
      }
      const std::size_t eo = l_.embedding + static_cast<std::size_t>(x[s]) * d_;
      for (int j = 0; j < h_; ++j) {
        const double u = upstream[j];
        if (u == 0.0) continue;
        const std::size_t wo = l_.w1 + j * row + static_cast<std::size_t>(s) * d_;
        for (int k = 0; k < d_; ++k) {
          grad[wo + k] += u * th_[eo + k];
          grad[eo + k] += u * th_[wo + k];
        }
      }
    }
    return logp;
  }

 private:
  int v_, c_, d_, h_;
  Token eos_;
  ParamLayout l_;
  const double* th_;
};

template <typename Pick>
TokenSeq decode(const PolicyParameters& params, std::span<const Token> conditioning, int max_len,
                Pick pick) {
  const Net net(params);
  const int c = static_cast<int>(conditioning.size());
  if (c >= net.context())
    throw std::length_error("policy: conditioning exceeds context_length");
  if (max_len < 1) throw std::invalid_argument("policy: max_len must be >= 1");
  for (Token t : conditioning) net.check_token(t);

  std::vector<double> acc = net.bias();
  for (int s = 0; s < c; ++s) net.add_slot(acc, s, conditioning[s]);
  std::vector<double> hid(net.hidden()), probs(net.vocab());
  TokenSeq out;
  for (int p = c;; ++p) {
    if (static_cast<int>(out.size()) == max_len) {
      out.push_back(net.eos());
      break;
    }
    net.head(acc, p, hid.data(), probs.data());
    const Token tok = pick(probs);
    out.push_back(tok);
    if (tok == net.eos()) break;
    net.add_slot(acc, p, tok);
  }
  return out;
}

}  // namespace

std::vector<double> next_token_probs(const PolicyParameters& params,
                                     std::span<const Token> prefix) {
  const Net net(params);
  const int c = static_cast<int>(prefix.size());
  if (c >= net.context()) throw std::length_error("policy: prefix fills the context");
  for (Token t : prefix) net.check_token(t);
  std::vector<double> acc = net.bias();
  for (int s = 0; s < c; ++s) net.add_slot(acc, s, prefix[s]);
  std::vector<double> hid(net.hidden()), probs(net.vocab());
  net.head(acc, c, hid.data(), probs.data());
  return probs;
}

TokenSeq sample(const PolicyParameters& params, std::span<const Token> conditioning,
                RandomStream& rng, int max_len) {
  return decode(params, conditioning, max_len, [&rng](const std::vector<double>& probs) {
    const double u = rng.uniform();
    double cum = 0.0;
    Token last = 0;
    for (std::size_t v = 0; v < probs.size(); ++v) {
      if (probs[v] <= 0.0) continue;
      cum += probs[v];
      last = static_cast<Token>(v);
      if (u < cum) return last;
    }
    return last;
  });
}

TokenSeq greedy_decode(const PolicyParameters& params, std::span<const Token> conditioning,
                       int max_len) {
  return decode(params, conditioning, max_len, [](const std::vector<double>& probs) {
    return static_cast<Token>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  });
}

double log_prob(const PolicyParameters& params, std::span<const Token> conditioning,
                std::span<const Token> output) {
  return Net(params).forward_backward(conditioning, output, 0.0, nullptr);
}

double accumulate_grad_log_prob(const PolicyParameters& params,
                                std::span<const Token> conditioning,
                                std::span<const Token> output, double weight,
                                std::span<double> grad) {
  if (grad.size() != params.theta.size())
    throw std::invalid_argument("policy: gradient buffer has wrong dimension");
  return Net(params).forward_backward(conditioning, output, weight, grad.data());
}

std::vector<double> grad_log_prob(const PolicyParameters& params,
                                  std::span<const Token> conditioning,
                                  std::span<const Token> output) {
  std::vector<double> g(params.theta.size(), 0.0);
  accumulate_grad_log_prob(params, conditioning, output, 1.0, g);
  return g;
}

void apply_update_in_place(PolicyParameters& params, std::span<const double> gradient, double lr) {
  if (gradient.size() != params.theta.size())
    throw std::invalid_argument("apply_update: gradient dimension mismatch");
  for (double g : gradient) {
    if (!std::isfinite(g)) throw std::domain_error("apply_update: non-finite gradient entry");
  }
  if (lr == 0.0) return;
  for (std::size_t i = 0; i < gradient.size(); ++i) params.theta[i] -= lr * gradient[i];
}

PolicyParameters apply_update(const PolicyParameters& params, std::span<const double> gradient,
                              double lr) {
  PolicyParameters out = params;
  apply_update_in_place(out, gradient, lr);
  return out;
}

namespace {

constexpr char kMagic[8] = {'M', 'E', 'M', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const PolicyParameters& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, kVersion);
  const PolicyArch& a = params.arch;
  for (int v : {a.vocab_size, a.context_length, a.embed_dim, a.hidden_dim,
                static_cast<int>(a.eos_token)}) {
    put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(v)));
  }
  put_u64(out, params.theta.size());
  for (double x : params.theta) put_u64(out, std::bit_cast<std::uint64_t>(x));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

PolicyParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const std::uint64_t version = get_u64(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  PolicyParameters p;
  p.arch.vocab_size = static_cast<int>(get_u64(in));
  p.arch.context_length = static_cast<int>(get_u64(in));
  p.arch.embed_dim = static_cast<int>(get_u64(in));
  p.arch.hidden_dim = static_cast<int>(get_u64(in));
  p.arch.eos_token = static_cast<Token>(get_u64(in));
  p.arch.validate();
  const std::uint64_t n = get_u64(in);
  if (n != p.arch.param_count())
    throw std::runtime_error("checkpoint: parameter count does not match architecture");
  p.theta.resize(n);
  for (auto& x : p.theta) x = std::bit_cast<double>(get_u64(in));
  return p;
}

}  // namespace meml::policy
