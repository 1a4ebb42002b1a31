// Copyright 2026 The tokplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Tabular log-linear autoregressive policy over a mixed vocabulary of action
// tokens, reasoning tokens and three control tokens (BOR, EOR, EOS).
//
// An output sequence is either
//     a_1 .. a_T EOS                      (fast)
//     BOR r_1 .. r_L EOR a_1 .. a_T EOS   (slow, 1 <= L <= max_reasoning)
// and the grammar is enforced by masking illegal tokens to -inf. Logits are
// looked up in a table keyed by (context, previous token, position bucket),
// where all reasoning positions share one bucket and each action step has
// its own. The first token is conditioned on EOS as "previous token".

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokplan/errors.hpp"
#include "tokplan/metrics.hpp"
#include "tokplan/rng.hpp"
#include "tokplan/scenario.hpp"
#include "tokplan/tokenizer.hpp"

namespace tokplan {

using TokenId = std::uint32_t;

struct PolicyShape {
  std::size_t num_actions = 0;
  std::size_t num_reasoning = 16;
  std::size_t horizon = 10;
  std::size_t max_reasoning = 32;

  std::size_t vocab_size() const { return num_actions + num_reasoning + 3; }
  TokenId action(std::size_t i) const { return static_cast<TokenId>(i); }
  TokenId reasoning(std::size_t j) const { return static_cast<TokenId>(num_actions + j); }
  TokenId bor() const { return static_cast<TokenId>(num_actions + num_reasoning); }
  TokenId eor() const { return bor() + 1; }
  TokenId eos() const { return bor() + 2; }
  bool is_action(TokenId t) const { return t < num_actions; }
  bool is_reasoning(TokenId t) const { return t >= num_actions && t < bor(); }

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

enum class ObstacleSector { None, Front, Left, Right, Rear };

inline constexpr std::size_t kSpeedBuckets = 8;
inline constexpr double kSpeedBucketWidth = 2.0;  // m/s
inline constexpr double kSectorRange = 60.0;      // m

/// Discrete stand-in for the scene conditioning of the policy.
struct ContextDescriptor {
  Instruction instruction = Instruction::GoStraight;
  std::size_t speed_bucket = 0;
  Complexity complexity = Complexity::Simple;
  ObstacleSector sector = ObstacleSector::None;

  static constexpr std::uint32_t kCount = 4 * kSpeedBuckets * 2 * 5;

  std::uint32_t index() const {
    return static_cast<std::uint32_t>(
        ((static_cast<std::size_t>(instruction) * kSpeedBuckets + speed_bucket) * 2 +
         static_cast<std::size_t>(complexity)) *
            5 +
        static_cast<std::size_t>(sector));
  }

  static ContextDescriptor from_index(std::uint32_t idx) {
    if (idx >= kCount) throw DataError("context index out of range");
    ContextDescriptor c;
    c.sector = static_cast<ObstacleSector>(idx % 5);
    idx /= 5;
    c.complexity = static_cast<Complexity>(idx % 2);
    idx /= 2;
    c.speed_bucket = idx % kSpeedBuckets;
    c.instruction = static_cast<Instruction>(idx / kSpeedBuckets);
    return c;
  }

  friend bool operator==(const ContextDescriptor&, const ContextDescriptor&) = default;
};

inline std::size_t speed_bucket(double speed) {
  const auto b = static_cast<std::size_t>(std::max(0.0, speed) / kSpeedBucketWidth);
  return std::min(b, kSpeedBuckets - 1);
}

/// Sector of the nearest obstacle at t = 0, in the ego frame.
inline ObstacleSector nearest_obstacle_sector(const Scenario& sc) {
  double best = kSectorRange;
  ObstacleSector sector = ObstacleSector::None;
  for (const auto& obs : sc.obstacles) {
    const MotionDelta rel = se2_relative(sc.ego.pose, obs.poses.poses.front());
    const double d = rel.planar_norm();
    if (d >= best) continue;
    best = d;
    const double bearing = std::atan2(rel.dy, rel.dx);
    if (std::abs(bearing) <= kPi / 6.0) {
      sector = ObstacleSector::Front;
    } else if (std::abs(bearing) >= 5.0 * kPi / 6.0) {
      sector = ObstacleSector::Rear;
    } else {
      sector = bearing > 0.0 ? ObstacleSector::Left : ObstacleSector::Right;
    }
  }
  return sector;
}

inline ContextDescriptor describe(const Scenario& sc) {
  return {sc.instruction, speed_bucket(sc.ego.speed), sc.complexity, nearest_obstacle_sector(sc)};
}

struct RowKey {
  std::uint32_t context = 0;
  TokenId prev = 0;
  std::uint32_t bucket = 0;
  auto operator<=>(const RowKey&) const = default;
};

/// Sparse table of logit rows; absent rows are all zeros. Also used for
/// gradients, which share the parameter layout.
using RowTable = std::map<RowKey, std::vector<double>>;

struct PolicyParams {
  PolicyShape shape;
  RowTable rows;

  const std::vector<double>* find(const RowKey& key) const {
    const auto it = rows.find(key);
    return it == rows.end() ? nullptr : &it->second;
  }

  std::vector<double>& row(const RowKey& key) {
    auto [it, inserted] = rows.try_emplace(key);
    if (inserted) it->second.assign(shape.vocab_size(), 0.0);
    return it->second;
  }

  bool all_finite() const {
    for (const auto& [k, r] : rows) {
      for (const double v : r) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }
};

inline double squared_norm(const RowTable& t) {
  double s = 0.0;
  for (const auto& [k, r] : t) {
    for (const double v : r) s += v * v;
  }
  return s;
}

inline void scale_rows(RowTable& t, double factor) {
  for (auto& [k, r] : t) {
    for (double& v : r) v *= factor;
  }
}

/// dst += factor * src, creating rows as needed.
inline void add_scaled(RowTable& dst, const RowTable& src, double factor, std::size_t width) {
  for (const auto& [k, r] : src) {
    auto [it, inserted] = dst.try_emplace(k);
    if (inserted) it->second.assign(width, 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) it->second[i] += factor * r[i];
  }
}

inline void apply_update(PolicyParams& params, const RowTable& grad, double step) {
  add_scaled(params.rows, grad, step, params.shape.vocab_size());
}

/// Position in the output grammar.
struct DecodeState {
  TokenId prev = 0;
  std::size_t reasoning_len = 0;
  std::size_t actions = 0;
  bool in_reasoning = false;
  bool done = false;

  static DecodeState initial(const PolicyShape& shape) {
    DecodeState s;
    s.prev = shape.eos();
    return s;
  }

  std::uint32_t bucket() const {
    return in_reasoning ? 0 : static_cast<std::uint32_t>(actions + 1);
  }

  RowKey key(std::uint32_t context) const { return {context, prev, bucket()}; }
};

inline bool is_legal(const PolicyShape& shape, const DecodeState& s, TokenId tok) {
  if (s.done || tok >= shape.vocab_size()) return false;
  if (s.actions == shape.horizon) return tok == shape.eos();
  if (s.in_reasoning) {
    if (shape.is_reasoning(tok)) return s.reasoning_len < shape.max_reasoning;
    return tok == shape.eor() && s.reasoning_len >= 1;
  }
  if (shape.is_action(tok)) return true;
  // BOR only opens the sequence, and only if there is something to reason with.
  return tok == shape.bor() && s.prev == shape.eos() && s.actions == 0 &&
         shape.num_reasoning > 0 && shape.max_reasoning > 0;
}

inline DecodeState advance(const PolicyShape& shape, DecodeState s, TokenId tok) {
  if (tok == shape.bor()) {
    s.in_reasoning = true;
  } else if (tok == shape.eor()) {
    s.in_reasoning = false;
  } else if (shape.is_reasoning(tok)) {
    ++s.reasoning_len;
  } else if (shape.is_action(tok)) {
    ++s.actions;
  } else if (tok == shape.eos()) {
    s.done = true;
  }
  s.prev = tok;
  return s;
}

inline std::vector<TokenId> legal_tokens(const PolicyShape& shape, const DecodeState& s) {
  std::vector<TokenId> out;
  for (TokenId t = 0; t < shape.vocab_size(); ++t) {
    if (is_legal(shape, s, t)) out.push_back(t);
  }
  return out;
}

/// Raw logits with illegal tokens masked to -inf.
inline std::vector<double> logits(const PolicyParams& params, std::uint32_t context,
                                  const DecodeState& state) {
  const PolicyShape& shape = params.shape;
  std::vector<double> out(shape.vocab_size(), -std::numeric_limits<double>::infinity());
  const auto* row = params.find(state.key(context));
  for (TokenId t = 0; t < shape.vocab_size(); ++t) {
    if (is_legal(shape, state, t)) out[t] = row ? (*row)[t] : 0.0;
  }
  return out;
}

inline std::vector<double> logits(const PolicyParams& params, const ContextDescriptor& context,
                                  const DecodeState& state) {
  return logits(params, context.index(), state);
}

/// Softmax of masked logits (temperature 1); illegal tokens get probability 0.
inline std::vector<double> softmax(std::span<const double> masked) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const double v : masked) mx = std::max(mx, v);
  std::vector<double> p(masked.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if (std::isfinite(masked[i])) {
      p[i] = std::exp(masked[i] - mx);
      z += p[i];
    }
  }
  for (double& v : p) v /= z;
  return p;
}

inline double log_softmax_at(std::span<const double> masked, TokenId tok) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const double v : masked) mx = std::max(mx, v);
  double z = 0.0;
  for (const double v : masked) {
    if (std::isfinite(v)) z += std::exp(v - mx);
  }
  return masked[tok] - mx - std::log(z);
}

/// Walks a complete output sequence through the grammar, calling
/// fn(state_before, token, position) for every token. Throws DataError on
/// an illegal token, a missing EOS or trailing tokens.
template <typename Fn>
void walk_sequence(const PolicyShape& shape, std::span<const TokenId> tokens, Fn&& fn) {
  DecodeState s = DecodeState::initial(shape);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_legal(shape, s, tokens[i])) {
      throw DataError("token " + std::to_string(tokens[i]) + " at position " +
                      std::to_string(i) + " violates the output grammar");
    }
    fn(s, tokens[i], i);
    s = advance(shape, s, tokens[i]);
  }
  if (!s.done) throw DataError("sequence does not end with EOS after all action tokens");
}

struct SamplerConfig {
  double temperature = 1.0;  // 0 selects argmax decoding
  std::size_t top_k = 0;     // 0 disables
  double top_p = 1.0;        // >= 1 disables

  /// Exploration settings used while sampling GRPO groups.
  static SamplerConfig exploration() { return {1.0, 0, 1.0}; }
  /// Settings used for inference-time plan generation.
  static SamplerConfig inference() { return {0.8, 20, 0.2}; }
  static SamplerConfig greedy() { return {0.0, 0, 1.0}; }

  bool unfiltered() const { return temperature == 1.0 && top_k == 0 && top_p >= 1.0; }
};

struct Episode {
  ContextDescriptor context;
  std::vector<TokenId> tokens;        // full output, ending in EOS
  std::vector<double> token_logprobs;  // under the filtered sampling distribution
  double sample_logprob = 0.0;        // sum of token_logprobs
  double policy_logprob = 0.0;        // under the unfiltered policy
  std::size_t reasoning_len = 0;
  TokenSequence actions;              // codebook ids
  std::optional<Trajectory> plan;
  RewardBreakdown reward;
};

namespace detail {

struct Filtered {
  std::vector<TokenId> tokens;
  std::vector<double> probs;  // normalized over `tokens`
};

inline Filtered filter_distribution(std::span<const double> masked, const SamplerConfig& cfg) {
  Filtered f;
  std::vector<TokenId> legal;
  for (TokenId t = 0; t < masked.size(); ++t) {
    if (std::isfinite(masked[t])) legal.push_back(t);
  }
  if (cfg.temperature <= 0.0 || cfg.top_k == 1) {
    TokenId best = legal.front();
    for (const TokenId t : legal) {
      if (masked[t] > masked[best]) best = t;
    }
    f.tokens = {best};
    f.probs = {1.0};
    return f;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (const TokenId t : legal) mx = std::max(mx, masked[t] / cfg.temperature);
  std::vector<double> w(legal.size());
  double z = 0.0;
  for (std::size_t i = 0; i < legal.size(); ++i) {
    w[i] = std::exp(masked[legal[i]] / cfg.temperature - mx);
    z += w[i];
  }
  if (cfg.top_k == 0 && cfg.top_p >= 1.0) {
    f.tokens = std::move(legal);
    for (double& v : w) v /= z;
    f.probs = std::move(w);
    return f;
  }
  std::vector<std::size_t> order(legal.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto heavier = [&](std::size_t a, std::size_t b) {
    return w[a] > w[b] || (w[a] == w[b] && a < b);
  };
  std::size_t keep = order.size();
  if (cfg.top_k > 0) {
    keep = std::min(keep, cfg.top_k);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      heavier);
  } else {
    std::sort(order.begin(), order.end(), heavier);
  }
  if (cfg.top_p < 1.0) {
    double cum = 0.0;
    std::size_t n = 0;
    while (n < keep) {
      cum += w[order[n]] / z;
      ++n;
      if (cum >= cfg.top_p) break;
    }
    keep = n;
  }
  double kept = 0.0;
  for (std::size_t i = 0; i < keep; ++i) kept += w[order[i]];
  for (std::size_t i = 0; i < keep; ++i) {
    f.tokens.push_back(legal[order[i]]);
    f.probs.push_back(w[order[i]] / kept);
  }
  return f;
}

}  // namespace detail

/// Samples one grammar-valid output sequence. Token log-probabilities are
/// those of the filtered distribution actually sampled from.
inline Episode sample_sequence(const PolicyParams& params, const ContextDescriptor& context,
                               const SamplerConfig& cfg, Rng& rng) {
  const PolicyShape& shape = params.shape;
  const std::uint32_t ctx = context.index();
  Episode ep;
  ep.context = context;
  DecodeState s = DecodeState::initial(shape);
  while (!s.done) {
    const auto masked = logits(params, ctx, s);
    const auto f = detail::filter_distribution(masked, cfg);
    std::size_t pick = f.tokens.size() - 1;
    if (f.tokens.size() > 1) {
      const double u = rng.uniform();
      double cum = 0.0;
      for (std::size_t i = 0; i < f.tokens.size(); ++i) {
        cum += f.probs[i];
        if (u < cum) {
          pick = i;
          break;
        }
      }
    }
    const TokenId tok = f.tokens[pick];
    ep.tokens.push_back(tok);
    ep.token_logprobs.push_back(std::log(f.probs[pick]));
    ep.sample_logprob += ep.token_logprobs.back();
    ep.policy_logprob += log_softmax_at(masked, tok);
    if (shape.is_action(tok)) ep.actions.push_back(tok);
    s = advance(shape, s, tok);
  }
  ep.reasoning_len = s.reasoning_len;
  return ep;
}

/// Per-token log-probabilities under the unfiltered (masked only) policy.
inline std::vector<double> token_logprobs(const PolicyParams& params, std::uint32_t context,
                                          std::span<const TokenId> tokens) {
  std::vector<double> out;
  out.reserve(tokens.size());
  walk_sequence(params.shape, tokens, [&](const DecodeState& s, TokenId tok, std::size_t) {
    out.push_back(log_softmax_at(logits(params, context, s), tok));
  });
  return out;
}

inline double sequence_logprob(const PolicyParams& params, const ContextDescriptor& context,
                               std::span<const TokenId> tokens) {
  const auto lp = token_logprobs(params, context.index(), tokens);
  return std::accumulate(lp.begin(), lp.end(), 0.0);
}

inline double sequence_logprob(const PolicyParams& params, const Episode& episode) {
  return sequence_logprob(params, episode.context, episode.tokens);
}

/// grad += sum_i weight(i) * d log p(token_i) / d params. Steps with a single
/// legal token have zero gradient and are skipped.
template <typename WeightFn>
void accumulate_logprob_grad(const PolicyParams& params, std::uint32_t context,
                             std::span<const TokenId> tokens, WeightFn&& weight, RowTable& grad) {
  const PolicyShape& shape = params.shape;
  walk_sequence(shape, tokens, [&](const DecodeState& s, TokenId tok, std::size_t pos) {
    const double w = weight(pos, s, tok);
    if (w == 0.0) return;
    const auto masked = logits(params, context, s);
    std::size_t n_legal = 0;
    for (const double v : masked) n_legal += std::isfinite(v) ? 1 : 0;
    if (n_legal < 2) return;
    const auto p = softmax(masked);
    auto [it, inserted] = grad.try_emplace(s.key(context));
    if (inserted) it->second.assign(shape.vocab_size(), 0.0);
    auto& g = it->second;
    for (std::size_t t = 0; t < p.size(); ++t) g[t] -= w * p[t];
    g[tok] += w;
  });
}

/// Exact gradient of the sequence log-probability; only visited rows appear.
inline RowTable grad_sequence_logprob(const PolicyParams& params, const ContextDescriptor& context,
                                      std::span<const TokenId> tokens) {
  RowTable grad;
  accumulate_logprob_grad(
      params, context.index(), tokens, [](std::size_t, const DecodeState&, TokenId) { return 1.0; },
      grad);
  return grad;
}

/// Maps the action ids of an episode onto a trajectory from `initial`.
inline std::optional<Trajectory> decode_plan(const Episode& ep, const Tokenizer& tokenizer,
                                             const Pose2D& initial) {
  try {
    return tokenizer.decode(ep.actions, initial);
  } catch (const DataError&) {
    return std::nullopt;
  }
}

}  // namespace tokplan
