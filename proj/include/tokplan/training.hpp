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

// Two training stages for the tabular policy: weighted supervised
// fine-tuning on target sequences, then group-relative policy optimization
// against the plan reward with a KL pull toward the supervised reference.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tokplan/errors.hpp"
#include "tokplan/metrics.hpp"
#include "tokplan/policy.hpp"
#include "tokplan/rng.hpp"
#include "tokplan/scenario.hpp"
#include "tokplan/tokenizer.hpp"

namespace tokplan {

struct LossAndGrad {
  double loss = 0.0;
  RowTable grad;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

/// Rescales `grad` in place so its global L2 norm is at most max_norm.
/// Returns the norm before clipping. max_norm <= 0 disables clipping.
inline double clip_grad_norm(RowTable& grad, double max_norm) {
  const double norm = std::sqrt(squared_norm(grad));
  if (max_norm > 0.0 && norm > max_norm) scale_rows(grad, max_norm / norm);
  return norm;
}

// ---------------------------------------------------------------------------
// Supervised fine-tuning

struct SftConfig {
  double lambda_a = 1.0;
  double lambda_cot = 40.0;
  double learning_rate = 20.0;  // tabular logits; steps are clipped to norm 1 first
  std::size_t warmup_steps = 500;
  double decay_rate = 0.02;
  std::size_t decay_every = 2000;
  std::size_t epochs = 5;
  std::size_t batch_size = 8;
  double max_grad_norm = 1.0;

  void validate() const {
    if (!(lambda_a > 0.0 && lambda_cot > 0.0 && learning_rate > 0.0 && decay_rate >= 0.0 &&
          decay_rate < 1.0 && decay_every > 0 && epochs > 0 && batch_size > 0 &&
          max_grad_norm > 0.0)) {
      throw DataError("invalid SFT configuration");
    }
  }
};

/// Linear warmup followed by step decay.
inline double learning_rate_at(std::size_t step, double base, std::size_t warmup, double decay_rate,
                               std::size_t decay_every) {
  const double ramp =
      warmup == 0 ? 1.0
                  : std::min(1.0, static_cast<double>(step + 1) / static_cast<double>(warmup));
  const double decays = static_cast<double>(step / decay_every);
  return base * ramp * std::pow(1.0 - decay_rate, decays);
}

inline double learning_rate_at(std::size_t step, const SftConfig& cfg) {
  return learning_rate_at(step, cfg.learning_rate, cfg.warmup_steps, cfg.decay_rate,
                          cfg.decay_every);
}

struct SftExample {
  ContextDescriptor context;
  std::vector<TokenId> tokens;  // full target, ending in EOS
  bool has_cot = false;
};

/// Builds a grammar-checked target from optional reasoning tokens (indices
/// into the reasoning vocabulary) and action ids.
inline SftExample make_example(const PolicyShape& shape, const ContextDescriptor& context,
                               std::span<const std::size_t> reasoning,
                               std::span<const std::size_t> actions) {
  SftExample ex;
  ex.context = context;
  ex.has_cot = !reasoning.empty();
  if (ex.has_cot) {
    ex.tokens.push_back(shape.bor());
    for (const std::size_t r : reasoning) {
      if (r >= shape.num_reasoning) throw DataError("reasoning token out of range");
      ex.tokens.push_back(shape.reasoning(r));
    }
    ex.tokens.push_back(shape.eor());
  }
  for (const std::size_t a : actions) {
    if (a >= shape.num_actions) throw DataError("action token out of range");
    ex.tokens.push_back(shape.action(a));
  }
  ex.tokens.push_back(shape.eos());
  walk_sequence(shape, ex.tokens, [](const DecodeState&, TokenId, std::size_t) {});
  return ex;
}

/// Weighted negative log-likelihood of one target and its exact gradient.
///
/// Token accounting: the language-model term averages over every target
/// token except the terminating EOS (N = L + 2 + T for a reasoning target,
/// N = T otherwise); the action term averages over the T action tokens.
inline LossAndGrad sft_loss(const PolicyParams& params, const SftExample& ex,
                            const SftConfig& cfg) {
  const PolicyShape& shape = params.shape;
  const std::size_t n_tokens = ex.tokens.size() - 1;
  const double w = ex.has_cot ? cfg.lambda_cot : 1.0;
  const double inv_n = 1.0 / static_cast<double>(n_tokens);
  const double inv_t = 1.0 / static_cast<double>(shape.horizon);
  const auto coeff = [&](std::size_t pos, TokenId tok) {
    if (pos >= n_tokens) return 0.0;
    return inv_n + (shape.is_action(tok) ? cfg.lambda_a * inv_t : 0.0);
  };

  LossAndGrad out;
  const std::uint32_t ctx = ex.context.index();
  const auto lp = token_logprobs(params, ctx, ex.tokens);
  // The weight is applied last so the CoT scaling is exact.
  for (std::size_t i = 0; i < lp.size(); ++i) out.loss -= coeff(i, ex.tokens[i]) * lp[i];
  out.loss *= w;
  accumulate_logprob_grad(
      params, ctx, ex.tokens,
      [&](std::size_t pos, const DecodeState&, TokenId tok) { return -w * coeff(pos, tok); },
      out.grad);
  return out;
}

inline double mean_sft_loss(const PolicyParams& params, std::span<const SftExample> data,
                            const SftConfig& cfg) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : data) sum += sft_loss(params, ex, cfg).loss;
  return sum / static_cast<double>(data.size());
}

struct SftResult {
  PolicyParams params;
  std::vector<double> epoch_loss;  // mean training loss per epoch
  std::vector<double> val_loss;    // after each epoch, when a validation set is given
  std::size_t steps = 0;
};

inline SftResult sft_train(PolicyParams params, std::span<const SftExample> dataset,
                           const SftConfig& cfg, std::uint64_t seed,
                           std::span<const SftExample> validation = {}) {
  cfg.validate();
  if (dataset.empty()) throw DataError("SFT dataset is empty");
  SftResult res;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t width = params.shape.vocab_size();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(mix_seed(seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      RowTable grad;
      for (std::size_t j = start; j < end; ++j) {
        auto lg = sft_loss(params, dataset[order[j]], cfg);
        loss_sum += lg.loss;
        add_scaled(grad, lg.grad, inv_b, width);
      }
      clip_grad_norm(grad, cfg.max_grad_norm);
      apply_update(params, grad, -learning_rate_at(res.steps, cfg));
      ++res.steps;
    }
    res.epoch_loss.push_back(loss_sum / static_cast<double>(dataset.size()));
    if (!validation.empty()) res.val_loss.push_back(mean_sft_loss(params, validation, cfg));
  }
  res.params = std::move(params);
  return res;
}

// ---------------------------------------------------------------------------
// Supervised targets from a scenario suite

struct DatasetConfig {
  double cot_fraction_simple = 0.2;
  double cot_fraction_complex = 1.0;
};

/// Reasoning tokens for a scenario: four blocks (scene, critical objects,
/// intent, decision) each drawing a run of tokens from its own slice of the
/// reasoning vocabulary. Complex scenes produce longer runs. The result is a
/// function of the context descriptor only.
inline std::vector<std::size_t> reasoning_template(const ContextDescriptor& ctx,
                                                   const PolicyShape& shape) {
  const std::size_t m = shape.num_reasoning;
  if (m == 0 || shape.max_reasoning == 0) return {};
  if (m < 4) return {0};
  const std::size_t block = m / 4;
  const bool complex = ctx.complexity == Complexity::Complex;
  const std::array<std::size_t, 4> base =
      complex ? std::array<std::size_t, 4>{3, 3, 4, 3} : std::array<std::size_t, 4>{2, 2, 3, 2};
  const std::array<std::size_t, 4> extra{
      0, ctx.sector == ObstacleSector::None ? 0u : 1u, ctx.speed_bucket % 2,
      static_cast<std::size_t>(ctx.instruction) % 2};
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < 4; ++b) {
    const std::size_t len = std::min(block, base[b] + extra[b]);
    for (std::size_t j = 0; j < len && out.size() < shape.max_reasoning; ++j) {
      out.push_back(b * block + j);
    }
  }
  return out;
}

inline std::vector<SftExample> build_sft_dataset(std::span<const Scenario> suite,
                                                 const Tokenizer& tokenizer,
                                                 const PolicyShape& shape,
                                                 const DatasetConfig& cfg, std::uint64_t seed) {
  std::vector<SftExample> out;
  out.reserve(suite.size());
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const Scenario& sc = suite[i];
    const ContextDescriptor ctx = describe(sc);
    const auto actions = tokenizer.encode(sc.gt_traj);
    if (actions.size() != shape.horizon) {
      throw DataError("scenario " + sc.id + " ground truth does not span the planning horizon");
    }
    Rng rng(mix_seed(seed, i));
    const double p = sc.complexity == Complexity::Complex ? cfg.cot_fraction_complex
                                                          : cfg.cot_fraction_simple;
    const bool cot = rng.bernoulli(p);
    const auto reasoning = cot ? reasoning_template(ctx, shape) : std::vector<std::size_t>{};
    out.push_back(make_example(shape, ctx, reasoning, actions));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Group-relative policy optimization

struct GrpoConfig {
  std::size_t group_size = 8;
  double beta = 0.04;
  double clip_eps = 0.2;
  double learning_rate = 2.0;
  std::size_t steps = 2000;
  RewardMode reward_mode = RewardMode::Pdms;
  RewardConfig reward = RewardConfig::toy();
  double std_eps = 1e-8;
  bool clipped = false;           // full min/clip objective
  std::size_t update_epochs = 1;  // policy updates per sampling round (clipped mode)
  bool per_token_kl = false;
  double max_grad_norm = 1.0;  // <= 0 disables
  std::size_t smoothing_window = 100;
  std::size_t eval_interval = 100;
  std::size_t eval_samples = 2;
  std::size_t threads = 1;

  void validate() const {
    if (group_size < 2) throw DataError("GRPO group size must be at least 2");
    if (beta < 0.0) throw DataError("GRPO beta must be non-negative");
    if (!(learning_rate > 0.0 && clip_eps > 0.0 && std_eps > 0.0 && update_epochs > 0 &&
          smoothing_window > 0 && eval_interval > 0 && eval_samples > 0)) {
      throw DataError("invalid GRPO configuration");
    }
    if (!clipped && update_epochs != 1) {
      throw DataError("multiple update epochs require the clipped objective");
    }
  }
};

/// Group-normalized advantages with population standard deviation; a
/// degenerate group (std < eps) yields all zeros.
inline std::vector<double> compute_advantages(std::span<const double> rewards, double eps = 1e-8) {
  if (rewards.size() < 2) throw DataError("advantages need a group of at least two rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (const double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(rewards.size(), 0.0);
  if (!(sd >= eps)) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

/// u - log u - 1 with u = exp(logp_ref - logp_cur).
inline double kl_estimate(double logp_ref, double logp_cur) {
  const double d = logp_ref - logp_cur;
  return std::max(0.0, std::expm1(d) - d);
}

struct GrpoObjective {
  double loss = 0.0;
  double kl = 0.0;         // mean over the group
  double mean_ratio = 0.0;
  std::size_t clipped = 0;  // samples whose surrogate was clipped
  RowTable grad;
};

/// Loss -(1/G) sum_i [surrogate_i - beta * KL_i] and its gradient at `params`.
/// old_logprob holds the sequence log-probabilities at sampling time.
inline GrpoObjective grpo_objective(const PolicyParams& params, const PolicyParams& ref,
                                    std::span<const Episode> group,
                                    std::span<const double> advantages,
                                    std::span<const double> old_logprob, const GrpoConfig& cfg) {
  if (advantages.size() != group.size() || old_logprob.size() != group.size()) {
    throw DataError("GRPO inputs disagree on the group size");
  }
  GrpoObjective out;
  const double inv_g = 1.0 / static_cast<double>(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Episode& ep = group[i];
    const std::uint32_t ctx = ep.context.index();
    const auto cur = token_logprobs(params, ctx, ep.tokens);
    const auto ref_tok = token_logprobs(ref, ctx, ep.tokens);
    const double lp = std::accumulate(cur.begin(), cur.end(), 0.0);
    const double lp_ref = std::accumulate(ref_tok.begin(), ref_tok.end(), 0.0);

    const double ratio = std::exp(lp - old_logprob[i]);
    const double a = advantages[i];
    double surrogate = ratio * a;
    double surrogate_coeff = ratio * a;  // d surrogate / d logp
    if (cfg.clipped) {
      const bool clip_hi = a >= 0.0 && ratio > 1.0 + cfg.clip_eps;
      const bool clip_lo = a < 0.0 && ratio < 1.0 - cfg.clip_eps;
      if (clip_hi || clip_lo) {
        surrogate = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
        surrogate_coeff = 0.0;
        ++out.clipped;
      }
    }
    out.mean_ratio += ratio * inv_g;

    std::vector<double> token_weight(ep.tokens.size(), 0.0);
    double kl = 0.0;
    if (cfg.per_token_kl) {
      for (std::size_t t = 0; t < cur.size(); ++t) {
        kl += kl_estimate(ref_tok[t], cur[t]);
        const double u = std::exp(ref_tok[t] - cur[t]);
        token_weight[t] = -inv_g * (surrogate_coeff - cfg.beta * (1.0 - u));
      }
    } else {
      kl = kl_estimate(lp_ref, lp);
      const double u = std::exp(lp_ref - lp);
      std::fill(token_weight.begin(), token_weight.end(),
                -inv_g * (surrogate_coeff - cfg.beta * (1.0 - u)));
    }
    out.kl += kl * inv_g;
    out.loss -= inv_g * (surrogate - cfg.beta * kl);
    accumulate_logprob_grad(
        params, ctx, ep.tokens,
        [&](std::size_t pos, const DecodeState&, TokenId) { return token_weight[pos]; }, out.grad);
  }
  return out;
}

struct GrpoDiagnostics {
  double mean_reward = 0.0;
  double mean_driving = 0.0;
  double mean_pdms = 0.0;
  double mean_reasoning = 0.0;
  double kl = 0.0;
  double loss = 0.0;
  double adv_mean = 0.0;
  double adv_std = 0.0;
  double grad_norm = 0.0;
  std::size_t clipped = 0;
};

/// One sampling round's policy update. Episodes must carry their reward and
/// the unfiltered sequence log-probability at sampling time.
inline GrpoDiagnostics grpo_step(PolicyParams& params, const PolicyParams& ref,
                                 std::span<const Episode> group, const GrpoConfig& cfg) {
  if (group.size() < 2) throw DataError("GRPO needs a group of at least two episodes");
  if (!(params.shape == ref.shape)) throw DataError("policy and reference shapes differ");
  for (const auto& ep : group) {
    for (const TokenId t : ep.tokens) {
      if (t >= params.shape.vocab_size()) throw DataError("episode token outside the vocabulary");
    }
  }
  GrpoDiagnostics d;
  std::vector<double> rewards;
  std::vector<double> old_lp;
  for (const auto& ep : group) {
    rewards.push_back(ep.reward.r_total);
    old_lp.push_back(ep.policy_logprob);
    d.mean_driving += ep.reward.r_driving;
    d.mean_pdms += ep.reward.pdms;
    d.mean_reasoning += static_cast<double>(ep.reasoning_len);
  }
  const double g = static_cast<double>(group.size());
  d.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / g;
  d.mean_driving /= g;
  d.mean_pdms /= g;
  d.mean_reasoning /= g;
  const auto adv = compute_advantages(rewards, cfg.std_eps);
  d.adv_mean = std::accumulate(adv.begin(), adv.end(), 0.0) / g;
  for (const double a : adv) d.adv_std += (a - d.adv_mean) * (a - d.adv_mean);
  d.adv_std = std::sqrt(d.adv_std / g);

  const std::size_t rounds = cfg.clipped ? cfg.update_epochs : 1;
  for (std::size_t r = 0; r < rounds; ++r) {
    auto obj = grpo_objective(params, ref, group, adv, old_lp, cfg);
    if (r == 0) {
      d.loss = obj.loss;
      d.kl = obj.kl;
    }
    d.clipped += obj.clipped;
    d.grad_norm = clip_grad_norm(obj.grad, cfg.max_grad_norm);
    apply_update(params, obj.grad, -cfg.learning_rate);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Rollouts and evaluation

/// Samples, decodes and scores one episode for a scenario.
inline Episode rollout(const PolicyParams& params, const Scenario& sc,
                       const ContextDescriptor& ctx, const Tokenizer& tokenizer,
                       const SamplerConfig& sampler, RewardMode mode, const RewardConfig& rcfg,
                       Rng& rng) {
  Episode ep = sample_sequence(params, ctx, sampler, rng);
  ep.plan = decode_plan(ep, tokenizer, sc.ego.pose);
  ep.reward = total_reward(ep.plan, sc, ep.reasoning_len, mode, rcfg);
  return ep;
}

struct EvalAggregate {
  std::size_t count = 0;
  double mean_total = 0.0;
  double mean_driving = 0.0;
  double mean_pdms = 0.0;
  double mean_reasoning = 0.0;
  double fast_fraction = 0.0;
};

struct EvalSummary {
  EvalAggregate all;
  EvalAggregate simple;
  EvalAggregate complex;
};

struct EvalRow {
  std::size_t scenario = 0;
  std::size_t sample = 0;
  Episode episode;
};

namespace detail {

inline void accumulate(EvalAggregate& a, const Episode& ep) {
  ++a.count;
  a.mean_total += ep.reward.r_total;
  a.mean_driving += ep.reward.r_driving;
  a.mean_pdms += ep.reward.pdms;
  a.mean_reasoning += static_cast<double>(ep.reasoning_len);
  a.fast_fraction += ep.reasoning_len == 0 ? 1.0 : 0.0;
}

inline void finish(EvalAggregate& a) {
  if (a.count == 0) return;
  const double n = static_cast<double>(a.count);
  a.mean_total /= n;
  a.mean_driving /= n;
  a.mean_pdms /= n;
  a.mean_reasoning /= n;
  a.fast_fraction /= n;
}

}  // namespace detail

inline EvalSummary summarize(std::span<const EvalRow> rows, std::span<const Scenario> suite) {
  EvalSummary s;
  for (const auto& row : rows) {
    detail::accumulate(s.all, row.episode);
    detail::accumulate(suite[row.scenario].complexity == Complexity::Simple ? s.simple : s.complex,
                       row.episode);
  }
  detail::finish(s.all);
  detail::finish(s.simple);
  detail::finish(s.complex);
  return s;
}

/// Rolls out `samples` episodes per scenario; episode (i, s) uses its own
/// random stream so results do not depend on the thread count.
inline std::vector<EvalRow> evaluate_rows(const PolicyParams& params,
                                          std::span<const Scenario> suite,
                                          const Tokenizer& tokenizer, const SamplerConfig& sampler,
                                          std::size_t samples, std::uint64_t seed,
                                          RewardMode mode, const RewardConfig& rcfg,
                                          std::size_t threads = 1) {
  std::vector<EvalRow> rows(suite.size() * samples);
  parallel_for(rows.size(), threads, [&](std::size_t k) {
    const std::size_t i = k / samples;
    const std::size_t s = k % samples;
    Rng rng(mix_seed(seed, i, s));
    rows[k].scenario = i;
    rows[k].sample = s;
    rows[k].episode =
        rollout(params, suite[i], describe(suite[i]), tokenizer, sampler, mode, rcfg, rng);
  });
  return rows;
}

inline EvalSummary evaluate_policy(const PolicyParams& params, std::span<const Scenario> suite,
                                   const Tokenizer& tokenizer, const SamplerConfig& sampler,
                                   std::size_t samples, std::uint64_t seed, RewardMode mode,
                                   const RewardConfig& rcfg, std::size_t threads = 1) {
  const auto rows =
      evaluate_rows(params, suite, tokenizer, sampler, samples, seed, mode, rcfg, threads);
  return summarize(rows, suite);
}

/// Trailing moving average; the first entries average over what exists.
inline std::vector<double> smooth(std::span<const double> xs, std::size_t window) {
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= window) sum -= xs[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

struct CurvePoint {
  std::size_t step = 0;
  std::size_t scenario = 0;
  Complexity complexity = Complexity::Simple;
  double mean_reward = 0.0;
  double mean_driving = 0.0;
  double mean_pdms = 0.0;
  double mean_reasoning = 0.0;
  double kl = 0.0;
  double loss = 0.0;
  double smoothed_reward = 0.0;
};

struct ValidationPoint {
  std::size_t step = 0;
  double mean_total = 0.0;
};

struct RftResult {
  PolicyParams final_params;
  PolicyParams best_params;
  std::size_t best_step = 0;
  double best_validation = 0.0;
  std::vector<CurvePoint> curve;
  std::vector<ValidationPoint> validation;

  double final_smoothed_reward() const {
    return curve.empty() ? 0.0 : curve.back().smoothed_reward;
  }
};

/// GRPO loop over a training split with best-checkpoint selection on a
/// validation split. The SFT parameters serve as both the starting point and
/// the frozen reference.
inline RftResult rft_train(const PolicyParams& sft_params, std::span<const Scenario> train,
                           std::span<const Scenario> validation, const Tokenizer& tokenizer,
                           const GrpoConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (train.empty()) throw DataError("RFT needs at least one training scenario");
  if (sft_params.shape.num_actions != tokenizer.vocabulary_size()) {
    throw DataError("policy action vocabulary does not match the codebook");
  }
  const PolicyParams& ref = sft_params;
  PolicyParams params = sft_params;
  std::vector<ContextDescriptor> contexts;
  for (const auto& sc : train) contexts.push_back(describe(sc));

  RftResult res;
  const auto validate_at = [&](std::size_t step) {
    if (validation.empty()) return;
    const auto s = evaluate_policy(params, validation, tokenizer, SamplerConfig::exploration(),
                                   cfg.eval_samples, mix_seed(seed, 3), cfg.reward_mode,
                                   cfg.reward, cfg.threads);
    res.validation.push_back({step, s.all.mean_total});
    if (res.validation.size() == 1 || s.all.mean_total > res.best_validation) {
      res.best_validation = s.all.mean_total;
      res.best_step = step;
      res.best_params = params;
    }
  };
  validate_at(0);

  Rng scenario_rng(mix_seed(seed, 1));
  const std::uint64_t episode_seed = mix_seed(seed, 2);
  std::vector<double> rewards;
  std::vector<Episode> group(cfg.group_size);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const std::size_t idx = scenario_rng.index(train.size());
    parallel_for(group.size(), cfg.threads, [&](std::size_t i) {
      Rng rng(mix_seed(episode_seed, step, i));
      group[i] = rollout(params, train[idx], contexts[idx], tokenizer,
                         SamplerConfig::exploration(), cfg.reward_mode, cfg.reward, rng);
    });
    const auto d = grpo_step(params, ref, group, cfg);
    rewards.push_back(d.mean_reward);
    CurvePoint p;
    p.step = step + 1;
    p.scenario = idx;
    p.complexity = train[idx].complexity;
    p.mean_reward = d.mean_reward;
    p.mean_driving = d.mean_driving;
    p.mean_pdms = d.mean_pdms;
    p.mean_reasoning = d.mean_reasoning;
    p.kl = d.kl;
    p.loss = d.loss;
    const std::size_t lo = rewards.size() > cfg.smoothing_window
                               ? rewards.size() - cfg.smoothing_window
                               : 0;
    p.smoothed_reward = std::accumulate(rewards.begin() + static_cast<std::ptrdiff_t>(lo),
                                        rewards.end(), 0.0) /
                        static_cast<double>(rewards.size() - lo);
    res.curve.push_back(p);
    if ((step + 1) % cfg.eval_interval == 0) validate_at(step + 1);
  }
  res.final_params = std::move(params);
  if (validation.empty()) {
    res.best_params = res.final_params;
    res.best_step = cfg.steps;
  }
  return res;
}

}  // namespace tokplan
