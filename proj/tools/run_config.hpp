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

// Run configurations for the sft and rft subcommands. Every field has a
// default except the seed; the resolved configuration is written back to
// the run directory so the run can be repeated from it.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "tokplan/errors.hpp"
#include "tokplan/metrics.hpp"
#include "tokplan/policy.hpp"
#include "tokplan/training.hpp"

namespace tokplan::cli {

using nlohmann::json;

struct SftRunConfig {
  std::uint64_t seed = 0;
  std::string scenarios;
  std::string out;
  std::optional<std::string> codebook;  // built from the training split when absent
  double delta_disk = kDefaultDiskRadius;
  std::size_t k_max = kDefaultCodebookSize;
  double validation_fraction = 0.2;
  std::size_t num_reasoning = 16;
  std::size_t max_reasoning = 32;
  DatasetConfig dataset;
  SftConfig sft;
  RewardMode reward_mode = RewardMode::Pdms;
  RewardConfig reward = RewardConfig::toy();
  std::size_t eval_samples = 8;
};

struct RftRunConfig {
  std::uint64_t seed = 0;
  std::string sft_run;
  std::optional<std::string> scenarios;  // defaults to the SFT run's suite
  std::string out;
  double validation_fraction = 0.2;
  GrpoConfig grpo;
  std::size_t eval_samples = 8;
};

namespace detail {

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

inline std::uint64_t require_seed(const json& j) {
  if (!j.contains("seed")) throw DataError("config must set \"seed\"");
  return j.at("seed").get<std::uint64_t>();
}

inline std::string require_string(const json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("config must set \"") + key + "\"");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline json reward_json(RewardMode mode, const RewardConfig& r) {
  return {{"mode", std::string(to_string(mode))},
          {"lambda_r", r.lambda_r},
          {"delta_ade", r.delta_ade},
          {"kappa", r.kappa},
          {"gamma_cot", r.gamma_cot},
          {"l_tol", r.l_tol}};
}

inline void reward_from(const json& j, RewardMode& mode, RewardConfig& r) {
  if (j.contains("mode")) mode = parse_reward_mode(j.at("mode").get<std::string>());
  detail::take(j, "lambda_r", r.lambda_r);
  detail::take(j, "delta_ade", r.delta_ade);
  detail::take(j, "kappa", r.kappa);
  detail::take(j, "gamma_cot", r.gamma_cot);
  detail::take(j, "l_tol", r.l_tol);
}

inline json to_json(const SftRunConfig& c) {
  json j = {{"seed", c.seed},
            {"scenarios", c.scenarios},
            {"out", c.out},
            {"delta_disk", c.delta_disk},
            {"k_max", c.k_max},
            {"validation_fraction", c.validation_fraction},
            {"num_reasoning", c.num_reasoning},
            {"max_reasoning", c.max_reasoning},
            {"dataset",
             {{"cot_fraction_simple", c.dataset.cot_fraction_simple},
              {"cot_fraction_complex", c.dataset.cot_fraction_complex}}},
            {"sft",
             {{"lambda_a", c.sft.lambda_a},
              {"lambda_cot", c.sft.lambda_cot},
              {"learning_rate", c.sft.learning_rate},
              {"warmup_steps", c.sft.warmup_steps},
              {"decay_rate", c.sft.decay_rate},
              {"decay_every", c.sft.decay_every},
              {"epochs", c.sft.epochs},
              {"batch_size", c.sft.batch_size},
              {"max_grad_norm", c.sft.max_grad_norm}}},
            {"reward", reward_json(c.reward_mode, c.reward)},
            {"eval_samples", c.eval_samples}};
  if (c.codebook) j["codebook"] = *c.codebook;
  return j;
}

inline SftRunConfig sft_config_from(const json& j) {
  SftRunConfig c;
  c.seed = detail::require_seed(j);
  c.scenarios = detail::require_string(j, "scenarios");
  c.out = detail::require_string(j, "out");
  if (j.contains("codebook")) c.codebook = j.at("codebook").get<std::string>();
  detail::take(j, "delta_disk", c.delta_disk);
  detail::take(j, "k_max", c.k_max);
  detail::take(j, "validation_fraction", c.validation_fraction);
  detail::take(j, "num_reasoning", c.num_reasoning);
  detail::take(j, "max_reasoning", c.max_reasoning);
  detail::take(j, "eval_samples", c.eval_samples);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    detail::take(d, "cot_fraction_simple", c.dataset.cot_fraction_simple);
    detail::take(d, "cot_fraction_complex", c.dataset.cot_fraction_complex);
  }
  if (j.contains("sft")) {
    const auto& s = j.at("sft");
    detail::take(s, "lambda_a", c.sft.lambda_a);
    detail::take(s, "lambda_cot", c.sft.lambda_cot);
    detail::take(s, "learning_rate", c.sft.learning_rate);
    detail::take(s, "warmup_steps", c.sft.warmup_steps);
    detail::take(s, "decay_rate", c.sft.decay_rate);
    detail::take(s, "decay_every", c.sft.decay_every);
    detail::take(s, "epochs", c.sft.epochs);
    detail::take(s, "batch_size", c.sft.batch_size);
    detail::take(s, "max_grad_norm", c.sft.max_grad_norm);
  }
  if (j.contains("reward")) reward_from(j.at("reward"), c.reward_mode, c.reward);
  if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
    throw DataError("validation_fraction must lie in [0, 1)");
  }
  if (c.eval_samples == 0) throw DataError("eval_samples must be positive");
  c.sft.validate();
  return c;
}

inline json to_json(const RftRunConfig& c) {
  const GrpoConfig& g = c.grpo;
  json j = {{"seed", c.seed},
            {"sft_run", c.sft_run},
            {"out", c.out},
            {"validation_fraction", c.validation_fraction},
            {"grpo",
             {{"group_size", g.group_size},
              {"beta", g.beta},
              {"clip_eps", g.clip_eps},
              {"learning_rate", g.learning_rate},
              {"steps", g.steps},
              {"std_eps", g.std_eps},
              {"clipped", g.clipped},
              {"update_epochs", g.update_epochs},
              {"per_token_kl", g.per_token_kl},
              {"max_grad_norm", g.max_grad_norm},
              {"smoothing_window", g.smoothing_window},
              {"eval_interval", g.eval_interval},
              {"eval_samples", g.eval_samples}}},
            {"reward", reward_json(g.reward_mode, g.reward)},
            {"eval_samples", c.eval_samples}};
  if (c.scenarios) j["scenarios"] = *c.scenarios;
  return j;
}

inline RftRunConfig rft_config_from(const json& j) {
  RftRunConfig c;
  c.seed = detail::require_seed(j);
  c.sft_run = detail::require_string(j, "sft_run");
  c.out = detail::require_string(j, "out");
  if (j.contains("scenarios")) c.scenarios = j.at("scenarios").get<std::string>();
  detail::take(j, "validation_fraction", c.validation_fraction);
  detail::take(j, "eval_samples", c.eval_samples);
  if (j.contains("grpo")) {
    const auto& g = j.at("grpo");
    detail::take(g, "group_size", c.grpo.group_size);
    detail::take(g, "beta", c.grpo.beta);
    detail::take(g, "clip_eps", c.grpo.clip_eps);
    detail::take(g, "learning_rate", c.grpo.learning_rate);
    detail::take(g, "steps", c.grpo.steps);
    detail::take(g, "std_eps", c.grpo.std_eps);
    detail::take(g, "clipped", c.grpo.clipped);
    detail::take(g, "update_epochs", c.grpo.update_epochs);
    detail::take(g, "per_token_kl", c.grpo.per_token_kl);
    detail::take(g, "max_grad_norm", c.grpo.max_grad_norm);
    detail::take(g, "smoothing_window", c.grpo.smoothing_window);
    detail::take(g, "eval_interval", c.grpo.eval_interval);
    detail::take(g, "eval_samples", c.grpo.eval_samples);
  }
  if (j.contains("reward")) reward_from(j.at("reward"), c.grpo.reward_mode, c.grpo.reward);
  if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
    throw DataError("validation_fraction must lie in [0, 1)");
  }
  if (c.eval_samples == 0) throw DataError("eval_samples must be positive");
  c.grpo.validate();
  return c;
}

}  // namespace tokplan::cli
