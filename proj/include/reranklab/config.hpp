// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once
// One JSON config document with a section per module. Missing sections and
// fields fall back to defaults; a --seed override (flag or RERANKLAB_SEED)
// re-seeds every module at once. The FNV-1a hash of the canonical dump is
// embedded in outputs for provenance.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include <json.hpp>

#include "reranklab/grpo.hpp"
#include "reranklab/io.hpp"
#include "reranklab/policy.hpp"
#include "reranklab/scorer.hpp"
#include "reranklab/simulator.hpp"

namespace reranklab {

struct MetricsConfig {
  std::vector<int> ks = {1, 5, 10};
  double judge_margin = 0.02;
  double long_play_threshold = 0.6;

  void validate() const {
    if (ks.empty()) throw ValidationError("metrics: empty k list");
    for (int k : ks) {
      if (k < 1) throw ValidationError("metrics: k must be >= 1");
    }
    if (!(judge_margin >= 0.0)) {
      throw ValidationError("metrics: judge_margin must be >= 0");
    }
    if (!(long_play_threshold >= 0.0 && long_play_threshold <= 1.0)) {
      throw ValidationError("metrics: long_play_threshold must be in [0,1]");
    }
  }
};

struct PipelineConfig {
  SimConfig simulator;
  TrainConfig scorer;
  PretrainConfig policy;
  RewardConfig reward;
  GrpoConfig grpo;
  MetricsConfig metrics;

  void validate() const {
    simulator.validate();
    scorer.validate();
    policy.validate();
    reward.validate();
    grpo.validate();
    metrics.validate();
  }
};

namespace detail {

template <typename T>
void maybe_get(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline ordered_json pipeline_config_to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["simulator"] = sim_config_to_json(cfg.simulator);
  j["scorer"] = {{"lambda_reg", cfg.scorer.lambda_reg},
                 {"learning_rate", cfg.scorer.learning_rate},
                 {"epochs", cfg.scorer.epochs},
                 {"batch_size", cfg.scorer.batch_size},
                 {"seed", cfg.scorer.seed},
                 {"d_h", cfg.scorer.d_h},
                 {"holdout_fraction", cfg.scorer.holdout_fraction}};
  j["policy"] = {{"learning_rate", cfg.policy.learning_rate},
                 {"epochs", cfg.policy.epochs},
                 {"batch_size", cfg.policy.batch_size},
                 {"seed", cfg.policy.seed}};
  j["reward"] = {{"alpha", cfg.reward.alpha},
                 {"beta", cfg.reward.beta},
                 {"k", cfg.reward.k}};
  j["grpo"] = {{"group_size", cfg.grpo.group_size},
               {"learning_rate", cfg.grpo.learning_rate},
               {"steps", cfg.grpo.steps},
               {"seed", cfg.grpo.seed},
               {"advantage_epsilon", cfg.grpo.advantage_epsilon}};
  j["metrics"] = {{"ks", cfg.metrics.ks},
                  {"judge_margin", cfg.metrics.judge_margin},
                  {"long_play_threshold", cfg.metrics.long_play_threshold}};
  return j;
}

inline PipelineConfig pipeline_config_from_json(const ordered_json& j) {
  PipelineConfig cfg;
  if (j.contains("simulator")) {
    cfg.simulator = sim_config_from_json(j.at("simulator"));
  }
  if (j.contains("scorer")) {
    const auto& s = j.at("scorer");
    detail::maybe_get(s, "lambda_reg", cfg.scorer.lambda_reg);
    detail::maybe_get(s, "learning_rate", cfg.scorer.learning_rate);
    detail::maybe_get(s, "epochs", cfg.scorer.epochs);
    detail::maybe_get(s, "batch_size", cfg.scorer.batch_size);
    detail::maybe_get(s, "seed", cfg.scorer.seed);
    detail::maybe_get(s, "d_h", cfg.scorer.d_h);
    detail::maybe_get(s, "holdout_fraction", cfg.scorer.holdout_fraction);
  }
  if (j.contains("policy")) {
    const auto& s = j.at("policy");
    detail::maybe_get(s, "learning_rate", cfg.policy.learning_rate);
    detail::maybe_get(s, "epochs", cfg.policy.epochs);
    detail::maybe_get(s, "batch_size", cfg.policy.batch_size);
    detail::maybe_get(s, "seed", cfg.policy.seed);
  }
  if (j.contains("reward")) {
    const auto& s = j.at("reward");
    detail::maybe_get(s, "alpha", cfg.reward.alpha);
    detail::maybe_get(s, "beta", cfg.reward.beta);
    detail::maybe_get(s, "k", cfg.reward.k);
  }
  if (j.contains("grpo")) {
    const auto& s = j.at("grpo");
    detail::maybe_get(s, "group_size", cfg.grpo.group_size);
    detail::maybe_get(s, "learning_rate", cfg.grpo.learning_rate);
    detail::maybe_get(s, "steps", cfg.grpo.steps);
    detail::maybe_get(s, "seed", cfg.grpo.seed);
    detail::maybe_get(s, "advantage_epsilon", cfg.grpo.advantage_epsilon);
  }
  if (j.contains("metrics")) {
    const auto& s = j.at("metrics");
    detail::maybe_get(s, "ks", cfg.metrics.ks);
    detail::maybe_get(s, "judge_margin", cfg.metrics.judge_margin);
    detail::maybe_get(s, "long_play_threshold",
                      cfg.metrics.long_play_threshold);
  }
  cfg.validate();
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  auto in = detail::open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return pipeline_config_from_json(detail::parse_json(ss.str(), path));
}

inline void apply_seed_override(PipelineConfig& cfg, std::uint64_t seed) {
  cfg.simulator.seed = seed;
  cfg.scorer.seed = seed;
  cfg.policy.seed = seed;
  cfg.grpo.seed = seed;
}

// Hash of the effective (post-override) config, hex-encoded.
inline std::string config_hash(const PipelineConfig& cfg) {
  std::uint64_t h = rng::hash_str(pipeline_config_to_json(cfg).dump());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Environment override helper: returns RERANKLAB_<NAME> when set.
inline std::optional<std::string> env_override(const std::string& name) {
  const char* v = std::getenv(("RERANKLAB_" + name).c_str());
  if (v == nullptr) return std::nullopt;
  return std::string(v);
}

}  // namespace reranklab
