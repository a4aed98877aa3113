// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once
// Page-level alignment. The scorer's experience scores induce an ideal
// order per session; generated lists are rewarded with a mix of the
// behavioral objective and nDCG against that ideal order, and the policy
// ascends group-relative advantages over sampled rollouts (no critic).
//
// Graded relevance gives the item at rank r of the ideal order the value
// K - r + 1, clamped at zero past rank K, which keeps nDCG inside [0,1].

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "reranklab/core.hpp"
#include "reranklab/policy.hpp"
#include "reranklab/rng.hpp"
#include "reranklab/scorer.hpp"
#include "reranklab/simulator.hpp"

namespace reranklab {

struct RewardConfig {
  double alpha = 0.35;  // weight on the behavioral objective
  double beta = 0.65;   // weight on experience nDCG
  int k = 10;           // list length / nDCG cutoff

  void validate() const {
    std::vector<std::string> bad;
    if (!(alpha >= 0.0)) bad.push_back("alpha");
    if (!(beta >= 0.0)) bad.push_back("beta");
    if (!(alpha + beta > 0.0)) bad.push_back("alpha+beta");
    if (k < 1) bad.push_back("k");
    if (!bad.empty()) {
      std::string msg = "invalid RewardConfig field(s):";
      for (const auto& f : bad) msg += " " + f;
      throw ValidationError(msg);
    }
  }
};

struct GrpoConfig {
  int group_size = 8;  // rollouts per session per step
  double learning_rate = 0.02;
  int steps = 300;
  std::uint64_t seed = 1;
  double advantage_epsilon = 1e-8;

  void validate() const {
    std::vector<std::string> bad;
    if (group_size < 2) bad.push_back("group_size");
    if (!(learning_rate >= 0.0)) bad.push_back("learning_rate");
    if (steps < 1) bad.push_back("steps");
    if (!(advantage_epsilon > 0.0)) bad.push_back("advantage_epsilon");
    if (!bad.empty()) {
      std::string msg = "invalid GrpoConfig field(s):";
      for (const auto& f : bad) msg += " " + f;
      throw ValidationError(msg);
    }
  }
};

// All candidates in descending experience score (ascending id on ties).
inline std::vector<std::string> ideal_order(
    const std::vector<CandidateRecord>& candidates, const ScoreMap& scores) {
  std::vector<std::string> ids;
  ids.reserve(candidates.size());
  for (const auto& c : candidates) ids.push_back(c.cand_id);
  return stable_sort_desc(std::move(ids), scores);
}

inline std::vector<std::string> ideal_order(const Session& session,
                                            const ScorerModel& scorer) {
  return ideal_order(session.candidates, score_session(scorer, session));
}

// rel(item at rank r of y_s) = max(K - r + 1, 0), rank 1-based.
inline ScoreMap graded_rel(const std::vector<std::string>& y_s, int k) {
  if (k < 1) throw ValidationError("graded_rel: K must be >= 1");
  ScoreMap rel;
  for (std::size_t i = 0; i < y_s.size(); ++i) {
    double r = static_cast<double>(k) - static_cast<double>(i + 1) + 1.0;
    rel[y_s[i]] = std::max(r, 0.0);
  }
  return rel;
}

// Sum over the first min(K, len) positions of rel / log2(1 + t), t 1-based.
inline double dcg_at_k(const std::vector<std::string>& list,
                       const ScoreMap& rel, int k) {
  if (list.empty()) throw ValidationError("dcg_at_k: empty list");
  double dcg = 0.0;
  std::size_t limit = std::min(list.size(), static_cast<std::size_t>(k));
  for (std::size_t t = 0; t < limit; ++t) {
    auto it = rel.find(list[t]);
    if (it == rel.end()) {
      throw MissingScoreError("dcg_at_k: no relevance for id '" + list[t] +
                              "'");
    }
    dcg += it->second / std::log2(static_cast<double>(t + 1) + 1.0);
  }
  return dcg;
}

// DCG of the list divided by the DCG of the ideal order, both cut at K.
// An all-zero ideal page is vacuous and reports 1.
inline NdcgValue ndcg_at_k(const std::vector<std::string>& list,
                           const std::vector<std::string>& y_s, int k) {
  ScoreMap rel = graded_rel(y_s, k);
  double ideal = dcg_at_k(y_s, rel, k);
  if (ideal == 0.0) return {1.0, true};
  return {dcg_at_k(list, rel, k) / ideal, false};
}

struct RewardBreakdown {
  double total = 0.0;
  double behavioral = 0.0;
  double ndcg = 0.0;
  bool ndcg_vacuous = false;
};

// r = alpha * behavioral + beta * nDCG against the experience-ideal order.
inline RewardBreakdown reward(const RankedList& list, const Session& session,
                              const ScorerModel& scorer,
                              const RewardConfig& cfg,
                              const SimConfig& sim_cfg) {
  cfg.validate();
  RewardBreakdown out;
  out.behavioral = behavioral_reward(list, session, sim_cfg);
  NdcgValue n = ndcg_at_k(list.items, ideal_order(session, scorer), cfg.k);
  out.ndcg = n.value;
  out.ndcg_vacuous = n.vacuous;
  out.total = cfg.alpha * out.behavioral + cfg.beta * out.ndcg;
  return out;
}

// Group-relative advantages: (r_i - mean) / (population std + eps). A
// constant group yields exact zeros.
inline std::vector<double> group_advantages(const std::vector<double>& rewards,
                                            double eps) {
  if (rewards.size() < 2) {
    throw ValidationError("group_advantages: need at least 2 rewards");
  }
  bool all_equal = true;
  for (double r : rewards) {
    if (r != rewards.front()) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) return std::vector<double>(rewards.size(), 0.0);
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());
  double std_dev = std::sqrt(var);
  std::vector<double> adv;
  adv.reserve(rewards.size());
  for (double r : rewards) {
    adv.push_back(std_dev == 0.0 ? 0.0 : (r - mean) / (std_dev + eps));
  }
  return adv;
}

struct GrpoTraceRow {
  int step = 0;
  double mean_reward = 0.0;
  double mean_ndcg = 0.0;
  double mean_behavioral = 0.0;
};

namespace detail {

// Per-session quantities that do not move during GRPO (the scorer is
// frozen): ideal order, relevance, ideal DCG, attractiveness.
struct SessionRewardContext {
  std::vector<std::string> ideal;
  ScoreMap rel;
  double ideal_dcg = 0.0;
  ScoreMap attract;
  std::vector<double> best_exposure;  // attract sorted desc
};

inline SessionRewardContext make_reward_context(const Session& s,
                                                const ScorerModel& scorer,
                                                const RewardConfig& cfg,
                                                const SimConfig& sim_cfg) {
  SessionRewardContext ctx;
  ctx.ideal = ideal_order(s, scorer);
  ctx.rel = graded_rel(ctx.ideal, cfg.k);
  ctx.ideal_dcg = dcg_at_k(ctx.ideal, ctx.rel, cfg.k);
  for (const auto& c : s.candidates) {
    ctx.attract[c.cand_id] = attractiveness(require_truth(s, c.cand_id),
                                            sim_cfg);
  }
  for (const auto& [id, a] : ctx.attract) ctx.best_exposure.push_back(a);
  std::sort(ctx.best_exposure.begin(), ctx.best_exposure.end(),
            std::greater<double>());
  return ctx;
}

inline RewardBreakdown fast_reward(const RankedList& list,
                                   const SessionRewardContext& ctx,
                                   const RewardConfig& cfg,
                                   const SimConfig& sim_cfg) {
  RewardBreakdown out;
  double expected = 0.0;
  double best = 0.0;
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    double e = examination_prob(static_cast<int>(i) + 1,
                                sim_cfg.position_bias_eta);
    expected += e * ctx.attract.at(list.items[i]);
    best += e * ctx.best_exposure[i];
  }
  out.behavioral = expected / best;
  if (ctx.ideal_dcg == 0.0) {
    out.ndcg = 1.0;
    out.ndcg_vacuous = true;
  } else {
    out.ndcg = dcg_at_k(list.items, ctx.rel, cfg.k) / ctx.ideal_dcg;
  }
  out.total = cfg.alpha * out.behavioral + cfg.beta * out.ndcg;
  return out;
}

}  // namespace detail

// Policy-gradient loop: each step samples group_size rollouts per session,
// standardizes rewards within the session's group, and ascends
// sum_i A_i * grad log pi(list_i), averaged over all rollouts.
inline ListPolicy train_grpo(ListPolicy policy,
                             const std::vector<Session>& sessions,
                             const ScorerModel& scorer,
                             const RewardConfig& reward_cfg,
                             const GrpoConfig& grpo_cfg,
                             const SimConfig& sim_cfg,
                             std::vector<GrpoTraceRow>* trace = nullptr) {
  reward_cfg.validate();
  grpo_cfg.validate();
  policy.validate();
  if (sessions.empty()) throw ValidationError("train_grpo: no sessions");

  std::vector<detail::SessionRewardContext> ctx;
  ctx.reserve(sessions.size());
  std::vector<int> list_len;
  for (const auto& s : sessions) {
    ctx.push_back(
        detail::make_reward_context(s, scorer, reward_cfg, sim_cfg));
    list_len.push_back(std::min<int>(reward_cfg.k,
                                     static_cast<int>(s.candidates.size())));
  }

  const double n_rollouts = static_cast<double>(sessions.size()) *
                            static_cast<double>(grpo_cfg.group_size);
  for (int step = 0; step < grpo_cfg.steps; ++step) {
    std::vector<double> grad(policy.utility_weights.size(), 0.0);
    double sum_reward = 0.0;
    double sum_ndcg = 0.0;
    double sum_behavioral = 0.0;
    for (std::size_t si = 0; si < sessions.size(); ++si) {
      const Session& s = sessions[si];
      std::vector<RankedList> rollouts;
      std::vector<double> rewards;
      rollouts.reserve(static_cast<std::size_t>(grpo_cfg.group_size));
      for (int g = 0; g < grpo_cfg.group_size; ++g) {
        std::uint64_t rollout_seed = rng::derive(
            grpo_cfg.seed,
            {rng::hash_str("rollout"), static_cast<std::uint64_t>(step),
             rng::hash_str(s.query.query_id), static_cast<std::uint64_t>(g)});
        RankedList list = sample_list(policy, s.query, s.candidates,
                                      list_len[si], rollout_seed);
        RewardBreakdown r =
            detail::fast_reward(list, ctx[si], reward_cfg, sim_cfg);
        sum_reward += r.total;
        sum_ndcg += r.ndcg;
        sum_behavioral += r.behavioral;
        rewards.push_back(r.total);
        rollouts.push_back(std::move(list));
      }
      std::vector<double> adv =
          group_advantages(rewards, grpo_cfg.advantage_epsilon);
      for (int g = 0; g < grpo_cfg.group_size; ++g) {
        if (adv[static_cast<std::size_t>(g)] == 0.0) continue;
        std::vector<double> g_log = list_logprob_grad(
            policy, s.query, s.candidates,
            rollouts[static_cast<std::size_t>(g)].items);
        for (std::size_t j = 0; j < grad.size(); ++j) {
          grad[j] += adv[static_cast<std::size_t>(g)] * g_log[j];
        }
      }
    }
    for (std::size_t j = 0; j < grad.size(); ++j) {
      policy.utility_weights[j] +=
          grpo_cfg.learning_rate * grad[j] / n_rollouts;
      if (!std::isfinite(policy.utility_weights[j])) {
        throw TrainingError("train_grpo: non-finite parameters at step " +
                            std::to_string(step));
      }
    }
    if (trace != nullptr) {
      trace->push_back({step, sum_reward / n_rollouts, sum_ndcg / n_rollouts,
                        sum_behavioral / n_rollouts});
    }
  }
  return policy;
}

}  // namespace reranklab
