// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once
// Plackett-Luce list policy. Each candidate gets a context-free utility
// u = theta . concat(query features, candidate features); a list is built
// by repeatedly sampling (or argmaxing) the softmax over the remaining
// candidates at temperature tau. The product of step probabilities gives
// an exact list probability, which keeps log-likelihoods, gradients, and
// normalization tests closed-form.
//
// Utilities deliberately ignore already-chosen items. A context-dependent
// chooser would be a drop-in extension point but would lose the exact
// normalization checks.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "reranklab/core.hpp"
#include "reranklab/rng.hpp"
#include "reranklab/scorer.hpp"

namespace reranklab {

struct ListPolicy {
  std::vector<double> utility_weights;  // length d_q + d_v
  double tau = 1.0;

  static ListPolicy init(int d_q, int d_v) {
    ListPolicy p;
    p.utility_weights.assign(static_cast<std::size_t>(d_q + d_v), 0.0);
    p.tau = 1.0;
    return p;
  }

  void validate() const {
    if (!(tau > 0.0)) throw ValidationError("ListPolicy: tau must be > 0");
    for (double w : utility_weights) {
      if (!std::isfinite(w)) {
        throw ValidationError("ListPolicy: non-finite utility weight");
      }
    }
  }
};

struct PretrainConfig {
  double learning_rate = 0.05;
  int epochs = 15;
  int batch_size = 8;
  std::uint64_t seed = 1;

  void validate() const {
    std::vector<std::string> bad;
    if (!(learning_rate > 0.0)) bad.push_back("learning_rate");
    if (epochs < 1) bad.push_back("epochs");
    if (batch_size < 1) bad.push_back("batch_size");
    if (!bad.empty()) {
      std::string msg = "invalid PretrainConfig field(s):";
      for (const auto& f : bad) msg += " " + f;
      throw ValidationError(msg);
    }
  }
};

// One utility per candidate, in candidate order.
inline std::vector<double> utilities(const ListPolicy& policy,
                                     const QueryRecord& q,
                                     const std::vector<CandidateRecord>& cands) {
  const std::size_t d_q = q.features.size();
  std::vector<double> out;
  out.reserve(cands.size());
  double q_part = 0.0;
  if (d_q > policy.utility_weights.size()) {
    throw ValidationError("utilities: query feature dim " +
                          std::to_string(d_q) + " exceeds policy dim " +
                          std::to_string(policy.utility_weights.size()));
  }
  for (std::size_t j = 0; j < d_q; ++j) {
    q_part += policy.utility_weights[j] * q.features[j];
  }
  const std::size_t d_v = policy.utility_weights.size() - d_q;
  for (const auto& c : cands) {
    if (c.features.size() != d_v) {
      throw ValidationError("utilities: candidate '" + c.cand_id +
                            "' feature dim " + std::to_string(c.features.size()) +
                            ", policy expects " + std::to_string(d_v));
    }
    double u = q_part;
    for (std::size_t j = 0; j < d_v; ++j) {
      u += policy.utility_weights[d_q + j] * c.features[j];
    }
    out.push_back(u);
  }
  return out;
}

namespace detail {

// Maps sequence ids to candidate indices, rejecting repeats and foreign
// ids with the offending 1-based position.
inline std::vector<std::size_t> sequence_indices(
    const std::vector<CandidateRecord>& cands,
    const std::vector<std::string>& sequence) {
  std::vector<std::size_t> idx;
  idx.reserve(sequence.size());
  std::vector<bool> used(cands.size(), false);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    std::size_t found = cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (cands[i].cand_id == sequence[t]) {
        found = i;
        break;
      }
    }
    if (found == cands.size()) {
      throw ValidationError("sequence position " + std::to_string(t + 1) +
                            ": id '" + sequence[t] + "' is not a candidate");
    }
    if (used[found]) {
      throw ValidationError("sequence position " + std::to_string(t + 1) +
                            ": id '" + sequence[t] + "' repeats");
    }
    used[found] = true;
    idx.push_back(found);
  }
  return idx;
}

}  // namespace detail

// Exact log-probability of generating `sequence` by sequential softmax
// choices without replacement. Always <= 0.
inline double list_logprob(const ListPolicy& policy, const QueryRecord& q,
                           const std::vector<CandidateRecord>& cands,
                           const std::vector<std::string>& sequence) {
  policy.validate();
  std::vector<double> u = utilities(policy, q, cands);
  std::vector<std::size_t> seq = detail::sequence_indices(cands, sequence);
  std::vector<bool> taken(cands.size(), false);
  double logprob = 0.0;
  for (std::size_t chosen : seq) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!taken[i]) zmax = std::max(zmax, u[i] / policy.tau);
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!taken[i]) denom += std::exp(u[i] / policy.tau - zmax);
    }
    logprob += u[chosen] / policy.tau - zmax - std::log(denom);
    taken[chosen] = true;
  }
  return logprob;
}

// Gradient of list_logprob with respect to utility_weights. At each step
// the chosen item's features get weight (1 - p)/tau and every other
// remaining item -p_j/tau; contributions through the shared query part
// cancel exactly.
inline std::vector<double> list_logprob_grad(
    const ListPolicy& policy, const QueryRecord& q,
    const std::vector<CandidateRecord>& cands,
    const std::vector<std::string>& sequence) {
  policy.validate();
  std::vector<double> u = utilities(policy, q, cands);
  std::vector<std::size_t> seq = detail::sequence_indices(cands, sequence);
  std::vector<double> du(cands.size(), 0.0);  // d logprob / d u_i
  std::vector<bool> taken(cands.size(), false);
  for (std::size_t chosen : seq) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!taken[i]) zmax = std::max(zmax, u[i] / policy.tau);
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!taken[i]) denom += std::exp(u[i] / policy.tau - zmax);
    }
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (taken[i]) continue;
      double p = std::exp(u[i] / policy.tau - zmax) / denom;
      du[i] += ((i == chosen ? 1.0 : 0.0) - p) / policy.tau;
    }
    taken[chosen] = true;
  }
  const std::size_t d_q = q.features.size();
  const std::size_t d_v = policy.utility_weights.size() - d_q;
  std::vector<double> grad(policy.utility_weights.size(), 0.0);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (du[i] == 0.0) continue;
    for (std::size_t j = 0; j < d_q; ++j) grad[j] += du[i] * q.features[j];
    for (std::size_t j = 0; j < d_v; ++j) {
      grad[d_q + j] += du[i] * cands[i].features[j];
    }
  }
  return grad;
}

// Sequential sampling without replacement. scores holds the per-step log
// probability of each chosen item, so their sum equals list_logprob of the
// returned list.
inline RankedList sample_list(const ListPolicy& policy, const QueryRecord& q,
                              const std::vector<CandidateRecord>& cands,
                              int k, std::uint64_t seed) {
  policy.validate();
  if (k < 0 || static_cast<std::size_t>(k) > cands.size()) {
    throw ValidationError("sample_list: K=" + std::to_string(k) +
                          " exceeds candidate count " +
                          std::to_string(cands.size()));
  }
  std::vector<double> u = utilities(policy, q, cands);
  auto gen = rng::engine(seed);
  std::vector<bool> taken(cands.size(), false);
  RankedList out;
  out.query_id = q.query_id;
  for (int step = 0; step < k; ++step) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!taken[i]) zmax = std::max(zmax, u[i] / policy.tau);
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!taken[i]) denom += std::exp(u[i] / policy.tau - zmax);
    }
    double r = rng::uniform01(gen) * denom;
    double acc = 0.0;
    std::size_t pick = cands.size();
    std::size_t last_free = cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (taken[i]) continue;
      last_free = i;
      acc += std::exp(u[i] / policy.tau - zmax);
      if (r < acc) {
        pick = i;
        break;
      }
    }
    if (pick == cands.size()) pick = last_free;  // guard fp edge at r ~ denom
    double logp = u[pick] / policy.tau - zmax - std::log(denom);
    taken[pick] = true;
    out.items.push_back(cands[pick].cand_id);
    out.scores.push_back(logp);
  }
  return out;
}

// Deterministic decode: descending utility, ties by ascending id, truncated
// to k. Identical to step-wise argmax selection.
inline RankedList greedy_decode(const ListPolicy& policy, const QueryRecord& q,
                                const std::vector<CandidateRecord>& cands,
                                int k) {
  policy.validate();
  if (k < 0 || static_cast<std::size_t>(k) > cands.size()) {
    throw ValidationError("greedy_decode: K=" + std::to_string(k) +
                          " exceeds candidate count " +
                          std::to_string(cands.size()));
  }
  std::vector<double> u = utilities(policy, q, cands);
  ScoreMap by_id;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    by_id[cands[i].cand_id] = u[i];
    order.push_back(cands[i].cand_id);
  }
  order = stable_sort_desc(std::move(order), by_id);
  RankedList out;
  out.query_id = q.query_id;
  for (int i = 0; i < k; ++i) {
    out.items.push_back(order[static_cast<std::size_t>(i)]);
    out.scores.push_back(by_id[order[static_cast<std::size_t>(i)]]);
  }
  return out;
}

struct PretrainReport {
  std::vector<double> epoch_nll;  // mean per-session NLL after each epoch
  double final_nll = 0.0;
};

// Gradient descent on the mean next-item negative log-likelihood of fixed
// full-length target sequences, one target per session.
inline ListPolicy pretrain_on_targets(
    ListPolicy policy, const std::vector<Session>& sessions,
    const std::vector<std::vector<std::string>>& targets,
    const PretrainConfig& cfg, PretrainReport* report = nullptr) {
  cfg.validate();
  policy.validate();
  if (sessions.empty()) throw ValidationError("pretrain: no sessions");
  if (sessions.size() != targets.size()) {
    throw ValidationError("pretrain: " + std::to_string(targets.size()) +
                          " targets for " + std::to_string(sessions.size()) +
                          " sessions");
  }
  std::vector<std::size_t> order(sessions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto gen = rng::engine(cfg.seed, {rng::hash_str("pretrain")});
  PretrainReport rep;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), gen);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<double> grad(policy.utility_weights.size(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const Session& s = sessions[order[b]];
        std::vector<double> g =
            list_logprob_grad(policy, s.query, s.candidates, targets[order[b]]);
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
      }
      double scale = cfg.learning_rate / static_cast<double>(end - start);
      // NLL descent == log-likelihood ascent.
      for (std::size_t j = 0; j < grad.size(); ++j) {
        policy.utility_weights[j] += scale * grad[j];
        if (!std::isfinite(policy.utility_weights[j])) {
          throw TrainingError("pretrain: non-finite parameters at epoch " +
                              std::to_string(epoch));
        }
      }
    }
    double nll = 0.0;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      nll -= list_logprob(policy, sessions[i].query, sessions[i].candidates,
                          targets[i]);
    }
    nll /= static_cast<double>(sessions.size());
    if (!std::isfinite(nll)) {
      throw TrainingError("pretrain: non-finite loss at epoch " +
                          std::to_string(epoch));
    }
    rep.epoch_nll.push_back(nll);
  }
  rep.final_nll = rep.epoch_nll.back();
  if (report != nullptr) *report = rep;
  return policy;
}

// Builds each session's reconstructed target from the scorer's experience
// scores, then fits the policy to those sequences.
inline ListPolicy pretrain(ListPolicy policy,
                           const std::vector<Session>& sessions,
                           const ScorerModel& scorer, const PretrainConfig& cfg,
                           PretrainReport* report = nullptr) {
  std::vector<std::vector<std::string>> targets;
  targets.reserve(sessions.size());
  for (const auto& s : sessions) {
    targets.push_back(reconstruct_target(s, score_session(scorer, s)));
  }
  return pretrain_on_targets(std::move(policy), sessions, targets, cfg,
                             report);
}

}  // namespace reranklab
