// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once
// Synthetic long-tail search sessions with hidden ground truth.
//
// The generator bakes in the three failure modes the reranker has to
// overcome: a position-biased examination model (items are clicked partly
// because they were seen), popularity-ordered impressions (already-popular
// items get seen more), and presentation/content mismatch (clickbait looks
// attractive but viewing experience is poor). A quality oracle stands in
// for human/LLM annotation: it emits pairwise preference labels from the
// hidden true_quality, optionally noised.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reranklab/core.hpp"
#include "reranklab/rng.hpp"

namespace reranklab {

struct SimConfig {
  int n_queries = 300;
  int candidates_per_query = 10;
  int d_q = 4;  // query feature dim
  int d_v = 8;  // candidate feature dim
  double position_bias_eta = 1.0;  // examination decays as 1/k^eta
  double clickbait_gain = 4.0;     // attractiveness weight on clickbait
  double quality_gain = 0.1;       // attractiveness weight on true quality
  double attract_offset = 2.3;     // sigmoid offset in the click model
  double mismatch_rate = 0.4;      // share of candidates with mismatch > 0
  double label_noise = 0.0;        // oracle flip probability
  double feature_noise = 0.1;      // sigma of Gaussian noise on features
  int pairs_per_query = 8;         // preference pairs sampled per query
  long long long_tail_pv = kLongTailPvThreshold;
  std::uint64_t seed = 42;

  void validate() const {
    std::vector<std::string> bad;
    if (n_queries < 1) bad.push_back("n_queries");
    if (candidates_per_query < 2) bad.push_back("candidates_per_query");
    if (d_q < 1) bad.push_back("d_q");
    if (d_v < 1) bad.push_back("d_v");
    if (!(position_bias_eta >= 0.0)) bad.push_back("position_bias_eta");
    if (!std::isfinite(clickbait_gain)) bad.push_back("clickbait_gain");
    if (!std::isfinite(quality_gain)) bad.push_back("quality_gain");
    if (!std::isfinite(attract_offset)) bad.push_back("attract_offset");
    if (!(mismatch_rate >= 0.0 && mismatch_rate <= 1.0))
      bad.push_back("mismatch_rate");
    if (!(label_noise >= 0.0 && label_noise <= 1.0))
      bad.push_back("label_noise");
    if (!(feature_noise >= 0.0)) bad.push_back("feature_noise");
    if (pairs_per_query < 0) bad.push_back("pairs_per_query");
    if (long_tail_pv < 0) bad.push_back("long_tail_pv");
    if (!bad.empty()) {
      std::string msg = "invalid SimConfig field(s):";
      for (const auto& f : bad) msg += " " + f;
      throw ValidationError(msg);
    }
  }
};

// A labeled intra-query comparison: winner preferred over loser with the
// oracle's quality gap as margin.
struct PreferencePair {
  std::string query_id;
  std::string winner_id;
  std::string loser_id;
  double margin = 0.0;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Examination propensity at a 1-based position: 1/k^eta.
inline double examination_prob(int position, double eta) {
  return std::pow(1.0 / static_cast<double>(position), eta);
}

// Click probability of an examined item.
inline double attractiveness(const SimTruth& t, const SimConfig& cfg) {
  return sigmoid(cfg.clickbait_gain * t.clickbait +
                 cfg.quality_gain * t.true_quality - cfg.attract_offset);
}

namespace detail {

inline const SimTruth& require_truth(const Session& session,
                                     const std::string& cand_id) {
  const CandidateRecord* c = session.find(cand_id);
  if (c == nullptr) {
    throw ValidationError("candidate '" + cand_id + "' is not in session '" +
                          session.query.query_id + "'");
  }
  if (!c->sim_truth.has_value()) {
    throw ValidationError("candidate '" + cand_id +
                          "' has no simulator ground truth");
  }
  return *c->sim_truth;
}

struct ImpressionOutcome {
  std::set<std::string> clicked;
  std::set<std::string> examined;
};

// One user pass over a ranked page: position k is examined with
// probability 1/k^eta, and an examined item is clicked with its
// attractiveness probability.
inline ImpressionOutcome simulate_impression(const RankedList& ranking,
                                             const Session& session,
                                             const SimConfig& cfg,
                                             std::uint64_t seed) {
  ImpressionOutcome out;
  auto gen = rng::engine(seed);
  for (std::size_t i = 0; i < ranking.items.size(); ++i) {
    const std::string& id = ranking.items[i];
    const SimTruth& truth = require_truth(session, id);
    double p_exam = examination_prob(static_cast<int>(i) + 1,
                                     cfg.position_bias_eta);
    if (rng::uniform01(gen) >= p_exam) continue;
    out.examined.insert(id);
    if (rng::uniform01(gen) < attractiveness(truth, cfg)) {
      out.clicked.insert(id);
    }
  }
  return out;
}

}  // namespace detail

// Simulates the clicks one impression of `ranking` would collect.
inline std::set<std::string> click_model(const RankedList& ranking,
                                         const Session& session,
                                         const SimConfig& cfg,
                                         std::uint64_t seed) {
  return detail::simulate_impression(ranking, session, cfg, seed).clicked;
}

// Candidates in descending popularity (ascending id on ties): the order the
// historical system would have shown.
inline std::vector<std::string> exposure_order(const Session& session) {
  ScoreMap pop;
  for (const auto& c : session.candidates) {
    pop[c.cand_id] = detail::require_truth(session, c.cand_id).popularity;
  }
  return stable_sort_desc(session.candidate_ids(), pop);
}

// Historical click rate proxy: examination propensity at the item's
// historical (popularity-ordered) position times its attractiveness.
// Popularity-biased by construction.
inline ScoreMap historical_ctr(const Session& session, const SimConfig& cfg) {
  ScoreMap ctr;
  std::vector<std::string> order = exposure_order(session);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const SimTruth& truth = detail::require_truth(session, order[i]);
    ctr[order[i]] = examination_prob(static_cast<int>(i) + 1,
                                     cfg.position_bias_eta) *
                    attractiveness(truth, cfg);
  }
  return ctr;
}

// Oracle preference between two candidates of one session. The winner is
// the higher-true_quality item with probability 1 - label_noise, else
// flipped; equal qualities fall back to ascending id with zero margin.
// The flip coin is derived from the unordered pair, so asking (a,b) and
// (b,a) under the same seed always agrees.
inline PreferencePair oracle_prefer(const Session& session,
                                    const std::string& id_a,
                                    const std::string& id_b,
                                    const SimConfig& cfg, std::uint64_t seed) {
  if (id_a == id_b) {
    throw ValidationError("oracle_prefer: identical ids '" + id_a + "'");
  }
  const SimTruth& ta = detail::require_truth(session, id_a);
  const SimTruth& tb = detail::require_truth(session, id_b);
  PreferencePair pair;
  pair.query_id = session.query.query_id;
  pair.margin = std::fabs(ta.true_quality - tb.true_quality);
  std::string hi = id_a;
  std::string lo = id_b;
  if (ta.true_quality < tb.true_quality ||
      (ta.true_quality == tb.true_quality && id_b < id_a)) {
    std::swap(hi, lo);
  }
  if (ta.true_quality != tb.true_quality && cfg.label_noise > 0.0) {
    const std::string& first = std::min(id_a, id_b);
    const std::string& second = std::max(id_a, id_b);
    auto gen = rng::engine(seed, {rng::hash_str(session.query.query_id),
                                  rng::hash_str(first), rng::hash_str(second)});
    if (rng::uniform01(gen) < cfg.label_noise) std::swap(hi, lo);
  }
  pair.winner_id = hi;
  pair.loser_id = lo;
  return pair;
}

// Exact expected click count of a ranking under the click model, normalized
// by the best achievable value over reorderings of the same items. Equals 1
// exactly when items appear in descending attractiveness.
inline double behavioral_reward(const RankedList& ranking,
                                const Session& session, const SimConfig& cfg) {
  if (ranking.items.empty()) {
    throw ValidationError("behavioral_reward: empty ranking");
  }
  std::vector<double> attract;
  attract.reserve(ranking.items.size());
  double expected = 0.0;
  for (std::size_t i = 0; i < ranking.items.size(); ++i) {
    const SimTruth& truth = detail::require_truth(session, ranking.items[i]);
    double a = attractiveness(truth, cfg);
    attract.push_back(a);
    expected += examination_prob(static_cast<int>(i) + 1,
                                 cfg.position_bias_eta) *
                a;
  }
  std::vector<double> best = attract;
  std::sort(best.begin(), best.end(), std::greater<double>());
  double max_expected = 0.0;
  for (std::size_t i = 0; i < best.size(); ++i) {
    max_expected += examination_prob(static_cast<int>(i) + 1,
                                     cfg.position_bias_eta) *
                    best[i];
  }
  return expected / max_expected;
}

// Per-query preference pairs: min(all unordered pairs, pairs_per_query),
// chosen by a seeded shuffle, each labeled by the oracle.
inline std::vector<PreferencePair> sample_pairs(const Session& session,
                                                const SimConfig& cfg,
                                                std::uint64_t seed) {
  std::vector<std::pair<std::string, std::string>> all;
  const auto ids = session.candidate_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      all.emplace_back(ids[i], ids[j]);
    }
  }
  auto gen = rng::engine(seed, {rng::hash_str(session.query.query_id)});
  std::shuffle(all.begin(), all.end(), gen);
  std::size_t take = std::min(all.size(),
                              static_cast<std::size_t>(cfg.pairs_per_query));
  std::vector<PreferencePair> pairs;
  pairs.reserve(take);
  for (std::size_t k = 0; k < take; ++k) {
    pairs.push_back(
        oracle_prefer(session, all[k].first, all[k].second, cfg, seed));
  }
  return pairs;
}

namespace detail {

inline std::string zero_pad(int value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d", width, value);
  return buf;
}

// Candidate features mix five channels: quality scaled by a per-candidate
// presentation volume, the volume itself, damped log-popularity,
// clickbait, and mismatch, plus Gaussian noise. Quality enters only
// through the quality*volume product, so recovering it takes a ratio of
// feature combinations: the fused scorer can learn it, while a purely
// linear read of the features only gets a noisy proxy.
struct FeatureMixer {
  static constexpr int kChannels = 5;
  int d_v;
  std::vector<double> mix;  // d_v x kChannels, row-major

  FeatureMixer(int d_v_in, std::uint64_t seed) : d_v(d_v_in) {
    auto gen = rng::engine(seed, {rng::hash_str("feature_mix")});
    mix.resize(static_cast<std::size_t>(d_v) * kChannels);
    for (int j = 0; j < d_v; ++j) {
      for (int k = 0; k < kChannels; ++k) {
        double w = rng::gaussian(gen, 0.0, 0.5);
        if (k <= 1) w *= 3.5;  // quality*volume and volume columns
        if (k == 2) w *= 2.0;  // popularity column
        mix[static_cast<std::size_t>(j) * kChannels + k] = w;
      }
    }
  }

  std::vector<double> encode(const SimTruth& t, double volume,
                             double noise_sigma, std::mt19937_64& gen) const {
    const double u[kChannels] = {t.true_quality * volume, volume,
                                 std::log1p(t.popularity) / 2.0, t.clickbait,
                                 t.mismatch};
    std::vector<double> f(static_cast<std::size_t>(d_v), 0.0);
    for (int j = 0; j < d_v; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kChannels; ++k) {
        acc += mix[static_cast<std::size_t>(j) * kChannels + k] * u[k];
      }
      f[static_cast<std::size_t>(j)] =
          acc + noise_sigma * rng::gaussian(gen);
    }
    return f;
  }
};

}  // namespace detail

// Generates the full synthetic corpus: per query, candidates with hidden
// truth and noisy features, then one simulated impression of the
// popularity-ordered page to produce the clicked / exposed-unclicked /
// unexposed partition. Fully determined by cfg (including cfg.seed).
inline std::vector<Session> generate_corpus(const SimConfig& cfg) {
  cfg.validate();
  detail::FeatureMixer mixer(cfg.d_v, cfg.seed);
  std::vector<Session> sessions;
  sessions.reserve(static_cast<std::size_t>(cfg.n_queries));
  for (int qi = 0; qi < cfg.n_queries; ++qi) {
    Session s;
    s.query.query_id = "q" + detail::zero_pad(qi, 5);
    auto gen = rng::engine(cfg.seed, {rng::hash_str("query"),
                                      static_cast<std::uint64_t>(qi)});
    s.query.features.resize(static_cast<std::size_t>(cfg.d_q));
    for (auto& x : s.query.features) x = rng::gaussian(gen);
    s.query.pv_count = static_cast<long long>(
        std::floor(std::exp(rng::gaussian(gen, 3.0, 1.2))));

    for (int ci = 0; ci < cfg.candidates_per_query; ++ci) {
      CandidateRecord c;
      c.cand_id = s.query.query_id + "_c" + detail::zero_pad(ci, 3);
      SimTruth t;
      double base_quality = rng::uniform01(gen);
      double appeal = rng::uniform01(gen);
      double m = 0.0;
      if (rng::uniform01(gen) < cfg.mismatch_rate) m = rng::uniform01(gen);
      t.mismatch = m;
      // Mismatch inflates presentation appeal and degrades experience.
      t.clickbait = 0.5 * appeal + 0.5 * m;
      t.true_quality = base_quality * (1.0 - 0.7 * m);
      t.popularity = std::exp(rng::gaussian(gen, 0.0, 1.0));
      c.sim_truth = t;
      double volume = std::exp(rng::gaussian(gen, 0.0, 0.35));
      c.features = mixer.encode(t, volume, cfg.feature_noise, gen);
      s.candidates.push_back(std::move(c));
    }

    RankedList impression;
    impression.query_id = s.query.query_id;
    impression.items = exposure_order(s);
    auto outcome = detail::simulate_impression(
        impression, s, cfg,
        rng::derive(cfg.seed, {rng::hash_str("impression"),
                               static_cast<std::uint64_t>(qi)}));
    s.clicked = outcome.clicked;
    for (const auto& id : outcome.examined) {
      if (outcome.clicked.count(id) == 0) s.exposed_unclicked.insert(id);
    }
    s.validate();
    sessions.push_back(std::move(s));
  }

  // Rescale candidate feature dimensions to unit variance over the corpus
  // so downstream model inputs are well conditioned. Means are kept: the
  // fusion layer has no hidden bias and uses them as a context channel.
  std::vector<double> mean(static_cast<std::size_t>(cfg.d_v), 0.0);
  std::vector<double> var(static_cast<std::size_t>(cfg.d_v), 0.0);
  std::size_t count = 0;
  for (const auto& s : sessions) {
    for (const auto& c : s.candidates) {
      ++count;
      for (int j = 0; j < cfg.d_v; ++j) {
        mean[static_cast<std::size_t>(j)] +=
            c.features[static_cast<std::size_t>(j)];
      }
    }
  }
  for (auto& m : mean) m /= static_cast<double>(count);
  for (const auto& s : sessions) {
    for (const auto& c : s.candidates) {
      for (int j = 0; j < cfg.d_v; ++j) {
        double d = c.features[static_cast<std::size_t>(j)] -
                   mean[static_cast<std::size_t>(j)];
        var[static_cast<std::size_t>(j)] += d * d;
      }
    }
  }
  for (auto& v : var) {
    v = std::sqrt(std::max(v / static_cast<double>(count), 1e-12));
  }
  for (auto& s : sessions) {
    for (auto& c : s.candidates) {
      for (int j = 0; j < cfg.d_v; ++j) {
        auto jj = static_cast<std::size_t>(j);
        c.features[jj] /= var[jj];
      }
    }
  }
  return sessions;
}

// Preference pairs for a whole corpus, seeded off cfg.seed.
inline std::vector<PreferencePair> generate_pairs(
    const std::vector<Session>& sessions, const SimConfig& cfg) {
  std::vector<PreferencePair> pairs;
  std::uint64_t pair_seed = rng::derive(cfg.seed, {rng::hash_str("pairs")});
  for (const auto& s : sessions) {
    auto qp = sample_pairs(s, cfg, pair_seed);
    pairs.insert(pairs.end(), qp.begin(), qp.end());
  }
  return pairs;
}

}  // namespace reranklab
