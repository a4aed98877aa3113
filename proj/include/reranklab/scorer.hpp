// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once
// Experience scorer: a small fusion layer over concatenated query and
// candidate features, a linear scoring head, and a pairwise logistic
// training objective with a centering regularizer
//
//   loss = mean[ -log sigmoid(s+ - s-) + lambda * (s+ + s-)^2 ].
//
// Gradients are closed-form and checked against finite differences in the
// test suite. Training is plain seeded mini-batch gradient descent so a
// given (data, config, seed) reproduces the checkpoint bit for bit.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reranklab/core.hpp"
#include "reranklab/rng.hpp"
#include "reranklab/simulator.hpp"

namespace reranklab {

struct ScorerModel {
  int d_q = 0;
  int d_v = 0;
  int d_h = 0;
  std::vector<double> fusion_weights;  // d_h x (d_q + d_v), row-major
  std::vector<double> head_weights;    // length d_h
  double head_bias = 0.0;

  int input_dim() const { return d_q + d_v; }

  static ScorerModel init(int d_q, int d_v, int d_h, std::uint64_t seed) {
    ScorerModel m;
    m.d_q = d_q;
    m.d_v = d_v;
    m.d_h = d_h;
    auto gen = rng::engine(seed, {rng::hash_str("scorer_init")});
    double in_scale = 1.0 / std::sqrt(static_cast<double>(d_q + d_v));
    m.fusion_weights.resize(static_cast<std::size_t>(d_h) * (d_q + d_v));
    for (auto& w : m.fusion_weights) w = rng::gaussian(gen, 0.0, in_scale);
    double h_scale = 1.0 / std::sqrt(static_cast<double>(d_h));
    m.head_weights.resize(static_cast<std::size_t>(d_h));
    for (auto& w : m.head_weights) w = rng::gaussian(gen, 0.0, h_scale);
    m.head_bias = 0.0;
    return m;
  }
};

// Parameter-shaped gradient record.
struct ScorerGrad {
  std::vector<double> fusion_weights;
  std::vector<double> head_weights;
  double head_bias = 0.0;

  static ScorerGrad zeros_like(const ScorerModel& m) {
    ScorerGrad g;
    g.fusion_weights.assign(m.fusion_weights.size(), 0.0);
    g.head_weights.assign(m.head_weights.size(), 0.0);
    g.head_bias = 0.0;
    return g;
  }
};

struct TrainConfig {
  double lambda_reg = 0.01;
  double learning_rate = 0.05;
  int epochs = 40;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int d_h = 16;
  double holdout_fraction = 0.2;  // pairs held out for reporting accuracy

  void validate() const {
    std::vector<std::string> bad;
    if (!(lambda_reg >= 0.0)) bad.push_back("lambda_reg");
    if (!(learning_rate > 0.0)) bad.push_back("learning_rate");
    if (epochs < 1) bad.push_back("epochs");
    if (batch_size < 1) bad.push_back("batch_size");
    if (d_h < 1) bad.push_back("d_h");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
      bad.push_back("holdout_fraction");
    if (!bad.empty()) {
      std::string msg = "invalid TrainConfig field(s):";
      for (const auto& f : bad) msg += " " + f;
      throw ValidationError(msg);
    }
  }
};

namespace detail {

inline void check_dims(const ScorerModel& m, const QueryRecord& q,
                       const CandidateRecord& v) {
  if (static_cast<int>(q.features.size()) != m.d_q) {
    throw ValidationError("query '" + q.query_id + "' feature dim " +
                          std::to_string(q.features.size()) +
                          ", model expects " + std::to_string(m.d_q));
  }
  if (static_cast<int>(v.features.size()) != m.d_v) {
    throw ValidationError("candidate '" + v.cand_id + "' feature dim " +
                          std::to_string(v.features.size()) +
                          ", model expects " + std::to_string(m.d_v));
  }
}

inline std::vector<double> concat_features(const QueryRecord& q,
                                           const CandidateRecord& v) {
  std::vector<double> x;
  x.reserve(q.features.size() + v.features.size());
  x.insert(x.end(), q.features.begin(), q.features.end());
  x.insert(x.end(), v.features.begin(), v.features.end());
  return x;
}

// -log sigmoid(d), computed without overflow on either tail.
inline double neg_log_sigmoid(double d) {
  if (d >= 0.0) return std::log1p(std::exp(-d));
  return -d + std::log1p(std::exp(d));
}

}  // namespace detail

// Fused hidden representation h = tanh(W * concat(q, v)).
inline std::vector<double> embed(const ScorerModel& m, const QueryRecord& q,
                                 const CandidateRecord& v) {
  detail::check_dims(m, q, v);
  const int d_in = m.input_dim();
  std::vector<double> x = detail::concat_features(q, v);
  std::vector<double> h(static_cast<std::size_t>(m.d_h));
  for (int i = 0; i < m.d_h; ++i) {
    double acc = 0.0;
    const double* row = m.fusion_weights.data() +
                        static_cast<std::size_t>(i) * d_in;
    for (int j = 0; j < d_in; ++j) acc += row[j] * x[static_cast<std::size_t>(j)];
    h[static_cast<std::size_t>(i)] = std::tanh(acc);
  }
  return h;
}

// Experience score s = w . h + b.
inline double score(const ScorerModel& m, const QueryRecord& q,
                    const CandidateRecord& v) {
  std::vector<double> h = embed(m, q, v);
  double s = m.head_bias;
  for (int i = 0; i < m.d_h; ++i) {
    s += m.head_weights[static_cast<std::size_t>(i)] *
         h[static_cast<std::size_t>(i)];
  }
  return s;
}

// Scores for every candidate of a session, keyed by candidate id.
inline ScoreMap score_session(const ScorerModel& m, const Session& session) {
  ScoreMap out;
  for (const auto& c : session.candidates) {
    out[c.cand_id] = score(m, session.query, c);
  }
  return out;
}

inline double pairwise_loss(const ScorerModel& m,
                            const std::vector<PreferencePair>& pairs,
                            const CorpusIndex& corpus, double lambda) {
  if (pairs.empty()) throw ValidationError("pairwise_loss: empty batch");
  double total = 0.0;
  for (const auto& p : pairs) {
    const Session& s = corpus.session(p.query_id);
    double sp = score(m, s.query, corpus.candidate(p.query_id, p.winner_id));
    double sn = score(m, s.query, corpus.candidate(p.query_id, p.loser_id));
    double sum = sp + sn;
    total += detail::neg_log_sigmoid(sp - sn) + lambda * sum * sum;
  }
  return total / static_cast<double>(pairs.size());
}

namespace detail {

// Adds g * d(score)/d(params) for one (query, candidate) to the record.
inline void backprop_score(const ScorerModel& m, const QueryRecord& q,
                           const CandidateRecord& v, double g,
                           ScorerGrad& grad) {
  const int d_in = m.input_dim();
  std::vector<double> x = concat_features(q, v);
  std::vector<double> h = embed(m, q, v);
  grad.head_bias += g;
  for (int i = 0; i < m.d_h; ++i) {
    double hi = h[static_cast<std::size_t>(i)];
    grad.head_weights[static_cast<std::size_t>(i)] += g * hi;
    double t = g * m.head_weights[static_cast<std::size_t>(i)] *
               (1.0 - hi * hi);
    double* row = grad.fusion_weights.data() +
                  static_cast<std::size_t>(i) * d_in;
    for (int j = 0; j < d_in; ++j) row[j] += t * x[static_cast<std::size_t>(j)];
  }
}

}  // namespace detail

// Mean-batch gradient of pairwise_loss with respect to every parameter.
inline ScorerGrad pairwise_grad(const ScorerModel& m,
                                const std::vector<PreferencePair>& pairs,
                                const CorpusIndex& corpus, double lambda) {
  if (pairs.empty()) throw ValidationError("pairwise_grad: empty batch");
  ScorerGrad grad = ScorerGrad::zeros_like(m);
  for (const auto& p : pairs) {
    const Session& s = corpus.session(p.query_id);
    const CandidateRecord& win = corpus.candidate(p.query_id, p.winner_id);
    const CandidateRecord& lose = corpus.candidate(p.query_id, p.loser_id);
    double sp = score(m, s.query, win);
    double sn = score(m, s.query, lose);
    double slack = 1.0 - sigmoid(sp - sn);
    double center = 2.0 * lambda * (sp + sn);
    detail::backprop_score(m, s.query, win, -slack + center, grad);
    detail::backprop_score(m, s.query, lose, slack + center, grad);
  }
  double inv = 1.0 / static_cast<double>(pairs.size());
  for (auto& g : grad.fusion_weights) g *= inv;
  for (auto& g : grad.head_weights) g *= inv;
  grad.head_bias *= inv;
  return grad;
}

// Fraction of pairs ranked correctly; ties count half.
inline double pair_accuracy_scores(
    const std::vector<std::pair<double, double>>& winner_loser_scores) {
  if (winner_loser_scores.empty()) {
    throw ValidationError("pair_accuracy: empty pair set");
  }
  double correct = 0.0;
  for (const auto& [sp, sn] : winner_loser_scores) {
    if (sp > sn) {
      correct += 1.0;
    } else if (sp == sn) {
      correct += 0.5;
    }
  }
  return correct / static_cast<double>(winner_loser_scores.size());
}

inline double pair_accuracy(const ScorerModel& m,
                            const std::vector<PreferencePair>& pairs,
                            const CorpusIndex& corpus) {
  std::vector<std::pair<double, double>> scored;
  scored.reserve(pairs.size());
  for (const auto& p : pairs) {
    const Session& s = corpus.session(p.query_id);
    scored.emplace_back(
        score(m, s.query, corpus.candidate(p.query_id, p.winner_id)),
        score(m, s.query, corpus.candidate(p.query_id, p.loser_id)));
  }
  return pair_accuracy_scores(scored);
}

struct ScorerTrainReport {
  std::vector<double> epoch_losses;  // mean train loss after each epoch
  double final_loss = 0.0;
  // Unset when the held-out split is empty; never reported as zero.
  std::optional<double> holdout_accuracy;
  std::size_t n_train = 0;
  std::size_t n_holdout = 0;
};

// Mini-batch gradient descent on the pairwise objective. Deterministic for
// a fixed (pairs, sessions, cfg): initialization, the holdout split, and
// every shuffle derive from cfg.seed.
inline ScorerModel train_scorer(const std::vector<PreferencePair>& pairs,
                                const std::vector<Session>& sessions,
                                const TrainConfig& cfg,
                                ScorerTrainReport* report = nullptr) {
  cfg.validate();
  if (pairs.empty()) throw ValidationError("train_scorer: no pairs");
  CorpusIndex corpus(sessions);
  auto [d_q, d_v] = corpus.feature_dims();
  // Resolve everything up front so bad references fail before training.
  for (const auto& p : pairs) {
    corpus.candidate(p.query_id, p.winner_id);
    corpus.candidate(p.query_id, p.loser_id);
  }

  std::vector<PreferencePair> shuffled = pairs;
  auto split_gen = rng::engine(cfg.seed, {rng::hash_str("holdout")});
  std::shuffle(shuffled.begin(), shuffled.end(), split_gen);
  std::size_t n_hold = static_cast<std::size_t>(
      std::floor(cfg.holdout_fraction * static_cast<double>(shuffled.size())));
  std::vector<PreferencePair> holdout(shuffled.end() - n_hold, shuffled.end());
  std::vector<PreferencePair> train(shuffled.begin(), shuffled.end() - n_hold);

  ScorerModel model = ScorerModel::init(d_q, d_v, cfg.d_h, cfg.seed);
  auto epoch_gen = rng::engine(cfg.seed, {rng::hash_str("epochs")});
  ScorerTrainReport rep;
  rep.n_train = train.size();
  rep.n_holdout = holdout.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), epoch_gen);
    for (std::size_t start = 0; start < train.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(
          train.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<PreferencePair> batch(train.begin() + start,
                                        train.begin() + end);
      ScorerGrad g = pairwise_grad(model, batch, corpus, cfg.lambda_reg);
      for (std::size_t i = 0; i < model.fusion_weights.size(); ++i) {
        model.fusion_weights[i] -= cfg.learning_rate * g.fusion_weights[i];
      }
      for (std::size_t i = 0; i < model.head_weights.size(); ++i) {
        model.head_weights[i] -= cfg.learning_rate * g.head_weights[i];
      }
      model.head_bias -= cfg.learning_rate * g.head_bias;
    }
    double loss = pairwise_loss(model, train, corpus, cfg.lambda_reg);
    if (!std::isfinite(loss)) {
      throw TrainingError("train_scorer: non-finite loss at epoch " +
                          std::to_string(epoch));
    }
    rep.epoch_losses.push_back(loss);
  }
  rep.final_loss = rep.epoch_losses.back();
  if (!holdout.empty()) {
    rep.holdout_accuracy = pair_accuracy(model, holdout, corpus);
  }
  if (report != nullptr) *report = rep;
  return model;
}

}  // namespace reranklab
