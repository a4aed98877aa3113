// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0

#include "reranklab/grpo.hpp"

#include <algorithm>
#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "reranklab/rng.hpp"

using namespace reranklab;

namespace {

Session session_with_truths(const std::vector<SimTruth>& truths,
                            int d_q = 2, int d_v = 3,
                            std::uint64_t feat_seed = 1) {
  Session s;
  s.query.query_id = "q";
  auto gen = rng::engine(feat_seed);
  for (int j = 0; j < d_q; ++j) {
    s.query.features.push_back(rng::gaussian(gen));
  }
  for (std::size_t i = 0; i < truths.size(); ++i) {
    CandidateRecord c;
    c.cand_id = "c" + std::to_string(i);
    for (int j = 0; j < d_v; ++j) c.features.push_back(rng::gaussian(gen));
    c.sim_truth = truths[i];
    s.candidates.push_back(std::move(c));
  }
  return s;
}

// Independent nDCG: DCG by direct formula, normalized by the brute-force
// maximum over all permutations.
double brute_force_ndcg(const std::vector<std::string>& list,
                        const std::vector<std::string>& y_s, int k) {
  ScoreMap rel;
  for (std::size_t i = 0; i < y_s.size(); ++i) {
    rel[y_s[i]] = std::max(static_cast<double>(k) - static_cast<double>(i),
                           0.0);
  }
  auto dcg = [&](const std::vector<std::string>& l) {
    double total = 0.0;
    for (std::size_t t = 0;
         t < std::min(l.size(), static_cast<std::size_t>(k)); ++t) {
      total += rel.at(l[t]) / std::log2(static_cast<double>(t) + 2.0);
    }
    return total;
  };
  std::vector<std::string> perm = y_s;
  std::sort(perm.begin(), perm.end());
  double best = 0.0;
  do {
    best = std::max(best, dcg(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return dcg(list) / best;
}

}  // namespace

TEST_CASE("ideal order sorts by score with ascending-id ties") {
  std::vector<CandidateRecord> cands;
  for (const char* id : {"a", "b"}) {
    CandidateRecord c;
    c.cand_id = id;
    cands.push_back(c);
  }
  CHECK(ideal_order(cands, {{"a", 0.9}, {"b", 0.1}}) ==
        std::vector<std::string>{"a", "b"});
  CHECK(ideal_order(cands, {{"a", 0.4}, {"b", 0.4}}) ==
        std::vector<std::string>{"a", "b"});
}

TEST_CASE("ideal order maximizes discounted score over all permutations") {
  auto gen = rng::engine(3);
  std::vector<CandidateRecord> cands;
  ScoreMap scores;
  for (int i = 0; i < 6; ++i) {
    CandidateRecord c;
    c.cand_id = "c" + std::to_string(i);
    cands.push_back(c);
    scores[c.cand_id] = rng::uniform01(gen);
  }
  auto ideal = ideal_order(cands, scores);

  auto weighted = [&](const std::vector<std::string>& l) {
    double total = 0.0;
    for (std::size_t t = 0; t < l.size(); ++t) {
      total += scores.at(l[t]) / std::log2(static_cast<double>(t) + 2.0);
    }
    return total;
  };
  std::vector<std::string> perm;
  for (const auto& c : cands) perm.push_back(c.cand_id);
  std::sort(perm.begin(), perm.end());
  double best = 0.0;
  do {
    best = std::max(best, weighted(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(weighted(ideal) == Catch::Approx(best).margin(1e-12));
}

TEST_CASE("ideal order is invariant under increasing score transforms") {
  auto gen = rng::engine(5);
  std::vector<CandidateRecord> cands;
  ScoreMap scores;
  for (int i = 0; i < 7; ++i) {
    CandidateRecord c;
    c.cand_id = "c" + std::to_string(i);
    cands.push_back(c);
    scores[c.cand_id] = rng::gaussian(gen);
  }
  ScoreMap warped;
  for (const auto& [id, v] : scores) warped[id] = std::exp(0.5 * v) + v;
  CHECK(ideal_order(cands, scores) == ideal_order(cands, warped));
}

TEST_CASE("graded relevance follows K - rank + 1 with a zero clamp") {
  std::vector<std::string> y_s;
  for (int i = 0; i < 10; ++i) y_s.push_back("c" + std::to_string(i));
  auto rel10 = graded_rel(y_s, 10);
  CHECK(rel10.at("c0") == 10.0);
  auto rel5 = graded_rel(y_s, 5);
  CHECK(rel5.at("c4") == 1.0);  // rank 5 at K=5
  auto rel3 = graded_rel(y_s, 3);
  CHECK(rel3.at("c3") == 0.0);  // rank 4 at K=3, clamped
  CHECK(rel3.at("c9") == 0.0);
}

TEST_CASE("dcg basics and the hand-computed three-item case") {
  CHECK(dcg_at_k({"a"}, {{"a", 5.0}}, 1) == 5.0);
  CHECK(dcg_at_k({"a", "b"}, {{"a", 0.0}, {"b", 0.0}}, 2) == 0.0);

  ScoreMap rel{{"a", 3.0}, {"b", 2.0}, {"c", 1.0}};
  // 2/log2(2) + 3/log2(3) + 1/log2(4)
  double expect = 2.0 + 3.0 / std::log2(3.0) + 0.5;
  CHECK(dcg_at_k({"b", "a", "c"}, rel, 3) ==
        Catch::Approx(expect).margin(1e-9));
  CHECK(expect == Catch::Approx(4.392789260714372).margin(1e-9));

  CHECK_THROWS_AS(dcg_at_k({"zz"}, rel, 1), MissingScoreError);
  CHECK_THROWS_AS(dcg_at_k({}, rel, 1), ValidationError);
}

TEST_CASE("ndcg of the ideal order is one and the swap case matches") {
  std::vector<std::string> y_s{"a", "b", "c"};
  CHECK(ndcg_at_k(y_s, y_s, 3).value == Catch::Approx(1.0).margin(1e-12));

  double num = 2.0 + 3.0 / std::log2(3.0) + 0.5;
  double den = 3.0 + 2.0 / std::log2(3.0) + 0.5;
  NdcgValue swapped = ndcg_at_k({"b", "a", "c"}, y_s, 3);
  CHECK_FALSE(swapped.vacuous);
  CHECK(swapped.value == Catch::Approx(num / den).margin(1e-9));
  CHECK(swapped.value == Catch::Approx(0.922493617521415).margin(1e-6));
}

TEST_CASE("ndcg matches the exhaustive oracle and stays within bounds") {
  auto gen = rng::engine(7);
  for (int n = 2; n <= 5; ++n) {
    std::vector<std::string> y_s;
    for (int i = 0; i < n; ++i) y_s.push_back("c" + std::to_string(i));
    for (int k = 1; k <= n; ++k) {
      std::vector<std::string> perm = y_s;
      std::sort(perm.begin(), perm.end());
      double lo = 2.0;
      double hi = -1.0;
      do {
        double v = ndcg_at_k(perm, y_s, k).value;
        CHECK(v == Catch::Approx(brute_force_ndcg(perm, y_s, k)).margin(1e-9));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      } while (std::next_permutation(perm.begin(), perm.end()));
      CHECK(lo >= 0.0);
      CHECK(hi == Catch::Approx(1.0).margin(1e-12));
    }
  }
  (void)gen;
}

TEST_CASE("swapping two distinct-relevance items inside top-K drops ndcg") {
  auto gen = rng::engine(9);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 3 + static_cast<int>(gen() % 3);
    int k = n;
    std::vector<std::string> y_s;
    for (int i = 0; i < n; ++i) y_s.push_back("c" + std::to_string(i));
    std::size_t i = gen() % static_cast<std::size_t>(n - 1);
    std::size_t j = i + 1 + gen() % static_cast<std::size_t>(n - 1 - i);
    std::vector<std::string> swapped = y_s;
    std::swap(swapped[i], swapped[j]);
    CHECK(ndcg_at_k(swapped, y_s, k).value < 1.0);
  }
}

TEST_CASE("reward mixes behavioral and ndcg terms linearly") {
  SimConfig sim;
  Session s = session_with_truths({{0.9, 1.0, 0.2, 0.0},
                                   {0.5, 2.0, 0.8, 0.0},
                                   {0.1, 0.5, 0.5, 0.0}});
  ScorerModel scorer = ScorerModel::init(2, 3, 4, 11);

  RankedList ideal;
  ideal.query_id = "q";
  ideal.items = ideal_order(s, scorer);
  RewardConfig pure_ndcg{0.0, 1.0, 3};
  CHECK(reward(ideal, s, scorer, pure_ndcg, sim).total ==
        Catch::Approx(1.0).margin(1e-12));

  RankedList some;
  some.query_id = "q";
  some.items = {"c1", "c0", "c2"};
  RewardConfig pure_behavioral{1.0, 0.0, 3};
  CHECK(reward(some, s, scorer, pure_behavioral, sim).total ==
        Catch::Approx(behavioral_reward(some, s, sim)).margin(1e-12));

  auto gen = rng::engine(13);
  for (int t = 0; t < 10; ++t) {
    double alpha = rng::uniform01(gen);
    double beta = rng::uniform01(gen) + 0.01;
    RewardConfig mix{alpha, beta, 3};
    RewardBreakdown r = reward(some, s, scorer, mix, sim);
    CHECK(r.total ==
          Catch::Approx(alpha * r.behavioral + beta * r.ndcg).margin(1e-12));
    CHECK(r.total == Catch::Approx(
                         alpha * reward(some, s, scorer, {1.0, 0.0, 3}, sim)
                                     .total +
                         beta * reward(some, s, scorer, {0.0, 1.0, 3}, sim)
                                    .total)
                         .margin(1e-12));
  }
}

TEST_CASE("reward config validation") {
  RewardConfig bad{0.0, 0.0, 3};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  RewardConfig bad_k{0.5, 0.5, 0};
  CHECK_THROWS_AS(bad_k.validate(), ValidationError);
}

TEST_CASE("group advantages standardize with the population deviation") {
  CHECK(group_advantages({0.7, 0.7, 0.7}, 1e-8) ==
        std::vector<double>{0.0, 0.0, 0.0});

  auto two = group_advantages({0.0, 1.0}, 1e-15);
  CHECK(two[0] == Catch::Approx(-1.0).margin(1e-9));
  CHECK(two[1] == Catch::Approx(1.0).margin(1e-9));

  auto three = group_advantages({1.0, 2.0, 3.0}, 0.0);
  CHECK(three[0] == Catch::Approx(-1.224744871391589).margin(1e-9));
  CHECK(three[1] == Catch::Approx(0.0).margin(1e-12));
  CHECK(three[2] == Catch::Approx(1.224744871391589).margin(1e-9));

  CHECK_THROWS_AS(group_advantages({1.0}, 1e-8), ValidationError);
}

TEST_CASE("group advantages have zero mean and unit population variance") {
  auto gen = rng::engine(17);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> rewards;
    for (int i = 0; i < 8; ++i) rewards.push_back(rng::uniform01(gen));
    auto adv = group_advantages(rewards, 1e-12);
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    CHECK(std::fabs(mean) < 1e-12);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= static_cast<double>(adv.size());
    CHECK(var == Catch::Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("zero learning rate leaves the policy untouched") {
  SimConfig sim;
  sim.n_queries = 3;
  sim.candidates_per_query = 4;
  auto sessions = generate_corpus(sim);
  ScorerModel scorer = ScorerModel::init(sim.d_q, sim.d_v, 8, 3);
  ListPolicy p = ListPolicy::init(sim.d_q, sim.d_v);
  p.utility_weights[0] = 0.3;
  GrpoConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.steps = 5;
  ListPolicy out = train_grpo(p, sessions, scorer, {0.5, 0.5, 4}, cfg, sim);
  CHECK(out.utility_weights == p.utility_weights);
}

TEST_CASE("constant rewards produce an exactly zero update") {
  // Identical attractiveness everywhere with alpha=1, beta=0: every
  // rollout scores 1, advantages vanish, and the parameters cannot move.
  SimConfig sim;
  Session s = session_with_truths({{0.5, 1.0, 0.5, 0.0},
                                   {0.5, 2.0, 0.5, 0.0},
                                   {0.5, 0.5, 0.5, 0.0}});
  std::vector<Session> sessions{s};
  ScorerModel scorer = ScorerModel::init(2, 3, 4, 7);
  ListPolicy p = ListPolicy::init(2, 3);
  p.utility_weights[2] = -0.4;
  GrpoConfig cfg;
  cfg.steps = 10;
  ListPolicy out = train_grpo(p, sessions, scorer, {1.0, 0.0, 3}, cfg, sim);
  CHECK(out.utility_weights == p.utility_weights);
}

TEST_CASE("grpo training lifts sampled ndcg on a single session") {
  SimConfig sim;
  sim.n_queries = 1;
  sim.candidates_per_query = 4;
  sim.seed = 19;
  auto sessions = generate_corpus(sim);
  ScorerModel scorer = ScorerModel::init(sim.d_q, sim.d_v, 8, 23);
  GrpoConfig cfg;
  std::vector<GrpoTraceRow> trace;
  ListPolicy p = train_grpo(ListPolicy::init(sim.d_q, sim.d_v), sessions,
                            scorer, {0.0, 1.0, 4}, cfg, sim, &trace);
  REQUIRE(trace.size() == static_cast<std::size_t>(cfg.steps));
  std::size_t tenth = trace.size() / 10;
  double first = 0.0;
  double last = 0.0;
  for (std::size_t i = 0; i < tenth; ++i) {
    first += trace[i].mean_ndcg;
    last += trace[trace.size() - 1 - i].mean_ndcg;
  }
  first /= static_cast<double>(tenth);
  last /= static_cast<double>(tenth);
  // A single session trains so sample-efficiently that the first tenth of
  // the trace is already mid-rise; the uplift window understates the gain.
  CHECK(last - first >= 0.03);
  CHECK(last >= 0.99);
  CHECK(greedy_decode(p, sessions[0].query, sessions[0].candidates, 4).items ==
        ideal_order(sessions[0], scorer));
}

TEST_CASE("converged greedy decode matches the ideal order on small sessions") {
  SimConfig sim;
  sim.n_queries = 10;
  sim.candidates_per_query = 4;
  sim.feature_noise = 3.0;
  sim.mismatch_rate = 0.0;
  sim.seed = 29;
  auto sessions = generate_corpus(sim);
  ScorerModel scorer = ScorerModel::init(sim.d_q, sim.d_v, 8, 31);
  for (auto& w : scorer.fusion_weights) w *= 0.001;
  GrpoConfig cfg;
  cfg.steps = 800;
  cfg.learning_rate = 0.05;
  ListPolicy p = train_grpo(ListPolicy::init(sim.d_q, sim.d_v), sessions,
                            scorer, {0.0, 1.0, 4}, cfg, sim);
  int matches = 0;
  for (const auto& s : sessions) {
    auto decoded = greedy_decode(p, s.query, s.candidates, 4).items;
    if (decoded == ideal_order(s, scorer)) ++matches;
  }
  CHECK(matches >= 9);
}

TEST_CASE("grpo is bit-reproducible and rejects divergence") {
  SimConfig sim;
  sim.n_queries = 4;
  sim.candidates_per_query = 4;
  auto sessions = generate_corpus(sim);
  ScorerModel scorer = ScorerModel::init(sim.d_q, sim.d_v, 8, 3);
  GrpoConfig cfg;
  cfg.steps = 20;
  ListPolicy a = train_grpo(ListPolicy::init(sim.d_q, sim.d_v), sessions,
                            scorer, {0.5, 0.5, 4}, cfg, sim);
  ListPolicy b = train_grpo(ListPolicy::init(sim.d_q, sim.d_v), sessions,
                            scorer, {0.5, 0.5, 4}, cfg, sim);
  CHECK(a.utility_weights == b.utility_weights);

  GrpoConfig wild = cfg;
  wild.learning_rate = 1e308;
  CHECK_THROWS_WITH(train_grpo(ListPolicy::init(sim.d_q, sim.d_v), sessions,
                               scorer, {0.5, 0.5, 4}, wild, sim),
                    Catch::Matchers::ContainsSubstring("step"));
}
