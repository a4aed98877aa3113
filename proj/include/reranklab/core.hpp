// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once
// Domain types shared by every module, plus the target-sequence
// reconstruction used to build supervision for list policies.
//
// All types are plain values, immutable by convention after construction;
// every operation here is a pure function, so concurrent readers need no
// locking.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace reranklab {

// Error taxonomy. The CLI maps each class to a stable exit code.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingScoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DependencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A query is long-tail when its 7-day page views fall below this count.
constexpr long long kLongTailPvThreshold = 70;

struct QueryRecord {
  std::string query_id;
  std::vector<double> features;  // dimension d_q
  long long pv_count = 0;        // 7-day page views
};

inline bool is_long_tail(const QueryRecord& q,
                         long long threshold = kLongTailPvThreshold) {
  return q.pv_count < threshold;
}

// Hidden ground truth attached to simulator-generated candidates.
struct SimTruth {
  double true_quality = 0.0;  // in [0,1]
  double popularity = 0.0;    // >= 0
  double clickbait = 0.0;     // in [0,1]
  double mismatch = 0.0;      // in [0,1]
};

struct CandidateRecord {
  std::string cand_id;
  std::vector<double> features;       // dimension d_v
  std::optional<SimTruth> sim_truth;  // present only for simulator data
};

// One query with its candidate pool and behavioral outcome. The unexposed
// set U is always derived from (candidates, clicked, exposed_unclicked) so
// the partition cannot go stale.
struct Session {
  QueryRecord query;
  std::vector<CandidateRecord> candidates;
  std::set<std::string> clicked;            // C
  std::set<std::string> exposed_unclicked;  // E

  std::vector<std::string> candidate_ids() const {
    std::vector<std::string> ids;
    ids.reserve(candidates.size());
    for (const auto& c : candidates) ids.push_back(c.cand_id);
    return ids;
  }

  // U = ids(candidates) \ (C ∪ E), in candidate order.
  std::vector<std::string> unexposed() const {
    std::vector<std::string> ids;
    for (const auto& c : candidates) {
      if (clicked.count(c.cand_id) == 0 &&
          exposed_unclicked.count(c.cand_id) == 0) {
        ids.push_back(c.cand_id);
      }
    }
    return ids;
  }

  const CandidateRecord* find(const std::string& cand_id) const {
    for (const auto& c : candidates) {
      if (c.cand_id == cand_id) return &c;
    }
    return nullptr;
  }

  void validate() const {
    std::set<std::string> ids;
    for (const auto& c : candidates) {
      if (!ids.insert(c.cand_id).second) {
        throw ValidationError("session " + query.query_id +
                              ": duplicate candidate id '" + c.cand_id + "'");
      }
    }
    for (const auto& id : clicked) {
      if (ids.count(id) == 0) {
        throw ValidationError("session " + query.query_id + ": clicked id '" +
                              id + "' is not a candidate");
      }
      if (exposed_unclicked.count(id) != 0) {
        throw ValidationError("session " + query.query_id + ": id '" + id +
                              "' is both clicked and exposed_unclicked");
      }
    }
    for (const auto& id : exposed_unclicked) {
      if (ids.count(id) == 0) {
        throw ValidationError("session " + query.query_id + ": exposed id '" +
                              id + "' is not a candidate");
      }
    }
    if (query.pv_count < 0) {
      throw ValidationError("session " + query.query_id +
                            ": negative pv_count");
    }
  }
};

// An ordered result page. scores, when non-empty, is parallel to items;
// its meaning depends on the producer (utilities for greedy decoding,
// per-step log-probabilities for sampling).
struct RankedList {
  std::string query_id;
  std::vector<std::string> items;
  std::vector<double> scores;
};

using ScoreMap = std::map<std::string, double>;

inline double score_for(const ScoreMap& scores, const std::string& id) {
  auto it = scores.find(id);
  if (it == scores.end()) {
    throw MissingScoreError("no score for candidate '" + id + "'");
  }
  return it->second;
}

// Descending-score order with ties broken by ascending id, so reruns are
// byte-identical. Every id must have a score.
inline std::vector<std::string> stable_sort_desc(std::vector<std::string> ids,
                                                 const ScoreMap& scores) {
  for (const auto& id : ids) score_for(scores, id);
  std::sort(ids.begin(), ids.end(),
            [&scores](const std::string& a, const std::string& b) {
              double sa = scores.at(a);
              double sb = scores.at(b);
              if (sa != sb) return sa > sb;
              return a < b;
            });
  return ids;
}

// Rebuilds the supervision sequence for one session: clicked items first,
// internally ranked by score; then the exposed-but-unclicked and unexposed
// items merged and jointly ranked by the same score. Output is a
// permutation of the session's candidate ids.
inline std::vector<std::string> reconstruct_target(const Session& session,
                                                   const ScoreMap& scores) {
  std::vector<std::string> clicked;
  std::vector<std::string> rest;
  for (const auto& c : session.candidates) {
    if (session.clicked.count(c.cand_id) != 0) {
      clicked.push_back(c.cand_id);
    } else {
      rest.push_back(c.cand_id);
    }
  }
  std::vector<std::string> target = stable_sort_desc(std::move(clicked), scores);
  std::vector<std::string> tail = stable_sort_desc(std::move(rest), scores);
  target.insert(target.end(), tail.begin(), tail.end());
  return target;
}

// Non-owning lookup over a corpus; sessions must outlive the index.
class CorpusIndex {
 public:
  explicit CorpusIndex(const std::vector<Session>& sessions) {
    for (const auto& s : sessions) {
      if (!by_query_.emplace(s.query.query_id, &s).second) {
        throw ValidationError("duplicate query_id '" + s.query.query_id +
                              "' in corpus");
      }
    }
  }

  const Session& session(const std::string& query_id) const {
    auto it = by_query_.find(query_id);
    if (it == by_query_.end()) {
      throw ValidationError("unknown query_id '" + query_id + "'");
    }
    return *it->second;
  }

  const CandidateRecord& candidate(const std::string& query_id,
                                   const std::string& cand_id) const {
    const CandidateRecord* c = session(query_id).find(cand_id);
    if (c == nullptr) {
      throw ValidationError("unknown candidate '" + cand_id + "' for query '" +
                            query_id + "'");
    }
    return *c;
  }

  std::size_t size() const { return by_query_.size(); }

  // Uniform feature dimensions across the corpus; throws if mixed.
  std::pair<int, int> feature_dims() const {
    int d_q = -1;
    int d_v = -1;
    for (const auto& [qid, s] : by_query_) {
      int dq = static_cast<int>(s->query.features.size());
      if (d_q < 0) d_q = dq;
      if (dq != d_q) {
        throw ValidationError("query '" + qid + "' has feature dim " +
                              std::to_string(dq) + ", corpus declares " +
                              std::to_string(d_q));
      }
      for (const auto& c : s->candidates) {
        int dv = static_cast<int>(c.features.size());
        if (d_v < 0) d_v = dv;
        if (dv != d_v) {
          throw ValidationError("candidate '" + c.cand_id +
                                "' has feature dim " + std::to_string(dv) +
                                ", corpus declares " + std::to_string(d_v));
        }
      }
    }
    if (d_q < 0 || d_v < 0) throw ValidationError("empty corpus");
    return {d_q, d_v};
  }

 private:
  std::map<std::string, const Session*> by_query_;
};

// Shared result type for normalized DCG: `vacuous` marks pages whose ideal
// gain is zero, where the value is defined as 1.
struct NdcgValue {
  double value = 0.0;
  bool vacuous = false;
};

}  // namespace reranklab
