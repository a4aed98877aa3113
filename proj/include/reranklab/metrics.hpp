// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once
// Offline evaluation: AUC, graded nDCG against arbitrary non-negative
// labels, Good/Same/Bad judgments with an oracle judge, and the label
// extractors (click / long-play / duration / oracle quality) the
// evaluation harness reports against.

#include <cmath>
#include <string>
#include <vector>

#include "reranklab/core.hpp"
#include "reranklab/simulator.hpp"

namespace reranklab {

// Probability that a uniformly random positive outscores a uniformly
// random negative, ties counting half. Exact pair counting.
inline double auc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw ValidationError("auc: scores and labels differ in length");
  }
  std::vector<double> pos;
  std::vector<double> neg;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0) {
      pos.push_back(scores[i]);
    } else {
      neg.push_back(scores[i]);
    }
  }
  if (pos.empty() || neg.empty()) {
    throw ValidationError("auc: need both a positive and a negative class");
  }
  double wins = 0.0;
  for (double p : pos) {
    for (double n : neg) {
      if (p > n) {
        wins += 1.0;
      } else if (p == n) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(pos.size()) *
                 static_cast<double>(neg.size()));
}

// Standard graded nDCG: gain = label, discount log2(1 + t), ideal = labels
// sorted descending over the label map's domain. All-zero labels make the
// page vacuous (value 1, flagged).
inline NdcgValue ndcg_labels(const std::vector<std::string>& list,
                             const ScoreMap& label_of, int k) {
  if (k < 1) throw ValidationError("ndcg_labels: K must be >= 1");
  for (const auto& [id, label] : label_of) {
    if (!(label >= 0.0)) {
      throw ValidationError("ndcg_labels: negative label for '" + id + "'");
    }
  }
  double dcg = 0.0;
  std::size_t limit = std::min(list.size(), static_cast<std::size_t>(k));
  for (std::size_t t = 0; t < limit; ++t) {
    dcg += score_for(label_of, list[t]) /
           std::log2(static_cast<double>(t + 1) + 1.0);
  }
  std::vector<double> sorted;
  sorted.reserve(label_of.size());
  for (const auto& [id, label] : label_of) sorted.push_back(label);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double ideal = 0.0;
  std::size_t ideal_limit = std::min(sorted.size(),
                                     static_cast<std::size_t>(k));
  for (std::size_t t = 0; t < ideal_limit; ++t) {
    ideal += sorted[t] / std::log2(static_cast<double>(t + 1) + 1.0);
  }
  if (ideal == 0.0) return {1.0, true};
  return {dcg / ideal, false};
}

// Side-by-side advantage (G - B) / (G + S + B) as a percentage, rounded to
// two decimals for reporting.
inline double gsb_adv(int good, int same, int bad) {
  if (good < 0 || same < 0 || bad < 0) {
    throw ValidationError("gsb_adv: negative count");
  }
  int total = good + same + bad;
  if (total == 0) throw ValidationError("gsb_adv: all counts are zero");
  double pct = 100.0 * static_cast<double>(good - bad) /
               static_cast<double>(total);
  return std::round(pct * 100.0) / 100.0;
}

enum class LabelKind { kClick, kLong, kDur, kHuman };

inline const char* label_kind_name(LabelKind kind) {
  switch (kind) {
    case LabelKind::kClick: return "click";
    case LabelKind::kLong: return "long";
    case LabelKind::kDur: return "dur";
    case LabelKind::kHuman: return "human";
  }
  return "?";
}

inline LabelKind parse_label_kind(const std::string& name) {
  if (name == "click") return LabelKind::kClick;
  if (name == "long") return LabelKind::kLong;
  if (name == "dur") return LabelKind::kDur;
  if (name == "human") return LabelKind::kHuman;
  throw ValidationError("unknown label kind '" + name + "'");
}

// Per-candidate labels for one session.
//   click: membership in the clicked set (works on any data).
//   dur:   simulated watch fraction, true_quality gated by the click.
//   long:  indicator of watch fraction above the long-play threshold.
//   human: the oracle quality itself.
// The last three require simulator ground truth.
inline ScoreMap extract_labels(const Session& session, LabelKind kind,
                               double long_play_threshold = 0.6) {
  ScoreMap labels;
  for (const auto& c : session.candidates) {
    bool clicked = session.clicked.count(c.cand_id) != 0;
    switch (kind) {
      case LabelKind::kClick:
        labels[c.cand_id] = clicked ? 1.0 : 0.0;
        break;
      case LabelKind::kDur: {
        double q = detail::require_truth(session, c.cand_id).true_quality;
        labels[c.cand_id] = clicked ? q : 0.0;
        break;
      }
      case LabelKind::kLong: {
        double q = detail::require_truth(session, c.cand_id).true_quality;
        double watch = clicked ? q : 0.0;
        labels[c.cand_id] = watch > long_play_threshold ? 1.0 : 0.0;
        break;
      }
      case LabelKind::kHuman:
        labels[c.cand_id] =
            detail::require_truth(session, c.cand_id).true_quality;
        break;
    }
  }
  return labels;
}

enum class Gsb { kGood, kSame, kBad };

inline const char* gsb_name(Gsb g) {
  switch (g) {
    case Gsb::kGood: return "Good";
    case Gsb::kSame: return "Same";
    case Gsb::kBad: return "Bad";
  }
  return "?";
}

// Oracle judge: compares the two lists' oracle-quality nDCG and calls Good
// when a beats b by more than the margin, Bad for the reverse, else Same.
inline Gsb gsb_compare(const RankedList& list_a, const RankedList& list_b,
                       const Session& session, double judge_margin) {
  ScoreMap labels = extract_labels(session, LabelKind::kHuman);
  int k = static_cast<int>(std::max(list_a.items.size(),
                                    list_b.items.size()));
  if (k < 1) throw ValidationError("gsb_compare: both lists empty");
  double na = ndcg_labels(list_a.items, labels, k).value;
  double nb = ndcg_labels(list_b.items, labels, k).value;
  if (na - nb > judge_margin) return Gsb::kGood;
  if (nb - na > judge_margin) return Gsb::kBad;
  return Gsb::kSame;
}

}  // namespace reranklab
