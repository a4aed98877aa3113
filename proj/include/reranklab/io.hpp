// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
#pragma once
// File formats. Sessions and preference pairs travel as JSONL (one object
// per line, snake_case fields), model checkpoints as single JSON
// documents, reports and training traces as CSV. Serialization order is
// fixed everywhere so identical inputs produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reranklab/core.hpp"
#include "reranklab/policy.hpp"
#include "reranklab/scorer.hpp"
#include "reranklab/simulator.hpp"

namespace reranklab {

using ordered_json = nlohmann::ordered_json;

constexpr int kCheckpointFormatVersion = 1;

namespace detail {

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline ordered_json parse_json(const std::string& text,
                               const std::string& context) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded()) throw IoError("malformed JSON in " + context);
  return j;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

// ---- sessions ----

inline ordered_json session_to_json(const Session& s) {
  ordered_json j;
  j["query"] = {{"query_id", s.query.query_id},
                {"features", s.query.features},
                {"pv_count", s.query.pv_count}};
  ordered_json cands = ordered_json::array();
  for (const auto& c : s.candidates) {
    ordered_json jc;
    jc["cand_id"] = c.cand_id;
    jc["features"] = c.features;
    if (c.sim_truth.has_value()) {
      jc["sim_truth"] = {{"true_quality", c.sim_truth->true_quality},
                         {"popularity", c.sim_truth->popularity},
                         {"clickbait", c.sim_truth->clickbait},
                         {"mismatch", c.sim_truth->mismatch}};
    }
    cands.push_back(std::move(jc));
  }
  j["candidates"] = std::move(cands);
  j["clicked"] = s.clicked;
  j["exposed_unclicked"] = s.exposed_unclicked;
  return j;
}

inline Session session_from_json(const ordered_json& j) {
  Session s;
  s.query.query_id = j.at("query").at("query_id").get<std::string>();
  s.query.features = j.at("query").at("features").get<std::vector<double>>();
  s.query.pv_count = j.at("query").at("pv_count").get<long long>();
  for (const auto& jc : j.at("candidates")) {
    CandidateRecord c;
    c.cand_id = jc.at("cand_id").get<std::string>();
    c.features = jc.at("features").get<std::vector<double>>();
    if (jc.contains("sim_truth")) {
      SimTruth t;
      t.true_quality = jc.at("sim_truth").at("true_quality").get<double>();
      t.popularity = jc.at("sim_truth").at("popularity").get<double>();
      t.clickbait = jc.at("sim_truth").at("clickbait").get<double>();
      t.mismatch = jc.at("sim_truth").at("mismatch").get<double>();
      c.sim_truth = t;
    }
    s.candidates.push_back(std::move(c));
  }
  for (const auto& id : j.at("clicked")) {
    s.clicked.insert(id.get<std::string>());
  }
  for (const auto& id : j.at("exposed_unclicked")) {
    s.exposed_unclicked.insert(id.get<std::string>());
  }
  s.validate();
  return s;
}

inline void write_sessions_jsonl(const std::string& path,
                                 const std::vector<Session>& sessions) {
  auto out = detail::open_out(path);
  for (const auto& s : sessions) out << session_to_json(s).dump() << "\n";
}

inline std::vector<Session> read_sessions_jsonl(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<Session> sessions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    sessions.push_back(session_from_json(detail::parse_json(
        line, path + ":" + std::to_string(lineno))));
  }
  if (sessions.empty()) throw IoError("no sessions in '" + path + "'");
  return sessions;
}

// ---- preference pairs ----

inline void write_pairs_jsonl(const std::string& path,
                              const std::vector<PreferencePair>& pairs) {
  auto out = detail::open_out(path);
  for (const auto& p : pairs) {
    ordered_json j = {{"query_id", p.query_id},
                      {"winner_id", p.winner_id},
                      {"loser_id", p.loser_id},
                      {"margin", p.margin}};
    out << j.dump() << "\n";
  }
}

inline std::vector<PreferencePair> read_pairs_jsonl(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<PreferencePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j =
        detail::parse_json(line, path + ":" + std::to_string(lineno));
    PreferencePair p;
    p.query_id = j.at("query_id").get<std::string>();
    p.winner_id = j.at("winner_id").get<std::string>();
    p.loser_id = j.at("loser_id").get<std::string>();
    p.margin = j.at("margin").get<double>();
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw IoError("no pairs in '" + path + "'");
  return pairs;
}

// ---- simulator config ----

inline ordered_json sim_config_to_json(const SimConfig& cfg) {
  return ordered_json{{"n_queries", cfg.n_queries},
                      {"candidates_per_query", cfg.candidates_per_query},
                      {"d_q", cfg.d_q},
                      {"d_v", cfg.d_v},
                      {"position_bias_eta", cfg.position_bias_eta},
                      {"clickbait_gain", cfg.clickbait_gain},
                      {"quality_gain", cfg.quality_gain},
                      {"attract_offset", cfg.attract_offset},
                      {"mismatch_rate", cfg.mismatch_rate},
                      {"label_noise", cfg.label_noise},
                      {"feature_noise", cfg.feature_noise},
                      {"pairs_per_query", cfg.pairs_per_query},
                      {"long_tail_pv", cfg.long_tail_pv},
                      {"seed", cfg.seed}};
}

inline SimConfig sim_config_from_json(const ordered_json& j) {
  SimConfig cfg;
  if (j.contains("n_queries")) cfg.n_queries = j.at("n_queries").get<int>();
  if (j.contains("candidates_per_query"))
    cfg.candidates_per_query = j.at("candidates_per_query").get<int>();
  if (j.contains("d_q")) cfg.d_q = j.at("d_q").get<int>();
  if (j.contains("d_v")) cfg.d_v = j.at("d_v").get<int>();
  if (j.contains("position_bias_eta"))
    cfg.position_bias_eta = j.at("position_bias_eta").get<double>();
  if (j.contains("clickbait_gain"))
    cfg.clickbait_gain = j.at("clickbait_gain").get<double>();
  if (j.contains("quality_gain"))
    cfg.quality_gain = j.at("quality_gain").get<double>();
  if (j.contains("attract_offset"))
    cfg.attract_offset = j.at("attract_offset").get<double>();
  if (j.contains("mismatch_rate"))
    cfg.mismatch_rate = j.at("mismatch_rate").get<double>();
  if (j.contains("label_noise"))
    cfg.label_noise = j.at("label_noise").get<double>();
  if (j.contains("feature_noise"))
    cfg.feature_noise = j.at("feature_noise").get<double>();
  if (j.contains("pairs_per_query"))
    cfg.pairs_per_query = j.at("pairs_per_query").get<int>();
  if (j.contains("long_tail_pv"))
    cfg.long_tail_pv = j.at("long_tail_pv").get<long long>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

inline void write_sim_config(const std::string& path, const SimConfig& cfg,
                             const std::string& config_hash = "") {
  ordered_json j = sim_config_to_json(cfg);
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  auto out = detail::open_out(path);
  out << j.dump(2) << "\n";
}

inline SimConfig read_sim_config(const std::string& path) {
  auto in = detail::open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return sim_config_from_json(detail::parse_json(ss.str(), path));
}

// ---- checkpoints ----

struct TrainMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double final_loss = 0.0;
};

inline void save_scorer(const std::string& path, const ScorerModel& m,
                        const TrainMeta& meta,
                        const std::string& config_hash = "") {
  ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["d_q"] = m.d_q;
  j["d_v"] = m.d_v;
  j["d_h"] = m.d_h;
  j["fusion_weights"] = m.fusion_weights;  // row-major d_h x (d_q + d_v)
  j["w"] = m.head_weights;
  j["b"] = m.head_bias;
  j["train_meta"] = {{"seed", meta.seed},
                     {"epochs", meta.epochs},
                     {"final_loss", meta.final_loss}};
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  auto out = detail::open_out(path);
  out << j.dump(2) << "\n";
}

inline ScorerModel load_scorer(const std::string& path) {
  auto in = detail::open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  ordered_json j = detail::parse_json(ss.str(), path);
  if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw IoError("unsupported scorer checkpoint version in '" + path + "'");
  }
  ScorerModel m;
  m.d_q = j.at("d_q").get<int>();
  m.d_v = j.at("d_v").get<int>();
  m.d_h = j.at("d_h").get<int>();
  m.fusion_weights = j.at("fusion_weights").get<std::vector<double>>();
  m.head_weights = j.at("w").get<std::vector<double>>();
  m.head_bias = j.at("b").get<double>();
  if (m.fusion_weights.size() !=
          static_cast<std::size_t>(m.d_h) * (m.d_q + m.d_v) ||
      m.head_weights.size() != static_cast<std::size_t>(m.d_h)) {
    throw IoError("inconsistent scorer checkpoint dims in '" + path + "'");
  }
  return m;
}

inline void save_policy(const std::string& path, const ListPolicy& p,
                        const TrainMeta& meta,
                        const std::string& config_hash = "") {
  ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["utility_weights"] = p.utility_weights;
  j["tau"] = p.tau;
  j["train_meta"] = {{"seed", meta.seed},
                     {"epochs", meta.epochs},
                     {"final_loss", meta.final_loss}};
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  auto out = detail::open_out(path);
  out << j.dump(2) << "\n";
}

inline ListPolicy load_policy(const std::string& path) {
  auto in = detail::open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  ordered_json j = detail::parse_json(ss.str(), path);
  if (j.at("format_version").get<int>() != kCheckpointFormatVersion) {
    throw IoError("unsupported policy checkpoint version in '" + path + "'");
  }
  ListPolicy p;
  p.utility_weights = j.at("utility_weights").get<std::vector<double>>();
  p.tau = j.at("tau").get<double>();
  p.validate();
  return p;
}

// ---- ranked lists and scores ----

inline void write_lists_jsonl(const std::string& path,
                              const std::vector<RankedList>& lists,
                              const std::vector<std::optional<double>>& logprobs) {
  if (lists.size() != logprobs.size()) {
    throw ValidationError("write_lists_jsonl: logprobs not parallel to lists");
  }
  auto out = detail::open_out(path);
  for (std::size_t i = 0; i < lists.size(); ++i) {
    ordered_json j;
    j["query_id"] = lists[i].query_id;
    j["items"] = lists[i].items;
    if (logprobs[i].has_value()) {
      j["logprob"] = *logprobs[i];
    } else {
      j["logprob"] = nullptr;
    }
    out << j.dump() << "\n";
  }
}

inline std::vector<RankedList> read_lists_jsonl(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<RankedList> lists;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j =
        detail::parse_json(line, path + ":" + std::to_string(lineno));
    RankedList l;
    l.query_id = j.at("query_id").get<std::string>();
    l.items = j.at("items").get<std::vector<std::string>>();
    lists.push_back(std::move(l));
  }
  if (lists.empty()) throw IoError("no lists in '" + path + "'");
  return lists;
}

struct ScoreRow {
  std::string query_id;
  std::string cand_id;
  double score = 0.0;
};

inline void write_scores_jsonl(const std::string& path,
                               const std::vector<ScoreRow>& rows) {
  auto out = detail::open_out(path);
  for (const auto& r : rows) {
    ordered_json j = {{"query_id", r.query_id},
                      {"cand_id", r.cand_id},
                      {"score", r.score}};
    out << j.dump() << "\n";
  }
}

struct RewardRow {
  std::string query_id;
  double total = 0.0;
  double behavioral = 0.0;
  double ndcg = 0.0;
  bool ndcg_vacuous = false;
};

// Per-list reward decomposition, one object per ranked list.
inline void write_rewards_jsonl(const std::string& path,
                                const std::vector<RewardRow>& rows) {
  auto out = detail::open_out(path);
  for (const auto& r : rows) {
    ordered_json j = {{"query_id", r.query_id},
                      {"reward", r.total},
                      {"behavioral", r.behavioral},
                      {"ndcg", r.ndcg},
                      {"ndcg_vacuous", r.ndcg_vacuous}};
    out << j.dump() << "\n";
  }
}

// ---- CSV ----

// A CSV with an optional provenance comment line, a header, and rows of
// preformatted cells.
inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows,
                      const std::string& config_hash = "") {
  auto out = detail::open_out(path);
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i == 0 ? "" : ",") << header[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i == 0 ? "" : ",") << row[i];
    }
    out << "\n";
  }
}

inline std::string cell(double v) { return detail::format_double(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace reranklab
