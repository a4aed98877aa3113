// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0

#include "reranklab/io.hpp"

#include <filesystem>

#include <catch2/catch_amalgamated.hpp>

#include "reranklab/config.hpp"

using namespace reranklab;

namespace {

std::string test_dir() {
  auto dir = std::filesystem::temp_directory_path() / "reranklab_io_test";
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string path_in(const std::string& name) {
  return test_dir() + "/" + name;
}

}  // namespace

TEST_CASE("sessions survive a jsonl round trip byte for byte") {
  SimConfig cfg;
  cfg.n_queries = 6;
  cfg.candidates_per_query = 4;
  auto sessions = generate_corpus(cfg);
  // One candidate without ground truth exercises the optional field.
  sessions[0].candidates[1].sim_truth.reset();
  sessions[0].clicked.erase(sessions[0].candidates[1].cand_id);
  sessions[0].exposed_unclicked.erase(sessions[0].candidates[1].cand_id);

  std::string path = path_in("sessions.jsonl");
  write_sessions_jsonl(path, sessions);
  auto loaded = read_sessions_jsonl(path);
  REQUIRE(loaded.size() == sessions.size());
  CHECK_FALSE(loaded[0].candidates[1].sim_truth.has_value());
  CHECK(loaded[2].query.query_id == sessions[2].query.query_id);
  CHECK(loaded[2].clicked == sessions[2].clicked);
  CHECK(loaded[2].candidates[0].features ==
        sessions[2].candidates[0].features);

  std::string rewritten = path_in("sessions2.jsonl");
  write_sessions_jsonl(rewritten, loaded);
  CHECK(read_file_bytes(path) == read_file_bytes(rewritten));
}

TEST_CASE("session lines carry snake_case fields with optional sim_truth") {
  SimConfig cfg;
  cfg.n_queries = 1;
  cfg.candidates_per_query = 2;
  auto sessions = generate_corpus(cfg);
  ordered_json j = session_to_json(sessions[0]);
  CHECK(j.contains("query"));
  CHECK(j["query"].contains("query_id"));
  CHECK(j["query"].contains("pv_count"));
  CHECK(j.contains("candidates"));
  CHECK(j["candidates"][0].contains("cand_id"));
  CHECK(j["candidates"][0].contains("sim_truth"));
  CHECK(j["candidates"][0]["sim_truth"].contains("true_quality"));
  CHECK(j.contains("clicked"));
  CHECK(j.contains("exposed_unclicked"));
}

TEST_CASE("corrupt session lines are rejected with context") {
  std::string path = path_in("bad.jsonl");
  {
    auto out = std::ofstream(path);
    out << "{\"query\": not json}\n";
  }
  CHECK_THROWS_AS(read_sessions_jsonl(path), IoError);
  CHECK_THROWS_AS(read_sessions_jsonl(path_in("missing.jsonl")), IoError);
}

TEST_CASE("preference pairs round trip") {
  std::vector<PreferencePair> pairs{{"q1", "a", "b", 0.25},
                                    {"q2", "x", "y", 0.0}};
  std::string path = path_in("pairs.jsonl");
  write_pairs_jsonl(path, pairs);
  auto loaded = read_pairs_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].query_id == "q1");
  CHECK(loaded[0].winner_id == "a");
  CHECK(loaded[0].loser_id == "b");
  CHECK(loaded[0].margin == 0.25);
}

TEST_CASE("sim config round trips and validates on read") {
  SimConfig cfg;
  cfg.n_queries = 123;
  cfg.seed = 999;
  cfg.position_bias_eta = 1.5;
  std::string path = path_in("simconfig.json");
  write_sim_config(path, cfg, "deadbeef");
  SimConfig loaded = read_sim_config(path);
  CHECK(loaded.n_queries == 123);
  CHECK(loaded.seed == 999);
  CHECK(loaded.position_bias_eta == 1.5);

  {
    auto out = std::ofstream(path);
    out << "{\"n_queries\": -5}\n";
  }
  CHECK_THROWS_AS(read_sim_config(path), ValidationError);
}

TEST_CASE("scorer checkpoints carry the declared schema and round trip") {
  ScorerModel m = ScorerModel::init(3, 5, 4, 42);
  m.head_bias = -0.125;
  TrainMeta meta{42, 17, 0.5};
  std::string path = path_in("scorer.json");
  save_scorer(path, m, meta, "cafe0123");

  ordered_json j = ordered_json::parse(read_file_bytes(path));
  CHECK(j.at("format_version") == 1);
  CHECK(j.at("d_q") == 3);
  CHECK(j.at("d_v") == 5);
  CHECK(j.at("d_h") == 4);
  CHECK(j.at("w").size() == 4);
  CHECK(j.at("b") == -0.125);
  CHECK(j.at("fusion_weights").size() == 4 * 8);
  CHECK(j.at("train_meta").at("seed") == 42);
  CHECK(j.at("train_meta").at("epochs") == 17);
  CHECK(j.at("train_meta").at("final_loss") == 0.5);
  CHECK(j.at("config_hash") == "cafe0123");

  ScorerModel loaded = load_scorer(path);
  CHECK(loaded.fusion_weights == m.fusion_weights);
  CHECK(loaded.head_weights == m.head_weights);
  CHECK(loaded.head_bias == m.head_bias);
}

TEST_CASE("policy checkpoints carry the declared schema and round trip") {
  ListPolicy p;
  p.utility_weights = {0.5, -1.25, 3.0};
  p.tau = 0.75;
  TrainMeta meta{7, 100, 1.25};
  std::string path = path_in("policy.json");
  save_policy(path, p, meta);

  ordered_json j = ordered_json::parse(read_file_bytes(path));
  CHECK(j.at("format_version") == 1);
  CHECK(j.at("utility_weights").size() == 3);
  CHECK(j.at("tau") == 0.75);
  CHECK(j.at("train_meta").at("epochs") == 100);

  ListPolicy loaded = load_policy(path);
  CHECK(loaded.utility_weights == p.utility_weights);
  CHECK(loaded.tau == p.tau);
}

TEST_CASE("checkpoint loaders reject inconsistent documents") {
  std::string path = path_in("broken_scorer.json");
  {
    auto out = std::ofstream(path);
    out << R"({"format_version": 1, "d_q": 2, "d_v": 2, "d_h": 2,
               "fusion_weights": [0.0], "w": [0.0, 0.0], "b": 0.0,
               "train_meta": {"seed": 0, "epochs": 0, "final_loss": 0}})";
  }
  CHECK_THROWS_AS(load_scorer(path), IoError);

  std::string vpath = path_in("old_version.json");
  {
    auto out = std::ofstream(vpath);
    out << R"({"format_version": 99, "utility_weights": [0.0], "tau": 1.0,
               "train_meta": {}})";
  }
  CHECK_THROWS_AS(load_policy(vpath), IoError);
}

TEST_CASE("ranked lists round trip with nullable logprobs") {
  std::vector<RankedList> lists(2);
  lists[0].query_id = "q1";
  lists[0].items = {"a", "b"};
  lists[1].query_id = "q2";
  lists[1].items = {"x"};
  std::string path = path_in("lists.jsonl");
  write_lists_jsonl(path, lists, {-0.5, std::nullopt});
  auto loaded = read_lists_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].items == lists[0].items);
  CHECK(loaded[1].query_id == "q2");

  auto lines = read_file_bytes(path);
  CHECK(lines.find("\"logprob\":-0.5") != std::string::npos);
  CHECK(lines.find("\"logprob\":null") != std::string::npos);
}

TEST_CASE("csv writer emits a provenance comment, header, and rows") {
  std::string path = path_in("report.csv");
  write_csv(path, {"metric", "k", "value"},
            {{"ndcg", "5", cell(0.25)}, {"auc", "1", cell(1.0)}}, "beef");
  std::string text = read_file_bytes(path);
  CHECK(text == "# config_hash=beef\nmetric,k,value\nndcg,5,0.25\nauc,1,1\n");
}

TEST_CASE("pipeline config parses sections and applies the seed override") {
  ordered_json j = ordered_json::parse(R"({
    "simulator": {"n_queries": 50, "seed": 3},
    "scorer": {"epochs": 7},
    "grpo": {"steps": 11}
  })");
  PipelineConfig cfg = pipeline_config_from_json(j);
  CHECK(cfg.simulator.n_queries == 50);
  CHECK(cfg.simulator.seed == 3);
  CHECK(cfg.scorer.epochs == 7);
  CHECK(cfg.grpo.steps == 11);
  CHECK(cfg.policy.epochs == PretrainConfig().epochs);  // defaulted

  apply_seed_override(cfg, 1234);
  CHECK(cfg.simulator.seed == 1234);
  CHECK(cfg.scorer.seed == 1234);
  CHECK(cfg.policy.seed == 1234);
  CHECK(cfg.grpo.seed == 1234);
}

TEST_CASE("config hash is stable and sensitive") {
  PipelineConfig a;
  PipelineConfig b;
  CHECK(config_hash(a) == config_hash(b));
  b.simulator.seed += 1;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("default pipeline config round trips through json") {
  PipelineConfig cfg;
  cfg.simulator.n_queries = 77;
  cfg.metrics.ks = {1, 3};
  PipelineConfig loaded =
      pipeline_config_from_json(pipeline_config_to_json(cfg));
  CHECK(loaded.simulator.n_queries == 77);
  CHECK(loaded.metrics.ks == std::vector<int>{1, 3});
  CHECK(config_hash(loaded) == config_hash(cfg));
}
