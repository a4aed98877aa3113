// Copyright 2026 the reranklab authors
// SPDX-License-Identifier: Apache-2.0
//
// reranklab: generate a biased synthetic search corpus, train the
// experience scorer and the list policy (behavior cloning, then
// reward-aligned fine-tuning), rerank, and evaluate.
//
// Subcommands: simulate, train, rerank, evaluate, gsb. Every run is fully
// determined by the config document plus --seed; reports embed the config
// hash. Exit codes: 0 ok, 2 validation, 3 io, 4 missing dependency,
// 5 training failure, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reranklab/config.hpp"
#include "reranklab/grpo.hpp"
#include "reranklab/io.hpp"
#include "reranklab/metrics.hpp"
#include "reranklab/policy.hpp"
#include "reranklab/scorer.hpp"
#include "reranklab/simulator.hpp"

namespace {

using namespace reranklab;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

PipelineConfig effective_config(const CommonOpts& opts) {
  std::string path = opts.config_path;
  if (path.empty()) {
    if (auto env = env_override("CONFIG")) path = *env;
  }
  PipelineConfig cfg;
  if (!path.empty()) cfg = load_pipeline_config(path);
  if (opts.seed_set) {
    apply_seed_override(cfg, opts.seed);
  } else if (auto env = env_override("SEED")) {
    apply_seed_override(cfg, std::stoull(*env));
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "JSON config with per-module sections");
  cmd->add_option("--seed", opts.seed, "override every module seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

std::string require_file(const std::string& path, const std::string& what) {
  if (path.empty() || !std::filesystem::exists(path)) {
    throw DependencyError("missing " + what + " checkpoint '" + path + "'");
  }
  return path;
}

std::string trace_path_for(const std::string& checkpoint_path) {
  std::filesystem::path p(checkpoint_path);
  p.replace_extension();
  return p.string() + "_trace.csv";
}

struct Corpus {
  std::vector<Session> sessions;
  SimConfig sim;
};

Corpus load_corpus(const std::string& dir) {
  Corpus c;
  c.sessions = read_sessions_jsonl(dir + "/sessions.jsonl");
  c.sim = read_sim_config(dir + "/simconfig.json");
  return c;
}

// ---- rerank methods ----

RankedList decode_for_method(const std::string& method, const Session& s,
                             const SimConfig& sim,
                             const ScorerModel* scorer,
                             const ListPolicy* policy, int k) {
  int len = (k <= 0) ? static_cast<int>(s.candidates.size())
                     : std::min<int>(k, static_cast<int>(s.candidates.size()));
  RankedList list;
  list.query_id = s.query.query_id;
  if (method == "exposure") {
    auto order = exposure_order(s);
    list.items.assign(order.begin(), order.begin() + len);
  } else if (method == "ctr") {
    auto order = stable_sort_desc(s.candidate_ids(), historical_ctr(s, sim));
    list.items.assign(order.begin(), order.begin() + len);
  } else if (method == "scorer") {
    auto order = ideal_order(s, *scorer);
    list.items.assign(order.begin(), order.begin() + len);
  } else if (method == "policy" || method == "base" || method == "stage1" ||
             method == "stage12") {
    list = greedy_decode(*policy, s.query, s.candidates, len);
    list.scores.clear();
  } else {
    throw ValidationError("unknown rerank method '" + method + "'");
  }
  return list;
}

// ---- subcommand bodies ----

int cmd_simulate(const CommonOpts& opts, const std::string& out_dir) {
  PipelineConfig cfg = effective_config(opts);
  std::string hash = config_hash(cfg);
  auto sessions = generate_corpus(cfg.simulator);
  auto pairs = generate_pairs(sessions, cfg.simulator);

  std::filesystem::create_directories(out_dir);
  write_sessions_jsonl(out_dir + "/sessions.jsonl", sessions);
  write_pairs_jsonl(out_dir + "/pairs.jsonl", pairs);
  write_sim_config(out_dir + "/simconfig.json", cfg.simulator, hash);

  double n_q = static_cast<double>(sessions.size());
  std::size_t n_cand = 0;
  int long_tail = 0;
  for (const auto& s : sessions) {
    n_cand += s.candidates.size();
    if (is_long_tail(s.query, cfg.simulator.long_tail_pv)) ++long_tail;
  }
  std::printf("corpus written to %s (config_hash=%s)\n", out_dir.c_str(),
              hash.c_str());
  std::printf("%-10s %8s %8s %14s\n", "dataset", "rows", "queries",
              "avg_per_query");
  std::printf("%-10s %8zu %8zu %14.2f\n", "sessions", n_cand, sessions.size(),
              static_cast<double>(n_cand) / n_q);
  std::printf("%-10s %8zu %8zu %14.2f\n", "pairs", pairs.size(),
              sessions.size(), static_cast<double>(pairs.size()) / n_q);
  std::printf("long-tail queries: %d/%zu (%.1f%%)\n", long_tail,
              sessions.size(), 100.0 * long_tail / n_q);
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& stage,
              const std::string& corpus_dir, const std::string& out_path,
              const std::string& scorer_path, const std::string& policy_path,
              const std::string& targets) {
  PipelineConfig cfg = effective_config(opts);
  std::string hash = config_hash(cfg);
  Corpus corpus = load_corpus(corpus_dir);

  if (stage == "scorer") {
    auto pairs = read_pairs_jsonl(corpus_dir + "/pairs.jsonl");
    ScorerTrainReport report;
    ScorerModel model =
        train_scorer(pairs, corpus.sessions, cfg.scorer, &report);
    save_scorer(out_path, model,
                {cfg.scorer.seed, cfg.scorer.epochs, report.final_loss}, hash);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t e = 0; e < report.epoch_losses.size(); ++e) {
      rows.push_back({cell(e), cell(report.epoch_losses[e])});
    }
    write_csv(trace_path_for(out_path), {"epoch", "train_loss"}, rows, hash);
    std::printf("scorer checkpoint: %s\n", out_path.c_str());
    std::printf("final train loss: %.6f\n", report.final_loss);
    if (report.holdout_accuracy.has_value()) {
      std::printf("holdout pair accuracy: %.4f (n=%zu)\n",
                  *report.holdout_accuracy, report.n_holdout);
    } else {
      std::printf("holdout pair accuracy: n/a (empty holdout)\n");
    }
    return 0;
  }

  if (stage == "pretrain") {
    ScorerModel scorer = load_scorer(require_file(scorer_path, "scorer"));
    ListPolicy init = ListPolicy::init(corpus.sim.d_q, corpus.sim.d_v);
    PretrainReport report;
    ListPolicy policy;
    if (targets == "exposure") {
      // Behavior cloning of the historical page order.
      std::vector<std::vector<std::string>> seqs;
      seqs.reserve(corpus.sessions.size());
      for (const auto& s : corpus.sessions) seqs.push_back(exposure_order(s));
      policy = pretrain_on_targets(init, corpus.sessions, seqs, cfg.policy,
                                   &report);
    } else if (targets == "reconstructed") {
      policy = pretrain(init, corpus.sessions, scorer, cfg.policy, &report);
    } else {
      throw ValidationError("unknown --targets '" + targets + "'");
    }
    save_policy(out_path, policy,
                {cfg.policy.seed, cfg.policy.epochs, report.final_nll}, hash);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t e = 0; e < report.epoch_nll.size(); ++e) {
      rows.push_back({cell(e), cell(report.epoch_nll[e])});
    }
    write_csv(trace_path_for(out_path), {"epoch", "nll"}, rows, hash);
    std::printf("policy checkpoint: %s (targets=%s)\n", out_path.c_str(),
                targets.c_str());
    std::printf("final mean NLL: %.6f\n", report.final_nll);
    return 0;
  }

  if (stage == "grpo") {
    ScorerModel scorer = load_scorer(require_file(scorer_path, "scorer"));
    ListPolicy policy = load_policy(require_file(policy_path, "policy"));
    std::vector<GrpoTraceRow> trace;
    ListPolicy tuned = train_grpo(policy, corpus.sessions, scorer, cfg.reward,
                                  cfg.grpo, corpus.sim, &trace);
    save_policy(out_path, tuned,
                {cfg.grpo.seed, cfg.grpo.steps,
                 trace.empty() ? 0.0 : trace.back().mean_reward},
                hash);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : trace) {
      rows.push_back({cell(r.step), cell(r.mean_reward), cell(r.mean_ndcg),
                      cell(r.mean_behavioral)});
    }
    write_csv(trace_path_for(out_path),
              {"step", "mean_reward", "mean_ndcg", "mean_behavioral"}, rows,
              hash);
    std::printf("policy checkpoint: %s\n", out_path.c_str());
    if (!trace.empty()) {
      std::printf("mean reward: first step %.4f, last step %.4f\n",
                  trace.front().mean_reward, trace.back().mean_reward);
    }
    return 0;
  }

  throw ValidationError("unknown --stage '" + stage + "'");
}

int cmd_rerank(const CommonOpts& opts, const std::string& corpus_dir,
               const std::string& method, const std::string& scorer_path,
               const std::string& policy_path, int k,
               const std::string& out_path, const std::string& scores_out,
               const std::string& rewards_out) {
  PipelineConfig cfg = effective_config(opts);
  Corpus corpus = load_corpus(corpus_dir);

  std::optional<ScorerModel> scorer;
  if (method == "scorer" || !scores_out.empty() || !rewards_out.empty()) {
    scorer = load_scorer(require_file(scorer_path, "scorer"));
  }
  std::optional<ListPolicy> policy;
  if (method == "policy") {
    policy = load_policy(require_file(policy_path, "policy"));
  }

  std::vector<RankedList> lists;
  std::vector<std::optional<double>> logprobs;
  std::vector<ScoreRow> score_rows;
  std::vector<RewardRow> reward_rows;
  for (const auto& s : corpus.sessions) {
    RankedList list = decode_for_method(
        method, s, corpus.sim, scorer ? &*scorer : nullptr,
        policy ? &*policy : nullptr, k);
    if (policy) {
      logprobs.push_back(
          list_logprob(*policy, s.query, s.candidates, list.items));
    } else {
      logprobs.push_back(std::nullopt);
    }
    if (scorer && !scores_out.empty()) {
      for (const auto& [id, sc] : score_session(*scorer, s)) {
        score_rows.push_back({s.query.query_id, id, sc});
      }
    }
    if (scorer && !rewards_out.empty()) {
      RewardBreakdown r = reward(list, s, *scorer, cfg.reward, corpus.sim);
      reward_rows.push_back({s.query.query_id, r.total, r.behavioral, r.ndcg,
                             r.ndcg_vacuous});
    }
    lists.push_back(std::move(list));
  }
  write_lists_jsonl(out_path, lists, logprobs);
  if (!scores_out.empty()) write_scores_jsonl(scores_out, score_rows);
  if (!rewards_out.empty()) write_rewards_jsonl(rewards_out, reward_rows);
  std::printf("wrote %zu lists to %s (method=%s)\n", lists.size(),
              out_path.c_str(), method.c_str());
  return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& corpus_dir,
                 const std::string& scorer_path, const std::string& base_path,
                 const std::string& stage1_path,
                 const std::string& stage12_path, std::vector<int> ks,
                 const std::string& out_path) {
  PipelineConfig cfg = effective_config(opts);
  std::string hash = config_hash(cfg);
  Corpus corpus = load_corpus(corpus_dir);
  if (ks.empty()) ks = cfg.metrics.ks;

  ScorerModel scorer = load_scorer(require_file(scorer_path, "scorer"));
  ListPolicy base = load_policy(require_file(base_path, "base policy"));
  ListPolicy stage1 = load_policy(require_file(stage1_path, "stage1 policy"));
  ListPolicy stage12 =
      load_policy(require_file(stage12_path, "stage12 policy"));

  const std::vector<std::string> methods{"exposure", "ctr", "scorer",
                                         "base", "stage1", "stage12"};
  const std::vector<LabelKind> kinds{LabelKind::kClick, LabelKind::kLong,
                                     LabelKind::kDur, LabelKind::kHuman};

  std::vector<std::vector<std::string>> rows;
  for (const auto& method : methods) {
    const ListPolicy* policy = nullptr;
    if (method == "base") policy = &base;
    if (method == "stage1") policy = &stage1;
    if (method == "stage12") policy = &stage12;

    std::vector<RankedList> lists;
    lists.reserve(corpus.sessions.size());
    for (const auto& s : corpus.sessions) {
      lists.push_back(
          decode_for_method(method, s, corpus.sim, &scorer, policy, 0));
    }
    for (LabelKind kind : kinds) {
      for (int k : ks) {
        double total = 0.0;
        for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
          ScoreMap labels =
              extract_labels(corpus.sessions[i], kind,
                             cfg.metrics.long_play_threshold);
          total += ndcg_labels(lists[i].items, labels, k).value;
        }
        rows.push_back({method, "ndcg", label_kind_name(kind), cell(k),
                        cell(total / static_cast<double>(lists.size())),
                        cell(lists.size())});
      }
    }
    double behavioral = 0.0;
    for (std::size_t i = 0; i < corpus.sessions.size(); ++i) {
      behavioral +=
          behavioral_reward(lists[i], corpus.sessions[i], corpus.sim);
    }
    rows.push_back({method, "behavioral", "-", cell(0),
                    cell(behavioral / static_cast<double>(lists.size())),
                    cell(lists.size())});
  }
  write_csv(out_path, {"method", "metric", "label_kind", "k", "value",
                       "n_queries"},
            rows, hash);
  std::printf("evaluation report: %s (%zu rows, %zu queries)\n",
              out_path.c_str(), rows.size(), corpus.sessions.size());
  return 0;
}

int cmd_gsb(const CommonOpts& opts, const std::string& corpus_dir,
            const std::string& path_a, const std::string& path_b,
            const std::string& label, double margin_flag,
            const std::string& out_path) {
  PipelineConfig cfg = effective_config(opts);
  std::string hash = config_hash(cfg);
  Corpus corpus = load_corpus(corpus_dir);
  double margin = margin_flag >= 0.0 ? margin_flag : cfg.metrics.judge_margin;

  auto lists_a = read_lists_jsonl(path_a);
  auto lists_b = read_lists_jsonl(path_b);
  std::map<std::string, const RankedList*> by_query_a;
  std::map<std::string, const RankedList*> by_query_b;
  for (const auto& l : lists_a) by_query_a[l.query_id] = &l;
  for (const auto& l : lists_b) by_query_b[l.query_id] = &l;

  std::vector<std::string> missing;
  for (const auto& [qid, l] : by_query_a) {
    if (by_query_b.count(qid) == 0) missing.push_back(qid + " (only in a)");
  }
  for (const auto& [qid, l] : by_query_b) {
    if (by_query_a.count(qid) == 0) missing.push_back(qid + " (only in b)");
  }
  if (!missing.empty()) {
    std::string msg = "query sets differ:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }

  CorpusIndex index(corpus.sessions);
  int good = 0;
  int same = 0;
  int bad = 0;
  for (const auto& [qid, la] : by_query_a) {
    const Session& s = index.session(qid);
    switch (gsb_compare(*la, *by_query_b.at(qid), s, margin)) {
      case Gsb::kGood: ++good; break;
      case Gsb::kSame: ++same; break;
      case Gsb::kBad: ++bad; break;
    }
  }
  double adv = gsb_adv(good, same, bad);
  char adv_text[32];
  std::snprintf(adv_text, sizeof(adv_text), "%.2f", adv);
  write_csv(out_path, {"method", "good", "same", "bad", "adv_percent"},
            {{label, cell(good), cell(same), cell(bad), adv_text}}, hash);
  std::printf("%s: good=%d same=%d bad=%d adv=%+.2f%%\n", label.c_str(), good,
              same, bad, adv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"experience-score driven two-stage reranking lab"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out;
  std::string corpus_dir;
  std::string stage;
  std::string scorer_path;
  std::string policy_path;
  std::string targets = "reconstructed";
  std::string method = "policy";
  std::string list_a;
  std::string list_b;
  std::string gsb_label = "a_vs_b";
  double margin = -1.0;
  int k = 0;
  std::vector<int> ks;
  std::string base_path;
  std::string stage1_path;
  std::string stage12_path;
  std::string scores_out;
  std::string rewards_out;

  auto* simulate = app.add_subcommand("simulate", "generate a corpus");
  add_common(simulate, opts);
  simulate->add_option("--out", out, "output directory");

  auto* train = app.add_subcommand("train", "train one pipeline stage");
  add_common(train, opts);
  train->add_option("--stage", stage, "scorer | pretrain | grpo")->required();
  train->add_option("--corpus", corpus_dir, "corpus directory")->required();
  train->add_option("--out", out, "checkpoint output path");
  train->add_option("--scorer", scorer_path, "scorer checkpoint (pretrain/grpo)");
  train->add_option("--policy", policy_path, "policy checkpoint to start grpo from");
  train->add_option("--targets", targets,
                    "pretrain targets: reconstructed | exposure");

  auto* rerank = app.add_subcommand("rerank", "decode ranked lists");
  add_common(rerank, opts);
  rerank->add_option("--corpus", corpus_dir, "corpus directory")->required();
  rerank->add_option("--method", method,
                     "exposure | ctr | scorer | policy");
  rerank->add_option("--scorer", scorer_path, "scorer checkpoint");
  rerank->add_option("--policy", policy_path, "policy checkpoint");
  rerank->add_option("--k", k, "list length (0 = all candidates)");
  rerank->add_option("--out", out, "output lists jsonl");
  rerank->add_option("--scores-out", scores_out,
                     "also dump per-candidate scores jsonl");
  rerank->add_option("--rewards-out", rewards_out,
                     "also dump per-list reward decomposition jsonl");

  auto* evaluate = app.add_subcommand("evaluate", "offline metric report");
  add_common(evaluate, opts);
  evaluate->add_option("--corpus", corpus_dir, "corpus directory")->required();
  evaluate->add_option("--scorer", scorer_path, "scorer checkpoint")
      ->required();
  evaluate->add_option("--policy-base", base_path, "base policy checkpoint")
      ->required();
  evaluate->add_option("--policy-stage1", stage1_path,
                       "stage1 policy checkpoint")
      ->required();
  evaluate->add_option("--policy-stage12", stage12_path,
                       "stage12 policy checkpoint")
      ->required();
  evaluate->add_option("--k", ks, "ndcg cutoffs (default from config)");
  evaluate->add_option("--out", out, "report csv path");

  auto* gsb = app.add_subcommand("gsb", "side-by-side judgment of two runs");
  add_common(gsb, opts);
  gsb->add_option("--corpus", corpus_dir, "corpus directory")->required();
  gsb->add_option("--a", list_a, "lists jsonl for the candidate")->required();
  gsb->add_option("--b", list_b, "lists jsonl for the baseline")->required();
  gsb->add_option("--label", gsb_label, "method label in the report");
  gsb->add_option("--margin", margin, "judge margin (default from config)");
  gsb->add_option("--out", out, "report csv path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (auto env = env_override("OUT"); env && out.empty()) out = *env;
    if (out.empty()) {
      throw ValidationError("no output path: pass --out or set RERANKLAB_OUT");
    }
    if (simulate->parsed()) return cmd_simulate(opts, out);
    if (train->parsed()) {
      return cmd_train(opts, stage, corpus_dir, out, scorer_path, policy_path,
                       targets);
    }
    if (rerank->parsed()) {
      return cmd_rerank(opts, corpus_dir, method, scorer_path, policy_path, k,
                        out, scores_out, rewards_out);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(opts, corpus_dir, scorer_path, base_path,
                          stage1_path, stage12_path, ks, out);
    }
    if (gsb->parsed()) {
      return cmd_gsb(opts, corpus_dir, list_a, list_b, gsb_label, margin, out);
    }
  } catch (const DependencyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MissingScoreError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
