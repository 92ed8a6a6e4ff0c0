// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0
//
// trojattn: corpus generation, zoo training, attention forensics, and
// Trojan detection from one binary. Every subcommand writes its fully
// resolved configuration alongside its outputs.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trojattn/analysis.hpp"
#include "trojattn/corpus.hpp"
#include "trojattn/detector.hpp"
#include "trojattn/io.hpp"
#include "trojattn/model.hpp"
#include "trojattn/training.hpp"

namespace fs = std::filesystem;
using namespace trojattn;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v) {
  return v ? fmt(*v) : "";
}

void write_config(const std::string& dir, const json& cfg) {
  write_text_file(dir + "/config.json", cfg.dump(2) + "\n");
}

Lexicon load_lexicon_or_builtin(const std::string& path) {
  return path.empty() ? builtin_lexicon() : load_lexicon(path);
}

std::vector<const ModelBundle*> to_pointers(
    const std::vector<ModelBundle>& v) {
  std::vector<const ModelBundle*> out;
  out.reserve(v.size());
  for (const auto& m : v) out.push_back(&m);
  return out;
}

std::vector<std::string> load_token_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open perturbation file " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty() && line[0] != '#') tokens.push_back(line);
  }
  if (tokens.empty())
    throw std::runtime_error("perturbation file " + path + " has no tokens");
  return tokens;
}

// Shared analysis/detection threshold flags.
struct ThresholdFlags {
  double alpha_sem = 0.6, alpha_sep = 0.6, alpha_non = 0.5;
  double beta_frac_sem = 5.0 / 80.0;
  double beta_frac_sep = 36.0 / 80.0;
  double beta_frac_non = 5.0 / 80.0;
  // Drift-side sentence thresholds; negative means "same as the clean side".
  double drift_beta_frac_sem = -1.0;
  double drift_beta_frac_sep = -1.0;
  double drift_beta_frac_non = -1.0;
  std::size_t attr_steps = 32;
  std::uint64_t probe_seed = 2024;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--alpha-semantic", alpha_sem,
                    "focus ratio threshold, semantic heads");
    cmd->add_option("--alpha-separator", alpha_sep,
                    "focus ratio threshold, separator heads");
    cmd->add_option("--alpha-nonsem", alpha_non,
                    "focus ratio threshold, non-semantic heads");
    cmd->add_option("--beta-frac-semantic", beta_frac_sem,
                    "focus sentence threshold as a dev-set fraction");
    cmd->add_option("--beta-frac-separator", beta_frac_sep,
                    "focus sentence threshold as a dev-set fraction");
    cmd->add_option("--beta-frac-nonsem", beta_frac_non,
                    "focus sentence threshold as a dev-set fraction");
    cmd->add_option("--drift-beta-frac-semantic", drift_beta_frac_sem,
                    "drift-side sentence threshold (default: clean side)");
    cmd->add_option("--drift-beta-frac-separator", drift_beta_frac_sep,
                    "drift-side sentence threshold (default: clean side)");
    cmd->add_option("--drift-beta-frac-nonsem", drift_beta_frac_non,
                    "drift-side sentence threshold (default: clean side)");
    cmd->add_option("--attr-steps", attr_steps,
                    "integration steps for attribution");
    cmd->add_option("--probe-seed", probe_seed,
                    "seed for clean-model neutral probes");
  }

  TypedFocusParams typed(std::size_t dev_size) const {
    TypedFocusParams p;
    p.semantic = {alpha_sem, scaled_beta(beta_frac_sem, dev_size)};
    p.separator = {alpha_sep, scaled_beta(beta_frac_sep, dev_size)};
    p.non_semantic = {alpha_non, scaled_beta(beta_frac_non, dev_size)};
    return p;
  }

  TypedFocusParams typed_drift(std::size_t dev_size) const {
    auto pick = [](double drift, double clean) {
      return drift < 0.0 ? clean : drift;
    };
    TypedFocusParams p;
    p.semantic = {alpha_sem,
                  scaled_beta(pick(drift_beta_frac_sem, beta_frac_sem), dev_size)};
    p.separator = {alpha_sep,
                   scaled_beta(pick(drift_beta_frac_sep, beta_frac_sep), dev_size)};
    p.non_semantic = {alpha_non,
                      scaled_beta(pick(drift_beta_frac_non, beta_frac_non), dev_size)};
    return p;
  }

  json to_json() const {
    return {{"alpha_semantic", alpha_sem},
            {"alpha_separator", alpha_sep},
            {"alpha_nonsem", alpha_non},
            {"beta_frac_semantic", beta_frac_sem},
            {"beta_frac_separator", beta_frac_sep},
            {"beta_frac_nonsem", beta_frac_non},
            {"drift_beta_frac_semantic", drift_beta_frac_sem},
            {"drift_beta_frac_separator", drift_beta_frac_sep},
            {"drift_beta_frac_nonsem", drift_beta_frac_non},
            {"attr_steps", attr_steps},
            {"probe_seed", probe_seed}};
  }
};

struct LoadedZoo {
  ZooManifest manifest;
  std::vector<ModelBundle> bundles;          // only included entries
  std::vector<std::size_t> manifest_index;   // bundle -> manifest slot
};

LoadedZoo load_zoo(const std::string& manifest_path) {
  LoadedZoo zoo;
  zoo.manifest = load_manifest(manifest_path);
  const std::string dir = fs::path(manifest_path).parent_path().string();
  for (std::size_t i = 0; i < zoo.manifest.models.size(); ++i)
    if (!zoo.manifest.models[i].excluded) zoo.manifest_index.push_back(i);
  zoo.bundles.resize(zoo.manifest_index.size());
  parallel_for(zoo.manifest_index.size(), [&](std::size_t k) {
    const ZooEntry& e = zoo.manifest.models[zoo.manifest_index[k]];
    zoo.bundles[k] =
        load_model(dir.empty() ? e.path : dir + "/" + e.path);
  });
  return zoo;
}

// ---------------------------------------------------------------------------
// gen-corpus

int cmd_gen_corpus(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                   std::size_t vocab_size, std::size_t dev_per_class,
                   const std::string& lexicon_path, const std::string& out) {
  if (!lexicon_path.empty())
    throw std::runtime_error(
        "gen-corpus templates are tied to the bundled lexicon; "
        "omit --lexicon here (other subcommands accept one)");
  fs::create_directories(out);
  Corpus c = gen_synthetic_corpus(seed, n_train, n_test, vocab_size);
  const std::uint64_t dev_seed = seed ^ 0xdee5e7ULL;
  Dataset dev = gen_dev_set(dev_seed, dev_per_class, c.lexicon);

  save_dataset(c.train, out + "/train.jsonl");
  save_dataset(c.test, out + "/test.jsonl");
  save_dataset(dev, out + "/dev.jsonl");
  save_lexicon(c.lexicon, out + "/lexicon.txt");
  write_config(out, {{"subcommand", "gen-corpus"},
                     {"seed", seed},
                     {"n_train", n_train},
                     {"n_test", n_test},
                     {"vocab_size", vocab_size},
                     {"dev_per_class", dev_per_class},
                     {"dev_seed", dev_seed}});
  std::printf("wrote corpus (%zu train, %zu test, %zu dev) to %s\n",
              c.train.size(), c.test.size(), dev.size(), out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train-zoo

int cmd_train_zoo(const std::string& corpus_dir, const std::string& out,
                  ZooSpec spec, TrainConfig base_cfg, ZooGates gates,
                  std::size_t vocab_size, const std::string& trigger_pos) {
  fs::create_directories(out);
  Corpus c;
  c.lexicon = load_lexicon(corpus_dir + "/lexicon.txt");
  c.vocab = build_vocab(c.lexicon, vocab_size);
  c.train = load_dataset(corpus_dir + "/train.jsonl");
  c.test = load_dataset(corpus_dir + "/test.jsonl");

  const TriggerPos pos =
      trigger_pos == "front" ? TriggerPos::Front : TriggerPos::Random;
  ZooBuildResult res = build_zoo(spec, c, base_cfg, {}, gates, pos);

  for (std::size_t i = 0; i < res.manifest.models.size(); ++i) {
    ZooEntry& e = res.manifest.models[i];
    if (e.excluded) continue;
    char name[32];
    std::snprintf(name, sizeof name, "model_%03zu.bin", i);
    e.path = name;
    save_model(res.bundles[i], out + "/" + e.path);
  }
  save_manifest(res.manifest, out + "/manifest.json");
  write_config(out, {{"subcommand", "train-zoo"},
                     {"corpus", corpus_dir},
                     {"seed_base", spec.seed_base},
                     {"n_clean", spec.n_clean},
                     {"n_character", spec.n_character},
                     {"n_word", spec.n_word},
                     {"n_phrase", spec.n_phrase},
                     {"epochs", base_cfg.epochs},
                     {"learning_rate", base_cfg.learning_rate},
                     {"batch_size", base_cfg.batch_size},
                     {"poison_rate", base_cfg.poison_rate},
                     {"vocab_size", vocab_size},
                     {"trigger_pos", trigger_pos},
                     {"min_clean_acc", gates.min_clean_acc},
                     {"min_asr", gates.min_asr},
                     {"max_clean_gap", gates.max_clean_gap},
                     {"max_attempts", gates.max_attempts}});

  std::size_t excluded = 0;
  for (const auto& e : res.manifest.models) excluded += e.excluded ? 1 : 0;
  std::printf("zoo: %zu models (%zu excluded) in %s\n",
              res.manifest.models.size(), excluded, out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct ModelAnalysis {
  bool trojaned = false;
  std::map<TokenType, std::size_t> focus_counts;
  std::vector<HeadReport> focus;    // typed-params focus heads, all types
  std::vector<DriftReport> drifts;  // typed-params drifting heads
  // entropy per drifting head: clean dev vs perturbed dev
  std::vector<std::pair<double, double>> drift_entropy;
};

int cmd_analyze(const std::string& manifest_path, const std::string& dev_path,
                const std::string& lexicon_path, const std::string& out,
                const ThresholdFlags& th) {
  fs::create_directories(out);
  const Lexicon lex = load_lexicon_or_builtin(lexicon_path);
  const Dataset dev = load_dataset(dev_path);
  const LoadedZoo zoo = load_zoo(manifest_path);
  const TypedFocusParams params = th.typed(dev.size());
  const TypedFocusParams drift_params = th.typed_drift(dev.size());
  const auto probes = clean_probe_perturbations(lex, th.probe_seed, 1);

  std::vector<ModelAnalysis> per_model(zoo.bundles.size());
  parallel_for(zoo.bundles.size(), [&](std::size_t k) {
    const ModelBundle& m = zoo.bundles[k];
    ModelAnalysis a;
    a.trojaned = m.provenance.trojaned;
    const Vocabulary vocab = model_vocab(m);
    const auto clean_seqs = tokenize_dataset(dev, vocab, m.config.max_len);
    for (TokenType t : {TokenType::Semantic, TokenType::Separator,
                        TokenType::NonSemantic}) {
      for (const auto& r :
           focus_heads(m, clean_seqs, params.for_type(t), lex))
        if (r.focus_type == t) {
          a.focus.push_back(r);
          ++a.focus_counts[t];
        }
    }
    const std::vector<std::string> pert =
        m.provenance.trojaned ? m.provenance.trigger->tokens : probes[0];
    a.drifts = typed_drifting_heads(m, dev, pert, params, drift_params, lex);
    const auto poisoned = perturb_dev(dev, pert, vocab, m.config.max_len);
    for (const auto& d : a.drifts) {
      const double e_clean =
          avg_attention_entropy(m, clean_seqs, {d.head}).at(d.head);
      const double e_pois =
          avg_attention_entropy(m, poisoned, {d.head}).at(d.head);
      a.drift_entropy.push_back({e_clean, e_pois});
    }
    per_model[k] = std::move(a);
  });

  const PopulationStats pop =
      population_stats(to_pointers(zoo.bundles), dev, params, drift_params,
                       lex, th.probe_seed);
  const DriftSummary table8 = drift_attention_attr_summary(
      to_pointers(zoo.bundles), dev, params, drift_params, lex, th.probe_seed,
      th.attr_steps);

  const std::vector<TokenType> types = {
      TokenType::Semantic, TokenType::Separator, TokenType::NonSemantic};

  // table2.csv: average focus / drifting head counts per type over the
  // Trojaned part of the zoo.
  {
    std::string csv = "type,focus_heads_avg,drifting_heads_avg\n";
    std::size_t n_troj = 0;
    for (const auto& a : per_model) n_troj += a.trojaned ? 1 : 0;
    for (TokenType t : types) {
      double focus_sum = 0.0, drift_sum = 0.0;
      for (const auto& a : per_model) {
        if (!a.trojaned) continue;
        auto it = a.focus_counts.find(t);
        focus_sum += it == a.focus_counts.end()
                         ? 0.0
                         : static_cast<double>(it->second);
        for (const auto& d : a.drifts)
          drift_sum += d.clean_focus.focus_type == t ? 1.0 : 0.0;
      }
      const double denom = n_troj ? static_cast<double>(n_troj) : 1.0;
      csv += token_type_name(t) + "," + fmt(focus_sum / denom) + "," +
             fmt(drift_sum / denom) + "\n";
    }
    write_text_file(out + "/table2.csv", csv);
  }

  // table3.csv: population drifting percentages, Trojaned vs clean.
  {
    std::string csv = "type,trojaned_pct,clean_pct\n";
    for (TokenType t : types)
      csv += token_type_name(t) + "," + opt_fmt(pop.trojaned_pct.at(t)) +
             "," + opt_fmt(pop.clean_pct.at(t)) + "\n";
    write_text_file(out + "/table3.csv", csv);
  }

  // table8.csv: attention / attribution mass toward the inserted token in
  // drifting heads.
  {
    std::string csv =
        "type,trojaned_attention,trojaned_attribution,trojaned_heads,"
        "clean_attention,clean_attribution,clean_heads\n";
    for (TokenType t : types) {
      const DriftSummaryCell& tc = table8.trojaned.at(t);
      const DriftSummaryCell& cc = table8.clean.at(t);
      csv += token_type_name(t) + "," + opt_fmt(tc.attention) + "," +
             opt_fmt(tc.attribution) + "," + std::to_string(tc.n_heads) +
             "," + opt_fmt(cc.attention) + "," + opt_fmt(cc.attribution) +
             "," + std::to_string(cc.n_heads) + "\n";
    }
    write_text_file(out + "/table8.csv", csv);
  }

  // fig4.csv: per drifting head, entropy on clean vs poisoned dev.
  {
    std::string csv =
        "model,layer,head,type,clean_entropy,poisoned_entropy\n";
    for (std::size_t k = 0; k < per_model.size(); ++k) {
      const auto& a = per_model[k];
      if (!a.trojaned) continue;
      for (std::size_t j = 0; j < a.drifts.size(); ++j)
        csv += std::to_string(zoo.manifest_index[k]) + "," +
               std::to_string(a.drifts[j].head.layer) + "," +
               std::to_string(a.drifts[j].head.head) + "," +
               token_type_name(a.drifts[j].clean_focus.focus_type) + "," +
               fmt(a.drift_entropy[j].first) + "," +
               fmt(a.drift_entropy[j].second) + "\n";
    }
    write_text_file(out + "/fig4.csv", csv);
  }

  // fig5.csv: per-layer focus / drifting head counts by type, summed over
  // Trojaned models.
  {
    std::size_t n_layers = 0;
    for (const auto& m : zoo.bundles)
      n_layers = std::max(n_layers, m.config.n_layers);
    LayerCounts total;
    total.focus.resize(n_layers);
    total.drifting.resize(n_layers);
    for (std::size_t k = 0; k < per_model.size(); ++k) {
      if (!per_model[k].trojaned) continue;
      LayerCounts lc = heads_per_layer(per_model[k].focus,
                                       per_model[k].drifts, n_layers);
      for (std::size_t l = 0; l < n_layers; ++l) {
        for (const auto& [t, n] : lc.focus[l]) total.focus[l][t] += n;
        for (const auto& [t, n] : lc.drifting[l]) total.drifting[l][t] += n;
      }
    }
    std::string csv =
        "layer,semantic_focus,separator_focus,nonsemantic_focus,"
        "semantic_drift,separator_drift,nonsemantic_drift\n";
    for (std::size_t l = 0; l < n_layers; ++l) {
      csv += std::to_string(l);
      for (const auto* row : {&total.focus[l], &total.drifting[l]})
        for (TokenType t : types) {
          auto it = row->find(t);
          csv += "," +
                 std::to_string(it == row->end() ? 0 : it->second);
        }
      csv += "\n";
    }
    write_text_file(out + "/fig5.csv", csv);
  }

  // summary.json: the tables again, plus entropy-concentration counts.
  {
    json j;
    j["n_models"] = zoo.bundles.size();
    j["n_trojaned"] = pop.n_trojaned;
    j["n_clean"] = pop.n_clean;
    json pops;
    for (TokenType t : types) {
      json cell;
      if (pop.trojaned_pct.at(t)) cell["trojaned_pct"] = *pop.trojaned_pct.at(t);
      if (pop.clean_pct.at(t)) cell["clean_pct"] = *pop.clean_pct.at(t);
      pops[token_type_name(t)] = cell;
    }
    j["population_drift"] = pops;
    std::size_t concentrated = 0, total_drift = 0;
    for (const auto& a : per_model) {
      if (!a.trojaned) continue;
      for (const auto& [e_clean, e_pois] : a.drift_entropy) {
        ++total_drift;
        concentrated += e_pois < e_clean ? 1 : 0;
      }
    }
    j["drifting_heads_total"] = total_drift;
    j["drifting_heads_entropy_concentrated"] = concentrated;
    write_text_file(out + "/summary.json", j.dump(2) + "\n");
  }

  json cfg = th.to_json();
  cfg["subcommand"] = "analyze";
  cfg["zoo"] = manifest_path;
  cfg["dev"] = dev_path;
  write_config(out, cfg);
  std::printf("analysis reports written to %s\n", out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// prune-study

int cmd_prune_study(const std::string& manifest_path,
                    const std::string& dev_path,
                    const std::string& lexicon_path, const std::string& out,
                    const ThresholdFlags& th) {
  fs::create_directories(out);
  const Lexicon lex = load_lexicon_or_builtin(lexicon_path);
  const Dataset dev = load_dataset(dev_path);
  const LoadedZoo zoo = load_zoo(manifest_path);
  const TypedFocusParams params = th.typed(dev.size());
  const TypedFocusParams drift_params = th.typed_drift(dev.size());

  struct Row {
    bool trojaned = false;
    std::vector<PruningDelta> by_type, by_layer, by_union;
  };
  std::vector<Row> rows(zoo.bundles.size());
  parallel_for(zoo.bundles.size(), [&](std::size_t k) {
    const ModelBundle& m = zoo.bundles[k];
    Row r;
    r.trojaned = m.provenance.trojaned;
    if (!r.trojaned) {
      rows[k] = std::move(r);
      return;
    }
    const auto drifts =
        typed_drifting_heads(m, dev, m.provenance.trigger->tokens, params,
                             drift_params, lex);
    // Poisoned dev keeps the original labels: deltas measure recovery.
    const auto poisoned = perturb_dev(dev, m.provenance.trigger->tokens,
                                      model_vocab(m), m.config.max_len);
    r.by_type = pruning_impact(m, drifts, poisoned, PruneGroupBy::Type);
    r.by_layer = pruning_impact(m, drifts, poisoned, PruneGroupBy::Layer);
    r.by_union = pruning_impact(m, drifts, poisoned, PruneGroupBy::Union);
    rows[k] = std::move(r);
  });

  auto mean_delta = [&](auto select) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& r : rows) {
      if (!r.trojaned) continue;
      for (const PruningDelta& d : select(r)) {
        acc[d.group].first += d.delta;
        acc[d.group].second += 1;
      }
    }
    return acc;
  };

  {
    std::string csv = "group,mean_delta,models\n";
    auto type_means = mean_delta([](const Row& r) { return r.by_type; });
    auto union_means = mean_delta([](const Row& r) { return r.by_union; });
    for (TokenType t : {TokenType::Semantic, TokenType::Separator,
                        TokenType::NonSemantic}) {
      const auto& [sum, n] = type_means[token_type_name(t)];
      csv += token_type_name(t) + "," + fmt(n ? sum / n : 0.0) + "," +
             std::to_string(n) + "\n";
    }
    const auto& [usum, un] = union_means["union"];
    csv += "union," + fmt(un ? usum / un : 0.0) + "," + std::to_string(un) +
           "\n";
    write_text_file(out + "/table5.csv", csv);
  }
  {
    std::string csv = "layer,mean_delta,models\n";
    auto layer_means = mean_delta([](const Row& r) { return r.by_layer; });
    for (const auto& [group, acc] : layer_means)
      csv += group + "," + fmt(acc.second ? acc.first / acc.second : 0.0) +
             "," + std::to_string(acc.second) + "\n";
    write_text_file(out + "/fig6.csv", csv);
  }

  json cfg = th.to_json();
  cfg["subcommand"] = "prune-study";
  cfg["zoo"] = manifest_path;
  cfg["dev"] = dev_path;
  write_config(out, cfg);
  std::printf("pruning study written to %s\n", out.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// detect / evaluate

DetectorParams detector_params_from(double flip_threshold, double alpha,
                                    double beta_frac, double drift_beta_frac,
                                    std::size_t top_k, std::size_t min_drift,
                                    bool positive_class) {
  DetectorParams p;
  p.flip_threshold = flip_threshold;
  p.alpha_ratio = alpha;
  p.beta_fraction = beta_frac;
  p.drift_beta_fraction = drift_beta_frac;
  p.top_k = top_k;
  p.min_drifting_heads = min_drift;
  p.positive_class_p_true = positive_class;
  return p;
}

int cmd_detect(const std::string& model_path, const std::string& dev_path,
               const std::string& perturbations_path,
               const std::string& lexicon_path, const std::string& out,
               const DetectorParams& params) {
  const Lexicon lex = load_lexicon_or_builtin(lexicon_path);
  const Dataset dev = load_dataset(dev_path);
  const ModelBundle m = load_model(model_path);
  const std::vector<std::string> pset =
      perturbations_path.empty() ? default_perturbation_set(lex)
                                 : load_token_lines(perturbations_path);

  const TrojanVerdict v = detect(m, pset, dev, lex, params);
  json j = verdict_to_json(v);
  write_text_file(out, j.dump(2) + "\n");

  json cfg = {{"subcommand", "detect"},
              {"model", model_path},
              {"dev", dev_path},
              {"perturbations", perturbations_path},
              {"flip_threshold", params.flip_threshold},
              {"alpha", params.alpha_ratio},
              {"beta_frac", params.beta_fraction},
              {"drift_beta_frac", params.drift_beta_fraction},
              {"top_k", params.top_k},
              {"min_drifting_heads", params.min_drifting_heads},
              {"positive_class_p_true", params.positive_class_p_true}};
  write_text_file(out + ".config.json", cfg.dump(2) + "\n");
  std::printf("%s: %s\n", model_path.c_str(),
              v.is_trojaned ? "TROJANED" : "clean");
  return 0;
}

int cmd_evaluate(const std::string& manifest_path, const std::string& dev_path,
                 const std::string& perturbations_path,
                 const std::string& lexicon_path, const std::string& out,
                 const DetectorParams& params) {
  fs::create_directories(out);
  const Lexicon lex = load_lexicon_or_builtin(lexicon_path);
  const Dataset dev = load_dataset(dev_path);
  const std::vector<std::string> pset =
      perturbations_path.empty() ? default_perturbation_set(lex)
                                 : load_token_lines(perturbations_path);
  const ZooManifest manifest = load_manifest(manifest_path);
  const std::string zoo_dir =
      fs::path(manifest_path).parent_path().string();
  const ZooEvaluation ev =
      evaluate_zoo(manifest, zoo_dir.empty() ? "." : zoo_dir, pset, dev, lex,
                   params);

  std::string csv =
      "model,path,trojaned_truth,trojaned_verdict,candidates_tested,"
      "perturbation\n";
  for (std::size_t k = 0; k < ev.model_indices.size(); ++k) {
    const ZooEntry& e = manifest.models[ev.model_indices[k]];
    const TrojanVerdict& v = ev.verdicts[k];
    std::string pert;
    if (v.trojan_perturbation) pert = join_words(*v.trojan_perturbation);
    csv += std::to_string(ev.model_indices[k]) + "," + e.path + "," +
           std::to_string(e.provenance.trojaned ? 1 : 0) + "," +
           std::to_string(v.is_trojaned ? 1 : 0) + "," +
           std::to_string(v.candidates_tested) + "," + pert + "\n";
  }
  write_text_file(out + "/results.csv", csv);

  json summary = {{"accuracy", ev.accuracy},
                  {"auc", ev.auc},
                  {"n_models", ev.model_indices.size()}};
  write_text_file(out + "/summary.json", summary.dump(2) + "\n");

  json cfg = {{"subcommand", "evaluate"},
              {"zoo", manifest_path},
              {"dev", dev_path},
              {"perturbations", perturbations_path},
              {"flip_threshold", params.flip_threshold},
              {"alpha", params.alpha_ratio},
              {"beta_frac", params.beta_fraction},
              {"drift_beta_frac", params.drift_beta_fraction},
              {"top_k", params.top_k},
              {"min_drifting_heads", params.min_drifting_heads},
              {"positive_class_p_true", params.positive_class_p_true}};
  write_config(out, cfg);
  std::printf("evaluate: ACC %.4f AUC %.4f over %zu models\n", ev.accuracy,
              ev.auc, ev.model_indices.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-based Trojan forensics for toy transformers"};
  app.require_subcommand(1);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
  std::uint64_t gc_seed = 7;
  std::size_t gc_train = 2000, gc_test = 400, gc_vocab = 384, gc_dev = 40;
  std::string gc_lexicon, gc_out;
  gen->add_option("--seed", gc_seed, "master seed");
  gen->add_option("--n-train", gc_train, "training sentences");
  gen->add_option("--n-test", gc_test, "test sentences");
  gen->add_option("--vocab-size", gc_vocab, "vocabulary size");
  gen->add_option("--dev-per-class", gc_dev, "dev sentences per class");
  gen->add_option("--lexicon", gc_lexicon, "lexicon file (default: bundled)");
  gen->add_option("--out", gc_out, "output directory")->required();

  // train-zoo
  auto* tz = app.add_subcommand("train-zoo", "train the suspect-model zoo");
  std::string tz_corpus, tz_out, tz_pos = "random";
  ZooSpec tz_spec;
  TrainConfig tz_cfg;
  ZooGates tz_gates;
  std::size_t tz_vocab = 384;
  tz->add_option("--corpus", tz_corpus, "corpus directory from gen-corpus")
      ->required();
  tz->add_option("--out", tz_out, "output directory")->required();
  tz->add_option("--seed", tz_spec.seed_base, "zoo seed base");
  tz->add_option("--clean", tz_spec.n_clean, "clean model count");
  tz->add_option("--char", tz_spec.n_character, "character-trigger count");
  tz->add_option("--word", tz_spec.n_word, "word-trigger count");
  tz->add_option("--phrase", tz_spec.n_phrase, "phrase-trigger count");
  tz->add_option("--epochs", tz_cfg.epochs, "training epochs");
  tz->add_option("--lr", tz_cfg.learning_rate, "learning rate");
  tz->add_option("--batch", tz_cfg.batch_size, "batch size");
  tz->add_option("--poison-rate", tz_cfg.poison_rate, "poison fraction");
  tz->add_option("--vocab-size", tz_vocab, "vocabulary size");
  tz->add_option("--trigger-pos", tz_pos, "trigger position: random|front")
      ->check(CLI::IsMember({"random", "front"}));
  tz->add_option("--min-acc", tz_gates.min_clean_acc, "clean accuracy gate");
  tz->add_option("--min-asr", tz_gates.min_asr, "ASR gate");
  tz->add_option("--max-gap", tz_gates.max_clean_gap, "clean accuracy gap gate");
  tz->add_option("--attempts", tz_gates.max_attempts, "retrain attempts");

  // analyze
  auto* an = app.add_subcommand("analyze", "attention forensics reports");
  std::string an_zoo, an_dev, an_lexicon, an_out;
  ThresholdFlags an_th;
  an->add_option("--zoo", an_zoo, "zoo manifest.json")->required();
  an->add_option("--dev", an_dev, "dev set JSONL")->required();
  an->add_option("--lexicon", an_lexicon, "lexicon file (default: bundled)");
  an->add_option("--out", an_out, "report directory")->required();
  an_th.add_to(an);

  // prune-study
  auto* ps = app.add_subcommand("prune-study", "head pruning impact study");
  std::string ps_zoo, ps_dev, ps_lexicon, ps_out;
  ThresholdFlags ps_th;
  ps->add_option("--zoo", ps_zoo, "zoo manifest.json")->required();
  ps->add_option("--dev", ps_dev, "dev set JSONL")->required();
  ps->add_option("--lexicon", ps_lexicon, "lexicon file (default: bundled)");
  ps->add_option("--out", ps_out, "report directory")->required();
  ps_th.add_to(ps);

  // detect
  auto* de = app.add_subcommand("detect", "run AttenTD on one model");
  std::string de_model, de_dev, de_pert, de_lexicon, de_out;
  double de_flip = 0.9, de_alpha = 0.4, de_beta = 15.0 / 80.0;
  double de_drift_beta = -1.0;
  std::size_t de_topk = 5, de_min = 1;
  bool de_posclass = false;
  de->add_option("--model", de_model, "model file")->required();
  de->add_option("--dev", de_dev, "dev set JSONL")->required();
  de->add_option("--perturbations", de_pert,
                 "perturbation token file (default: neutral lexicon + chars)");
  de->add_option("--lexicon", de_lexicon, "lexicon file (default: bundled)");
  de->add_option("--out", de_out, "verdict JSON path")->required();
  de->add_option("--flip-threshold", de_flip, "candidate flip threshold");
  de->add_option("--alpha", de_alpha, "focus ratio threshold");
  de->add_option("--beta-frac", de_beta, "focus sentence dev-set fraction");
  de->add_option("--drift-beta-frac", de_drift_beta,
                 "drift-side dev-set fraction (default: --beta-frac)");
  de->add_option("--top-k", de_topk, "phrase-stage token count");
  de->add_option("--min-drift-heads", de_min, "drifting heads for a verdict");
  de->add_flag("--positive-class-p-true", de_posclass,
               "read p_true as the positive-class probability");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run AttenTD over a zoo");
  std::string ev_zoo, ev_dev, ev_pert, ev_lexicon, ev_out;
  double ev_flip = 0.9, ev_alpha = 0.4, ev_beta = 15.0 / 80.0;
  double ev_drift_beta = -1.0;
  std::size_t ev_topk = 5, ev_min = 1;
  bool ev_posclass = false;
  ev->add_option("--zoo", ev_zoo, "zoo manifest.json")->required();
  ev->add_option("--dev", ev_dev, "dev set JSONL")->required();
  ev->add_option("--perturbations", ev_pert,
                 "perturbation token file (default: neutral lexicon + chars)");
  ev->add_option("--lexicon", ev_lexicon, "lexicon file (default: bundled)");
  ev->add_option("--out", ev_out, "results directory")->required();
  ev->add_option("--flip-threshold", ev_flip, "candidate flip threshold");
  ev->add_option("--alpha", ev_alpha, "focus ratio threshold");
  ev->add_option("--beta-frac", ev_beta, "focus sentence dev-set fraction");
  ev->add_option("--drift-beta-frac", ev_drift_beta,
                 "drift-side dev-set fraction (default: --beta-frac)");
  ev->add_option("--top-k", ev_topk, "phrase-stage token count");
  ev->add_option("--min-drift-heads", ev_min, "drifting heads for a verdict");
  ev->add_flag("--positive-class-p-true", ev_posclass,
               "read p_true as the positive-class probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed())
      return cmd_gen_corpus(gc_seed, gc_train, gc_test, gc_vocab, gc_dev,
                            gc_lexicon, gc_out);
    if (tz->parsed())
      return cmd_train_zoo(tz_corpus, tz_out, tz_spec, tz_cfg, tz_gates,
                           tz_vocab, tz_pos);
    if (an->parsed())
      return cmd_analyze(an_zoo, an_dev, an_lexicon, an_out, an_th);
    if (ps->parsed())
      return cmd_prune_study(ps_zoo, ps_dev, ps_lexicon, ps_out, ps_th);
    if (de->parsed())
      return cmd_detect(de_model, de_dev, de_pert, de_lexicon, de_out,
                        detector_params_from(de_flip, de_alpha, de_beta,
                                             de_drift_beta, de_topk, de_min,
                                             de_posclass));
    if (ev->parsed())
      return cmd_evaluate(ev_zoo, ev_dev, ev_pert, ev_lexicon, ev_out,
                          detector_params_from(ev_flip, ev_alpha, ev_beta,
                                               ev_drift_beta, ev_topk, ev_min,
                                               ev_posclass));
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
