// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trojattn/analysis.hpp"
#include "trojattn/corpus.hpp"
#include "trojattn/io.hpp"
#include "trojattn/model.hpp"
#include "trojattn/training.hpp"

namespace trojattn {

struct PerturbationRecord {
  std::vector<std::string> tokens;  // 1-3 token strings
  double flip_rate = 0.0;           // dev sentences misclassified on insert
  double p_troj = 0.0;              // 1 - mean true-class probability
};

struct TrojanVerdict {
  bool is_trojaned = false;
  std::optional<std::vector<std::string>> trojan_perturbation;
  std::vector<DriftReport> evidence;
  std::size_t candidates_tested = 0;
};

struct DetectorParams {
  double flip_threshold = 0.9;
  double alpha_ratio = 0.4;
  double beta_fraction = 15.0 / 80.0;
  // Sentence threshold for the drift side of the monitor; negative means
  // "same as beta_fraction". A stricter drift threshold separates genuine
  // trigger capture from the attention any novel insertion attracts.
  double drift_beta_fraction = -1.0;
  std::size_t top_k = 5;
  std::size_t candidate_cap = 200;
  std::size_t min_drifting_heads = 1;
  // `true` reads p_true as the probability of the positive class verbatim;
  // the default reads it as the probability of each sentence's own true
  // label, which keeps the score meaningful for negative-class sentences.
  bool positive_class_p_true = false;

  FocusParams focus_params(std::size_t dev_size) const {
    return {alpha_ratio, scaled_beta(beta_fraction, dev_size)};
  }
  FocusParams drift_focus_params(std::size_t dev_size) const {
    const double frac =
        drift_beta_fraction < 0.0 ? beta_fraction : drift_beta_fraction;
    return {alpha_ratio, scaled_beta(frac, dev_size)};
  }
};

// Stage 1: insert every single perturbation into the whole dev set; keep the
// ones that flip at least flip_threshold of the sentences. Records for all
// perturbations are returned for the phrase stage.
struct CandidateScan {
  std::vector<PerturbationRecord> candidates;
  std::vector<PerturbationRecord> records;  // one per input perturbation
};

inline CandidateScan non_phrase_candidates(
    const ModelBundle& m, const std::vector<std::string>& perturbation_set,
    const Dataset& dev, const DetectorParams& params = {}) {
  if (perturbation_set.empty())
    throw std::invalid_argument("empty perturbation set");
  if (dev.samples.empty()) throw std::invalid_argument("empty dev set");
  const Vocabulary vocab = model_vocab(m);

  CandidateScan out;
  out.records.resize(perturbation_set.size());
  parallel_for(perturbation_set.size(), [&](std::size_t pi) {
    const std::string& tok = perturbation_set[pi];
    PerturbationRecord rec;
    rec.tokens = {tok};
    std::size_t flips = 0;
    double p_true_sum = 0.0;
    for (const Sample& s : dev.samples) {
      Sample perturbed = s;
      perturbed.text = tok + (s.text.empty() ? "" : " " + s.text);
      const TokenSeq seq =
          tokenize_sample(perturbed, vocab, m.config.max_len);
      const Tensor logits = forward(m, seq).first;
      if (predict(logits) != s.label) ++flips;
      const auto [p_neg, p_pos] = softmax2(logits);
      if (params.positive_class_p_true)
        p_true_sum += p_pos;
      else
        p_true_sum += s.label == Label::Positive ? p_pos : p_neg;
    }
    rec.flip_rate =
        static_cast<double>(flips) / static_cast<double>(dev.samples.size());
    rec.p_troj = 1.0 - p_true_sum / static_cast<double>(dev.samples.size());
    out.records[pi] = std::move(rec);
  });

  for (const auto& rec : out.records)
    if (rec.flip_rate >= params.flip_threshold) out.candidates.push_back(rec);
  if (out.candidates.size() > params.candidate_cap) {
    std::stable_sort(out.candidates.begin(), out.candidates.end(),
                     [](const auto& a, const auto& b) {
                       return a.p_troj > b.p_troj;
                     });
    out.candidates.resize(params.candidate_cap);
  }
  return out;
}

// Stage 2: ordered tuples with replacement of lengths 2 and 3 over the top-k
// tokens by p_troj (k^2 + k^3 phrases before dedup), returned in descending
// combined p_troj.
inline std::vector<std::vector<std::string>> phrase_candidates(
    const std::vector<PerturbationRecord>& records, std::size_t k = 5) {
  if (records.size() < k)
    throw std::invalid_argument("need at least k records for phrase stage");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return records[a].p_troj > records[b].p_troj;
  });

  std::vector<std::string> top;
  std::vector<double> top_p;
  for (std::size_t i = 0; i < k; ++i) {
    top.push_back(records[order[i]].tokens.at(0));
    top_p.push_back(records[order[i]].p_troj);
  }

  struct Phrase {
    std::vector<std::string> tokens;
    double combined;
  };
  std::vector<Phrase> phrases;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      phrases.push_back({{top[a], top[b]}, top_p[a] + top_p[b]});
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t c = 0; c < k; ++c)
        phrases.push_back(
            {{top[a], top[b], top[c]}, top_p[a] + top_p[b] + top_p[c]});

  std::stable_sort(phrases.begin(), phrases.end(),
                   [](const Phrase& a, const Phrase& b) {
                     if (a.combined != b.combined) return a.combined > b.combined;
                     return a.tokens < b.tokens;
                   });
  std::vector<std::vector<std::string>> out;
  std::set<std::vector<std::string>> seen;
  for (const auto& p : phrases)
    if (seen.insert(p.tokens).second) out.push_back(p.tokens);
  return out;
}

// Stage 3: probe candidates in order; the first one that induces drifting
// heads decides the verdict.
inline TrojanVerdict attention_monitor(
    const ModelBundle& m, const std::vector<std::vector<std::string>>& candidates,
    const Dataset& dev, const FocusParams& p_clean, const FocusParams& p_drift,
    const Lexicon& lex, std::size_t min_drifting_heads = 1) {
  TrojanVerdict verdict;
  for (const auto& cand : candidates) {
    ++verdict.candidates_tested;
    const auto reports = drifting_heads(m, dev, cand, p_clean, p_drift, lex);
    if (reports.size() >= min_drifting_heads) {
      verdict.is_trojaned = true;
      verdict.trojan_perturbation = cand;
      verdict.evidence = reports;
      return verdict;
    }
  }
  return verdict;
}

// AttenTD end to end: candidate scan, phrase generation, attention monitor.
inline TrojanVerdict detect(const ModelBundle& m,
                            const std::vector<std::string>& perturbation_set,
                            const Dataset& dev, const Lexicon& lex,
                            const DetectorParams& params = {}) {
  const CandidateScan scan =
      non_phrase_candidates(m, perturbation_set, dev, params);
  std::vector<std::vector<std::string>> candidates;
  for (const auto& rec : scan.candidates) candidates.push_back(rec.tokens);
  if (scan.records.size() >= params.top_k)
    for (auto& phrase : phrase_candidates(scan.records, params.top_k))
      candidates.push_back(std::move(phrase));
  return attention_monitor(m, candidates, dev,
                           params.focus_params(dev.samples.size()),
                           params.drift_focus_params(dev.samples.size()), lex,
                           params.min_drifting_heads);
}

// Default probing vocabulary: the neutral lexicon plus the character pool.
inline std::vector<std::string> default_perturbation_set(const Lexicon& lex) {
  std::vector<std::string> set = lex.neutral;
  for (const auto& c : trigger_char_pool()) set.push_back(c);
  return set;
}

// ---------------------------------------------------------------------------
// Zoo-level evaluation.

struct ZooEvaluation {
  double accuracy = 0.0;
  double auc = 0.0;
  std::vector<TrojanVerdict> verdicts;       // aligned with included models
  std::vector<std::size_t> model_indices;    // manifest indices evaluated
};

// Rank AUC over binary verdict scores with ties counted half.
inline double binary_score_auc(const std::vector<int>& scores,
                               const std::vector<int>& labels) {
  std::size_t n_pos = 0, n_neg = 0;
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    ++n_pos;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] == 1) continue;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  for (int l : labels) n_neg += l == 0 ? 1 : 0;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("AUC needs both classes in the zoo");
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline ZooEvaluation evaluate_zoo(const ZooManifest& manifest,
                                  const std::string& zoo_dir,
                                  const std::vector<std::string>& perturbation_set,
                                  const Dataset& dev, const Lexicon& lex,
                                  const DetectorParams& params = {}) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < manifest.models.size(); ++i)
    if (!manifest.models[i].excluded) idx.push_back(i);
  if (idx.empty()) throw std::invalid_argument("empty zoo");

  ZooEvaluation ev;
  ev.model_indices = idx;
  ev.verdicts.resize(idx.size());
  parallel_for(idx.size(), [&](std::size_t k) {
    const ZooEntry& e = manifest.models[idx[k]];
    const ModelBundle m = load_model(zoo_dir + "/" + e.path);
    ev.verdicts[k] = detect(m, perturbation_set, dev, lex, params);
  });

  std::vector<int> scores, labels;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const bool truth = manifest.models[idx[k]].provenance.trojaned;
    const bool said = ev.verdicts[k].is_trojaned;
    scores.push_back(said ? 1 : 0);
    labels.push_back(truth ? 1 : 0);
    if (truth == said) ++correct;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(idx.size());
  ev.auc = binary_score_auc(scores, labels);
  return ev;
}

// Same evaluation over in-memory bundles (used by pipelines that have just
// built the zoo).
inline ZooEvaluation evaluate_bundles(
    const std::vector<const ModelBundle*>& models,
    const std::vector<std::string>& perturbation_set, const Dataset& dev,
    const Lexicon& lex, const DetectorParams& params = {}) {
  if (models.empty()) throw std::invalid_argument("empty zoo");
  ZooEvaluation ev;
  ev.verdicts.resize(models.size());
  parallel_for(models.size(), [&](std::size_t k) {
    ev.verdicts[k] = detect(*models[k], perturbation_set, dev, lex, params);
  });
  std::vector<int> scores, labels;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const bool truth = models[k]->provenance.trojaned;
    const bool said = ev.verdicts[k].is_trojaned;
    ev.model_indices.push_back(k);
    scores.push_back(said ? 1 : 0);
    labels.push_back(truth ? 1 : 0);
    if (truth == said) ++correct;
  }
  ev.accuracy =
      static_cast<double>(correct) / static_cast<double>(models.size());
  ev.auc = binary_score_auc(scores, labels);
  return ev;
}

// ---------------------------------------------------------------------------
// Verdict JSON.

inline json verdict_to_json(const TrojanVerdict& v) {
  json j;
  j["is_trojaned"] = v.is_trojaned;
  if (v.trojan_perturbation) j["trojan_perturbation"] = *v.trojan_perturbation;
  json ev = json::array();
  for (const auto& d : v.evidence)
    ev.push_back({{"layer", d.head.layer},
                  {"head", d.head.head},
                  {"clean_focus_token", d.clean_focus.focus_token},
                  {"clean_focus_type",
                   token_type_name(d.clean_focus.focus_type)},
                  {"clean_support", d.clean_focus.support},
                  {"drift_token", d.drift_token},
                  {"drift_support", d.drift_support}});
  j["evidence"] = ev;
  j["candidates_tested"] = v.candidates_tested;
  return j;
}

}  // namespace trojattn
