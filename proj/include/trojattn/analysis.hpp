// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trojattn/corpus.hpp"
#include "trojattn/model.hpp"
#include "trojattn/training.hpp"

namespace trojattn {

// Token-ratio threshold and sentence-count threshold for focus heads. The
// ratio threshold is named alpha_ratio internally to keep it distinct from
// the attribution integration scale.
struct FocusParams {
  double alpha_ratio = 0.4;
  std::size_t beta_sentences = 15;

  void validate(std::size_t dev_size) const {
    if (alpha_ratio <= 0.0 || alpha_ratio >= 1.0)
      throw std::invalid_argument("alpha must be in (0,1)");
    if (beta_sentences < 1 || beta_sentences > dev_size)
      throw std::invalid_argument("beta must be in [1, |dev|]");
  }
};

// Beta thresholds are carried as fractions of the reference dev-set size and
// scaled to whatever dev set is in use.
inline std::size_t scaled_beta(double fraction, std::size_t dev_size) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(fraction * static_cast<double>(dev_size))));
}

// Per-head-type operating points for population statistics.
struct TypedFocusParams {
  FocusParams semantic;
  FocusParams separator;
  FocusParams non_semantic;

  static TypedFocusParams defaults(std::size_t dev_size) {
    TypedFocusParams p;
    p.semantic = {0.6, scaled_beta(5.0 / 80.0, dev_size)};
    p.separator = {0.6, scaled_beta(36.0 / 80.0, dev_size)};
    p.non_semantic = {0.5, scaled_beta(5.0 / 80.0, dev_size)};
    return p;
  }

  const FocusParams& for_type(TokenType t) const {
    switch (t) {
      case TokenType::Semantic: return semantic;
      case TokenType::Separator: return separator;
      default: return non_semantic;
    }
  }
};

struct HeadReport {
  HeadId head;
  std::string focus_token;
  TokenType focus_type = TokenType::NonSemantic;
  std::size_t support = 0;  // dev sentences satisfying the row-ratio test
};

struct DriftReport {
  HeadId head;
  HeadReport clean_focus;
  std::string drift_token;      // one of the perturbation's tokens
  std::size_t drift_support = 0;
};

// One forward pass per sentence, attention retained.
using AttnDump = std::vector<std::pair<TokenSeq, AttentionStack>>;

inline AttnDump collect_attention(const ModelBundle& m,
                                  const std::vector<TokenSeq>& seqs) {
  AttnDump dump;
  dump.reserve(seqs.size());
  for (const TokenSeq& x : seqs)
    dump.emplace_back(x, forward(m, x).second);
  return dump;
}

// Per head: focus-token string -> number of dev sentences in which more than
// an alpha fraction of rows i < true_len argmax onto that token. Focus is
// keyed by token string so that support aggregates across sentences whose
// token positions differ.
inline std::vector<std::map<std::string, std::size_t>> focus_support(
    const AttnDump& dump, double alpha_ratio) {
  if (dump.empty()) throw std::invalid_argument("empty attention dump");
  const std::size_t n_layers = dump[0].second.n_layers;
  const std::size_t n_heads = dump[0].second.n_heads;
  std::vector<std::map<std::string, std::size_t>> support(n_layers * n_heads);
  for (const auto& [seq, attn] : dump) {
    const std::size_t tl = seq.true_len;
    for (std::size_t l = 0; l < n_layers; ++l)
      for (std::size_t h = 0; h < n_heads; ++h) {
        const Tensor& a = attn.at({l, h});
        std::vector<std::size_t> hits(tl, 0);
        for (std::size_t i = 0; i < tl; ++i) {
          std::size_t best = 0;
          for (std::size_t j = 1; j < tl; ++j)
            if (a.at(i, j) > a.at(i, best)) best = j;
          ++hits[best];
        }
        std::set<std::string> supported;  // once per sentence per string
        for (std::size_t t = 0; t < tl; ++t)
          if (static_cast<double>(hits[t]) / static_cast<double>(tl) >
              alpha_ratio)
            supported.insert(seq.tokens[t].text);
        for (const auto& tok : supported) ++support[l * n_heads + h][tok];
      }
  }
  return support;
}

// A head is reported when some token string is its focus in more than beta
// sentences; the reported token is the best-supported one (ties broken
// lexicographically).
inline std::vector<HeadReport> focus_heads_from(const AttnDump& dump,
                                                const FocusParams& p,
                                                const Lexicon& lex) {
  p.validate(dump.size());
  const auto support = focus_support(dump, p.alpha_ratio);
  const std::size_t n_heads = dump[0].second.n_heads;
  std::vector<HeadReport> out;
  for (std::size_t idx = 0; idx < support.size(); ++idx) {
    const HeadId hid{idx / n_heads, idx % n_heads};
    std::string best;
    std::size_t best_n = 0;
    for (const auto& [tok, n] : support[idx])
      if (n > best_n) {
        best = tok;
        best_n = n;
      }
    if (best_n > p.beta_sentences)
      out.push_back({hid, best, token_type(best, lex), best_n});
  }
  return out;
}

inline std::vector<HeadReport> focus_heads(const ModelBundle& m,
                                           const std::vector<TokenSeq>& dev,
                                           const FocusParams& p,
                                           const Lexicon& lex) {
  if (dev.empty()) throw std::invalid_argument("empty dev set");
  return focus_heads_from(collect_attention(m, dev), p, lex);
}

// Poisoned copy of a clean dev set: perturbation tokens inserted at the
// front of every sentence.
inline std::vector<TokenSeq> perturb_dev(
    const Dataset& dev, const std::vector<std::string>& perturbation,
    const Vocabulary& vocab, std::size_t max_len) {
  std::vector<TokenSeq> out;
  out.reserve(dev.samples.size());
  for (const Sample& s : dev.samples) {
    Sample p = s;
    p.text = join_words(perturbation) +
             (s.text.empty() ? "" : " " + s.text);
    p.trigger_span = {0, perturbation.size()};
    out.push_back(tokenize_sample(p, vocab, max_len));
  }
  return out;
}

// A head drifts iff it is a focus head on the clean dev set and, on the
// perturbed dev set, some perturbation token is its focus in more than
// beta sentences.
inline std::vector<DriftReport> drifting_heads(
    const ModelBundle& m, const Dataset& dev_clean,
    const std::vector<std::string>& perturbation, const FocusParams& p_clean,
    const FocusParams& p_drift, const Lexicon& lex) {
  if (perturbation.empty())
    throw std::invalid_argument("empty perturbation");
  const Vocabulary vocab = model_vocab(m);
  for (const auto& t : perturbation)
    if (!vocab.contains(t))
      throw std::invalid_argument("perturbation token '" + t +
                                  "' not in model vocabulary");
  std::vector<TokenSeq> clean_seqs =
      tokenize_dataset(dev_clean, vocab, m.config.max_len);
  std::vector<HeadReport> clean_focus =
      focus_heads(m, clean_seqs, p_clean, lex);
  if (clean_focus.empty()) return {};

  std::vector<TokenSeq> poisoned =
      perturb_dev(dev_clean, perturbation, vocab, m.config.max_len);
  const AttnDump dump = collect_attention(m, poisoned);
  p_drift.validate(dump.size());
  const auto support = focus_support(dump, p_drift.alpha_ratio);
  const std::size_t n_heads = dump[0].second.n_heads;

  std::vector<DriftReport> out;
  for (const HeadReport& cf : clean_focus) {
    const auto& sup = support[cf.head.layer * n_heads + cf.head.head];
    std::string best;
    std::size_t best_n = 0;
    for (const auto& tok : perturbation) {
      auto it = sup.find(tok);
      if (it != sup.end() && it->second > best_n) {
        best = tok;
        best_n = it->second;
      }
    }
    if (best_n > p_drift.beta_sentences)
      out.push_back({cf.head, cf, best, best_n});
  }
  return out;
}

// Mean Shannon entropy (natural log) over sentences and rows i < true_len of
// each row restricted to non-pad columns, renormalized.
inline std::map<HeadId, double> avg_attention_entropy(
    const AttnDump& dump, const std::vector<HeadId>& heads) {
  if (heads.empty()) throw std::invalid_argument("no heads given");
  if (dump.empty()) throw std::invalid_argument("empty attention dump");
  std::map<HeadId, double> out;
  for (const HeadId& hid : heads) {
    double total = 0.0;
    std::size_t rows = 0;
    for (const auto& [seq, attn] : dump) {
      const Tensor& a = attn.at(hid);
      for (std::size_t i = 0; i < seq.true_len; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < seq.true_len; ++j) z += a.at(i, j);
        double ent = 0.0;
        for (std::size_t j = 0; j < seq.true_len; ++j) {
          const double p = a.at(i, j) / z;
          if (p > 0.0) ent -= p * std::log(p);
        }
        total += ent;
        ++rows;
      }
    }
    out[hid] = total / static_cast<double>(rows);
  }
  return out;
}

inline std::map<HeadId, double> avg_attention_entropy(
    const ModelBundle& m, const std::vector<TokenSeq>& sentences,
    const std::vector<HeadId>& heads) {
  return avg_attention_entropy(collect_attention(m, sentences), heads);
}

// ---------------------------------------------------------------------------
// Integrated-gradient attribution of one head's attention matrix.

struct AttributionMatrix {
  HeadId head;
  Tensor values;  // n x n
};

// Midpoint Riemann sum of grad_at(s * base) over s in (0,1), element-wise
// multiplied by base. grad_at must return the gradient of a scalar output
// with respect to the (scaled) matrix it is given.
template <typename GradFn>
Tensor integrate_scaled_gradient(const Tensor& base, GradFn grad_at,
                                 std::size_t steps) {
  if (steps < 2) throw std::invalid_argument("attribution needs steps >= 2");
  Tensor acc(base.shape);
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = (static_cast<double>(k) + 0.5) /
                     static_cast<double>(steps);
    Tensor scaled = base;
    for (double& v : scaled.data) v *= s;
    Tensor g = grad_at(scaled, k);
    if (!g.same_shape(base))
      throw std::runtime_error("gradient shape mismatch in attribution");
    for (std::size_t i = 0; i < acc.numel(); ++i) acc.data[i] += g.data[i];
  }
  Tensor out = base;
  const double inv = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= inv * acc.data[i];
  return out;
}

// Scalar output used as F: the positive-class logit by default, or the
// predicted class's logit.
inline AttributionMatrix attribution(const ModelBundle& m, const TokenSeq& x,
                                     const HeadId& head, std::size_t steps,
                                     bool predicted_class = false) {
  auto [logits, attn] = forward(m, x);
  const std::size_t cls =
      predicted_class ? static_cast<std::size_t>(predict(logits)) : 1;
  const Tensor base = attn.at(head);
  Tensor attr = integrate_scaled_gradient(
      base,
      [&](const Tensor& scaled, std::size_t k) -> Tensor {
        Tape tape(true);
        std::map<std::string, Tape::Var> leaves;
        ForwardOptions opts;
        opts.overrides[head] = scaled;
        opts.collect_attention = false;
        try {
          ForwardResult r = forward_on_tape(tape, leaves, m, x, opts);
          tape.backward(tape.pick(r.logits, cls));
          return tape.grad(r.override_leaves.at(head_id_str(head)));
        } catch (const std::runtime_error& e) {
          throw std::runtime_error("attribution step " + std::to_string(k) +
                                   ": " + e.what());
        }
      },
      steps);
  return {head, std::move(attr)};
}

// F(s * A_H) with the scaled matrix injected for one head.
inline double logit_with_scaled_attention(const ModelBundle& m,
                                          const TokenSeq& x,
                                          const HeadId& head, double s,
                                          std::size_t cls = 1) {
  Tensor base = forward(m, x).second.at(head);
  for (double& v : base.data) v *= s;
  Tensor logits = forward_with_attention_override(m, x, {{head, base}});
  return logits.data[cls];
}

// ---------------------------------------------------------------------------
// Aggregations.

struct LayerCounts {
  // layer -> head type -> count
  std::vector<std::map<TokenType, std::size_t>> focus;
  std::vector<std::map<TokenType, std::size_t>> drifting;
};

inline LayerCounts heads_per_layer(const std::vector<HeadReport>& focus,
                                   const std::vector<DriftReport>& drifting,
                                   std::size_t n_layers) {
  LayerCounts out;
  out.focus.resize(n_layers);
  out.drifting.resize(n_layers);
  for (const auto& r : focus) ++out.focus.at(r.head.layer)[r.focus_type];
  for (const auto& r : drifting)
    ++out.drifting.at(r.head.layer)[r.clean_focus.focus_type];
  return out;
}

enum class PruneGroupBy { Type, Layer, Union };

struct PruningDelta {
  std::string group;
  double delta = 0.0;        // accuracy-after minus accuracy-before
  std::size_t n_heads = 0;   // heads pruned; 0 marks an empty group
};

// Accuracy on poisoned samples w.r.t. their original true labels, after
// pruning the grouped drifting heads, minus before. The poisoned set must be
// labeled with the original labels, not the attack target.
inline std::vector<PruningDelta> pruning_impact(
    const ModelBundle& m, const std::vector<DriftReport>& drifts,
    const std::vector<TokenSeq>& poisoned_true_labels, PruneGroupBy group_by) {
  if (poisoned_true_labels.empty())
    throw std::invalid_argument("empty poisoned evaluation set");
  const double before = accuracy(m, poisoned_true_labels);

  auto measure = [&](const std::string& name,
                     const std::set<HeadId>& heads) -> PruningDelta {
    if (heads.empty()) return {name, 0.0, 0};
    const ModelBundle pruned = prune_heads(m, heads);
    return {name, accuracy(pruned, poisoned_true_labels) - before,
            heads.size()};
  };

  std::vector<PruningDelta> out;
  switch (group_by) {
    case PruneGroupBy::Type: {
      for (TokenType t : {TokenType::Semantic, TokenType::Separator,
                          TokenType::NonSemantic}) {
        std::set<HeadId> heads;
        for (const auto& d : drifts)
          if (d.clean_focus.focus_type == t) heads.insert(d.head);
        out.push_back(measure(token_type_name(t), heads));
      }
      break;
    }
    case PruneGroupBy::Layer: {
      for (std::size_t l = 0; l < m.config.n_layers; ++l) {
        std::set<HeadId> heads;
        for (const auto& d : drifts)
          if (d.head.layer == l) heads.insert(d.head);
        out.push_back(measure("layer" + std::to_string(l), heads));
      }
      break;
    }
    case PruneGroupBy::Union: {
      std::set<HeadId> heads;
      for (const auto& d : drifts) heads.insert(d.head);
      out.push_back(measure("union", heads));
      break;
    }
  }
  return out;
}

// Drifting heads of one model under per-type operating points; the probe is
// the model's true trigger for Trojaned models and must be supplied by the
// caller for clean models. The clean-focus side and the drift side may use
// distinct thresholds: focus heads are often established by modest support
// while a genuine drift captures far more sentences than chance insertions.
inline std::vector<DriftReport> typed_drifting_heads(
    const ModelBundle& m, const Dataset& dev,
    const std::vector<std::string>& perturbation,
    const TypedFocusParams& p_clean, const TypedFocusParams& p_drift,
    const Lexicon& lex) {
  std::vector<DriftReport> out;
  for (TokenType t : {TokenType::Semantic, TokenType::Separator,
                      TokenType::NonSemantic}) {
    for (const auto& d : drifting_heads(m, dev, perturbation,
                                        p_clean.for_type(t),
                                        p_drift.for_type(t), lex))
      if (d.clean_focus.focus_type == t) out.push_back(d);
  }
  return out;
}

inline std::vector<DriftReport> typed_drifting_heads(
    const ModelBundle& m, const Dataset& dev,
    const std::vector<std::string>& perturbation, const TypedFocusParams& p,
    const Lexicon& lex) {
  return typed_drifting_heads(m, dev, perturbation, p, p, lex);
}

struct PopulationStats {
  // head type -> percentage of models with >= 1 drifting head of that type
  std::map<TokenType, std::optional<double>> trojaned_pct;
  std::map<TokenType, std::optional<double>> clean_pct;
  std::size_t n_trojaned = 0;
  std::size_t n_clean = 0;
};

// Clean models have no trigger; they are probed with n_probes random neutral
// perturbations, and their drift rate is averaged over the probes so that a
// single novelty-grabbing probe does not flag the whole model.
inline std::vector<std::vector<std::string>> clean_probe_perturbations(
    const Lexicon& lex, std::uint64_t seed, std::size_t n_probes) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> probes;
  for (std::size_t i = 0; i < n_probes; ++i)
    probes.push_back({lex.neutral[rng.below(lex.neutral.size())]});
  return probes;
}

inline PopulationStats population_stats(
    const std::vector<const ModelBundle*>& models, const Dataset& dev,
    const TypedFocusParams& p_clean, const TypedFocusParams& p_drift,
    const Lexicon& lex, std::uint64_t probe_seed, std::size_t n_probes = 5) {
  PopulationStats stats;
  const std::vector<TokenType> types = {
      TokenType::Semantic, TokenType::Separator, TokenType::NonSemantic};
  std::map<TokenType, double> troj_hits, clean_hits;
  const auto probes = clean_probe_perturbations(lex, probe_seed, n_probes);

  std::vector<std::map<TokenType, double>> per_model(models.size());
  parallel_for(models.size(), [&](std::size_t i) {
    const ModelBundle& m = *models[i];
    std::map<TokenType, double> drifted;
    if (m.provenance.trojaned) {
      const auto reports = typed_drifting_heads(
          m, dev, m.provenance.trigger->tokens, p_clean, p_drift, lex);
      for (const auto& d : reports) drifted[d.clean_focus.focus_type] = 1.0;
    } else {
      for (const auto& probe : probes) {
        const auto reports =
            typed_drifting_heads(m, dev, probe, p_clean, p_drift, lex);
        std::map<TokenType, bool> hit;
        for (const auto& d : reports) hit[d.clean_focus.focus_type] = true;
        for (const auto& [t, h] : hit)
          if (h) drifted[t] += 1.0 / static_cast<double>(probes.size());
      }
    }
    per_model[i] = std::move(drifted);
  });

  for (std::size_t i = 0; i < models.size(); ++i) {
    const bool troj = models[i]->provenance.trojaned;
    (troj ? stats.n_trojaned : stats.n_clean) += 1;
    for (TokenType t : types)
      if (per_model[i].count(t))
        (troj ? troj_hits : clean_hits)[t] += per_model[i][t];
  }
  for (TokenType t : types) {
    stats.trojaned_pct[t] =
        stats.n_trojaned
            ? std::optional<double>(100.0 * troj_hits[t] / stats.n_trojaned)
            : std::nullopt;
    stats.clean_pct[t] =
        stats.n_clean
            ? std::optional<double>(100.0 * clean_hits[t] / stats.n_clean)
            : std::nullopt;
  }
  return stats;
}

inline PopulationStats population_stats(
    const std::vector<const ModelBundle*>& models, const Dataset& dev,
    const TypedFocusParams& params, const Lexicon& lex,
    std::uint64_t probe_seed, std::size_t n_probes = 5) {
  return population_stats(models, dev, params, params, lex, probe_seed,
                          n_probes);
}

// ---------------------------------------------------------------------------
// Attention / attribution mass toward the trigger token after drifting
// (per-head raw records plus the per-type means over a zoo).

struct DriftHeadRecord {
  std::size_t model_index = 0;
  bool trojaned = false;
  HeadId head;
  TokenType type = TokenType::NonSemantic;
  double attention_to_trigger = 0.0;
  double attribution_to_trigger = 0.0;
};

struct DriftSummaryCell {
  std::optional<double> attention;
  std::optional<double> attribution;
  std::size_t n_heads = 0;
};

struct DriftSummary {
  std::map<TokenType, DriftSummaryCell> trojaned;
  std::map<TokenType, DriftSummaryCell> clean;
  std::vector<DriftHeadRecord> records;
};

// Mean attention mass from rows i < true_len into the columns holding
// `token`, averaged over sentences where the token occurs.
inline double attention_mass_to_token(const AttnDump& dump, const HeadId& hid,
                                      const std::string& token) {
  double total = 0.0;
  std::size_t n_rows = 0;
  for (const auto& [seq, attn] : dump) {
    const Tensor& a = attn.at(hid);
    for (std::size_t i = 0; i < seq.true_len; ++i) {
      double mass = 0.0;
      bool present = false;
      for (std::size_t j = 0; j < seq.true_len; ++j)
        if (seq.tokens[j].text == token) {
          mass += a.at(i, j);
          present = true;
        }
      if (present) {
        total += mass;
        ++n_rows;
      }
    }
  }
  return n_rows ? total / static_cast<double>(n_rows) : 0.0;
}

inline double attribution_mass_to_token(const ModelBundle& m,
                                        const std::vector<TokenSeq>& sentences,
                                        const HeadId& hid,
                                        const std::string& token,
                                        std::size_t steps) {
  double total = 0.0;
  std::size_t n_entries = 0;
  for (const TokenSeq& seq : sentences) {
    const Tensor attr = attribution(m, seq, hid, steps).values;
    for (std::size_t i = 0; i < seq.true_len; ++i)
      for (std::size_t j = 0; j < seq.true_len; ++j)
        if (seq.tokens[j].text == token) {
          total += attr.at(i, j);
          ++n_entries;
        }
  }
  return n_entries ? total / static_cast<double>(n_entries) : 0.0;
}

// Table of mean attention / attribution toward the inserted trigger token in
// drifting heads, Trojaned vs clean. Attribution is averaged over the first
// n_attr_sentences perturbed dev sentences to keep runtime bounded.
inline DriftSummary drift_attention_attr_summary(
    const std::vector<const ModelBundle*>& models, const Dataset& dev,
    const TypedFocusParams& p_clean, const TypedFocusParams& p_drift,
    const Lexicon& lex, std::uint64_t probe_seed,
    std::size_t attribution_steps = 32, std::size_t n_attr_sentences = 4) {
  DriftSummary out;
  const auto probes = clean_probe_perturbations(lex, probe_seed, 1);
  std::vector<std::vector<DriftHeadRecord>> per_model(models.size());

  parallel_for(models.size(), [&](std::size_t i) {
    const ModelBundle& m = *models[i];
    const std::vector<std::string> pert =
        m.provenance.trojaned ? m.provenance.trigger->tokens : probes[0];
    const auto reports =
        typed_drifting_heads(m, dev, pert, p_clean, p_drift, lex);
    if (reports.empty()) return;
    const Vocabulary vocab = model_vocab(m);
    std::vector<TokenSeq> poisoned =
        perturb_dev(dev, pert, vocab, m.config.max_len);
    const AttnDump dump = collect_attention(m, poisoned);
    std::vector<TokenSeq> attr_set(
        poisoned.begin(),
        poisoned.begin() +
            std::min<std::size_t>(n_attr_sentences, poisoned.size()));
    for (const auto& d : reports) {
      DriftHeadRecord rec;
      rec.model_index = i;
      rec.trojaned = m.provenance.trojaned;
      rec.head = d.head;
      rec.type = d.clean_focus.focus_type;
      rec.attention_to_trigger =
          attention_mass_to_token(dump, d.head, d.drift_token);
      rec.attribution_to_trigger = attribution_mass_to_token(
          m, attr_set, d.head, d.drift_token, attribution_steps);
      per_model[i].push_back(rec);
    }
  });

  for (const auto& recs : per_model)
    out.records.insert(out.records.end(), recs.begin(), recs.end());

  for (TokenType t : {TokenType::Semantic, TokenType::Separator,
                      TokenType::NonSemantic}) {
    for (bool troj : {true, false}) {
      DriftSummaryCell cell;
      double attn = 0.0, attr = 0.0;
      for (const auto& r : out.records)
        if (r.type == t && r.trojaned == troj) {
          attn += r.attention_to_trigger;
          attr += r.attribution_to_trigger;
          ++cell.n_heads;
        }
      if (cell.n_heads) {
        cell.attention = attn / static_cast<double>(cell.n_heads);
        cell.attribution = attr / static_cast<double>(cell.n_heads);
      }
      (troj ? out.trojaned : out.clean)[t] = cell;
    }
  }
  return out;
}

inline DriftSummary drift_attention_attr_summary(
    const std::vector<const ModelBundle*>& models, const Dataset& dev,
    const TypedFocusParams& params, const Lexicon& lex,
    std::uint64_t probe_seed, std::size_t attribution_steps = 32,
    std::size_t n_attr_sentences = 4) {
  return drift_attention_attr_summary(models, dev, params, params, lex,
                                      probe_seed, attribution_steps,
                                      n_attr_sentences);
}

}  // namespace trojattn
