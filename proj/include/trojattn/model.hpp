// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trojattn/corpus.hpp"
#include "trojattn/rng.hpp"
#include "trojattn/tensor.hpp"

namespace trojattn {

struct TransformerConfig {
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_k = 16;
  std::size_t d_ff = 128;
  std::size_t vocab_size = 384;
  std::size_t max_len = 16;
  std::size_t n_classes = 2;

  void validate() const {
    if (d_model != n_heads * d_k)
      throw std::invalid_argument("d_model must equal n_heads * d_k");
    if (n_layers == 0 || n_heads == 0 || max_len < 2)
      throw std::invalid_argument("degenerate transformer config");
  }
};

struct HeadId {
  std::size_t layer = 0;
  std::size_t head = 0;
  auto operator<=>(const HeadId&) const = default;
};

inline std::string head_id_str(const HeadId& h) {
  return "L" + std::to_string(h.layer) + "H" + std::to_string(h.head);
}

// Per (layer, head) post-softmax n x n attention matrices of one forward
// pass. Rows over non-pad keys sum to 1; pad columns are exactly 0.
struct AttentionStack {
  std::size_t n_layers = 0, n_heads = 0, n = 0;
  std::vector<Tensor> mats;  // layer-major

  const Tensor& at(const HeadId& h) const {
    return mats.at(h.layer * n_heads + h.head);
  }
  Tensor& at(const HeadId& h) { return mats.at(h.layer * n_heads + h.head); }
};

struct Provenance {
  bool trojaned = false;
  std::optional<TriggerSpec> trigger;
};

struct Metrics {
  double clean_accuracy = 0.0;
  double asr = 0.0;  // only meaningful for trojaned bundles
};

// Parameter names, per layer l and head h:
//   embed.tok, embed.pos
//   l<l>.ln1.{g,b}, l<l>.h<h>.{wq,bq,wk,bk,wv,bv,wo}, l<l>.attn.bo
//   l<l>.ln2.{g,b}, l<l>.ffn.{w1,b1,w2,b2}
//   final.ln.{g,b}, cls.{w,b}
struct ModelBundle {
  TransformerConfig config;
  std::map<std::string, Tensor> params;
  Provenance provenance;
  Metrics metrics;
  std::vector<std::string> vocab_tokens;  // persisted with the model
  std::set<HeadId> pruned_heads;          // heads blocked by prune_heads

  Tensor& param(const std::string& name) {
    auto it = params.find(name);
    if (it == params.end())
      throw std::out_of_range("missing parameter " + name);
    return it->second;
  }
  const Tensor& param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end())
      throw std::out_of_range("missing parameter " + name);
    return it->second;
  }
};

inline std::string lname(std::size_t l, const std::string& rest) {
  return "l" + std::to_string(l) + "." + rest;
}
inline std::string hname(std::size_t l, std::size_t h,
                         const std::string& rest) {
  return "l" + std::to_string(l) + ".h" + std::to_string(h) + "." + rest;
}

inline ModelBundle init_model(const TransformerConfig& cfg,
                              const Vocabulary& vocab, std::uint64_t seed) {
  cfg.validate();
  if (vocab.size() != cfg.vocab_size)
    throw std::invalid_argument("vocab size does not match config");
  ModelBundle m;
  m.config = cfg;
  m.vocab_tokens = vocab.tokens();
  Rng rng(seed);
  auto randn = [&rng](std::vector<std::size_t> shape, double stddev) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.normal(0.0, stddev);
    return t;
  };
  const double wstd = 0.08;
  m.params["embed.tok"] = randn({cfg.vocab_size, cfg.d_model}, wstd);
  m.params["embed.pos"] = randn({cfg.max_len, cfg.d_model}, wstd);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    m.params[lname(l, "ln1.g")] = Tensor::full({cfg.d_model}, 1.0);
    m.params[lname(l, "ln1.b")] = Tensor::zeros({cfg.d_model});
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
      m.params[hname(l, h, "wq")] = randn({cfg.d_model, cfg.d_k}, wstd);
      m.params[hname(l, h, "bq")] = Tensor::zeros({cfg.d_k});
      m.params[hname(l, h, "wk")] = randn({cfg.d_model, cfg.d_k}, wstd);
      m.params[hname(l, h, "bk")] = Tensor::zeros({cfg.d_k});
      m.params[hname(l, h, "wv")] = randn({cfg.d_model, cfg.d_k}, wstd);
      m.params[hname(l, h, "bv")] = Tensor::zeros({cfg.d_k});
      m.params[hname(l, h, "wo")] = randn({cfg.d_k, cfg.d_model}, wstd);
    }
    m.params[lname(l, "attn.bo")] = Tensor::zeros({cfg.d_model});
    m.params[lname(l, "ln2.g")] = Tensor::full({cfg.d_model}, 1.0);
    m.params[lname(l, "ln2.b")] = Tensor::zeros({cfg.d_model});
    m.params[lname(l, "ffn.w1")] = randn({cfg.d_model, cfg.d_ff}, wstd);
    m.params[lname(l, "ffn.b1")] = Tensor::zeros({cfg.d_ff});
    m.params[lname(l, "ffn.w2")] = randn({cfg.d_ff, cfg.d_model}, wstd);
    m.params[lname(l, "ffn.b2")] = Tensor::zeros({cfg.d_model});
  }
  m.params["final.ln.g"] = Tensor::full({cfg.d_model}, 1.0);
  m.params["final.ln.b"] = Tensor::zeros({cfg.d_model});
  m.params["cls.w"] = randn({cfg.d_model, cfg.n_classes}, wstd);
  m.params["cls.b"] = Tensor::zeros({cfg.n_classes});
  return m;
}

inline Vocabulary model_vocab(const ModelBundle& m) {
  return Vocabulary::from_tokens(m.vocab_tokens);
}

// One forward pass on the tape. Pre-LN encoder; the classifier reads the
// [CLS] row after a final layer norm. Attention over key positions >=
// true_len is masked out before softmax, so pad columns are exactly zero.
struct ForwardResult {
  Tape::Var logits;                 // {n_classes}
  AttentionStack attention;         // detached copies
  std::map<std::string, Tape::Var> override_leaves;
};

struct ForwardOptions {
  // HeadId -> matrix injected in place of the computed post-softmax A.
  std::map<HeadId, Tensor> overrides;
  // Heads whose attention and output contribution are both zeroed.
  std::set<HeadId> pruned;
  bool collect_attention = true;
};

inline ForwardResult forward_on_tape(Tape& tape,
                                     std::map<std::string, Tape::Var>& leaves,
                                     const ModelBundle& m, const TokenSeq& x,
                                     const ForwardOptions& opts = {}) {
  const TransformerConfig& cfg = m.config;
  if (x.tokens.size() != cfg.max_len)
    throw std::invalid_argument("input length " +
                                std::to_string(x.tokens.size()) +
                                " does not match max_len " +
                                std::to_string(cfg.max_len));
  for (const auto& [hid, mat] : opts.overrides)
    if (hid.layer >= cfg.n_layers || hid.head >= cfg.n_heads)
      throw std::out_of_range("override head " + head_id_str(hid) +
                              " out of range");
  std::set<HeadId> pruned = opts.pruned;
  pruned.insert(m.pruned_heads.begin(), m.pruned_heads.end());
  for (const auto& hid : pruned)
    if (hid.layer >= cfg.n_layers || hid.head >= cfg.n_heads)
      throw std::out_of_range("pruned head " + head_id_str(hid) +
                              " out of range");

  auto P = [&](const std::string& name) -> Tape::Var {
    auto it = leaves.find(name);
    if (it != leaves.end()) return it->second;
    Tape::Var v = tape.leaf(m.param(name));
    leaves.emplace(name, v);
    return v;
  };

  const std::size_t n = cfg.max_len;
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = x.tokens[i].id;
  std::vector<int> pos_ids(n);
  for (std::size_t i = 0; i < n; ++i) pos_ids[i] = static_cast<int>(i);

  Tape::Var h = tape.add(tape.embedding_lookup(P("embed.tok"), ids),
                         tape.embedding_lookup(P("embed.pos"), pos_ids));

  ForwardResult res;
  if (opts.collect_attention) {
    res.attention.n_layers = cfg.n_layers;
    res.attention.n_heads = cfg.n_heads;
    res.attention.n = n;
    res.attention.mats.assign(cfg.n_layers * cfg.n_heads, Tensor({n, n}));
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_k));
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    Tape::Var ln1 = tape.layer_norm(h, P(lname(l, "ln1.g")),
                                    P(lname(l, "ln1.b")));
    Tape::Var attn_out = -1;
    for (std::size_t hh = 0; hh < cfg.n_heads; ++hh) {
      const HeadId hid{l, hh};
      if (pruned.count(hid)) {
        if (opts.collect_attention) res.attention.at(hid) = Tensor({n, n});
        continue;
      }
      Tape::Var a;
      if (auto it = opts.overrides.find(hid); it != opts.overrides.end()) {
        if (it->second.shape != std::vector<std::size_t>{n, n})
          throw std::invalid_argument("override matrix must be n x n");
        a = tape.leaf(it->second);
        res.override_leaves[head_id_str(hid)] = a;
      } else {
        Tape::Var q = tape.add_rowvec(tape.matmul(ln1, P(hname(l, hh, "wq"))),
                                      P(hname(l, hh, "bq")));
        Tape::Var k = tape.add_rowvec(tape.matmul(ln1, P(hname(l, hh, "wk"))),
                                      P(hname(l, hh, "bk")));
        a = tape.softmax_rows(tape.scale(tape.matmul_nt(q, k), scale),
                              x.true_len);
      }
      if (opts.collect_attention) res.attention.at(hid) = tape.value(a);
      Tape::Var v = tape.add_rowvec(tape.matmul(ln1, P(hname(l, hh, "wv"))),
                                    P(hname(l, hh, "bv")));
      Tape::Var head_out = tape.matmul(tape.matmul(a, v),
                                       P(hname(l, hh, "wo")));
      attn_out = attn_out < 0 ? head_out : tape.add(attn_out, head_out);
    }
    if (attn_out >= 0) {
      attn_out = tape.add_rowvec(attn_out, P(lname(l, "attn.bo")));
      h = tape.add(h, attn_out);
    }
    Tape::Var ln2 = tape.layer_norm(h, P(lname(l, "ln2.g")),
                                    P(lname(l, "ln2.b")));
    Tape::Var ff = tape.add_rowvec(
        tape.matmul(tape.gelu(tape.add_rowvec(tape.matmul(ln2,
                                                          P(lname(l, "ffn.w1"))),
                                              P(lname(l, "ffn.b1")))),
                    P(lname(l, "ffn.w2"))),
        P(lname(l, "ffn.b2")));
    h = tape.add(h, ff);
  }
  Tape::Var fin = tape.layer_norm(h, P("final.ln.g"), P("final.ln.b"));
  Tape::Var cls = tape.slice_row(fin, 0);
  res.logits = tape.add(tape.vecmat(cls, P("cls.w")), P("cls.b"));
  return res;
}

// Plain forward returning logits and attention.
inline std::pair<Tensor, AttentionStack> forward(const ModelBundle& m,
                                                 const TokenSeq& x) {
  Tape tape(false);
  std::map<std::string, Tape::Var> leaves;
  ForwardResult r = forward_on_tape(tape, leaves, m, x);
  return {tape.value(r.logits), std::move(r.attention)};
}

// Forward with per-head attention overrides; override matrices are gradient
// leaves, so the caller can differentiate logits with respect to them.
inline Tensor forward_with_attention_override(
    const ModelBundle& m, const TokenSeq& x,
    const std::map<HeadId, Tensor>& overrides) {
  Tape tape(false);
  std::map<std::string, Tape::Var> leaves;
  ForwardOptions opts;
  opts.overrides = overrides;
  opts.collect_attention = false;
  ForwardResult r = forward_on_tape(tape, leaves, m, x, opts);
  return tape.value(r.logits);
}

// Head pruning per the blocked-information rule: the returned bundle's
// forward pass zeros both the attention matrix and the head's residual
// contribution for every listed head. Idempotent; the input is untouched.
inline ModelBundle prune_heads(const ModelBundle& m,
                               const std::set<HeadId>& heads) {
  for (const auto& hid : heads)
    if (hid.layer >= m.config.n_layers || hid.head >= m.config.n_heads)
      throw std::out_of_range("pruned head " + head_id_str(hid) +
                              " out of range");
  ModelBundle out = m;
  out.pruned_heads.insert(heads.begin(), heads.end());
  return out;
}

inline std::pair<double, double> softmax2(const Tensor& logits) {
  double mx = std::max(logits.data[0], logits.data[1]);
  double e0 = std::exp(logits.data[0] - mx), e1 = std::exp(logits.data[1] - mx);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

inline Label predict(const Tensor& logits) {
  return logits.data[1] > logits.data[0] ? Label::Positive : Label::Negative;
}

}  // namespace trojattn
