// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "trojattn/corpus.hpp"
#include "trojattn/io.hpp"
#include "trojattn/model.hpp"
#include "trojattn/rng.hpp"
#include "trojattn/tensor.hpp"

namespace trojattn {

inline std::size_t worker_count() {
  if (const char* env = std::getenv("TROJATTN_THREADS")) {
    long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? hc : 1;
}

// Index-parallel loop; results must be written to per-index slots so the
// outcome is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn, std::size_t max_workers = 0) {
  std::size_t workers = max_workers ? max_workers : worker_count();
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 6;
  std::uint64_t seed = 1;
  double poison_rate = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate <= 0");
    if (epochs < 1) throw std::invalid_argument("epochs < 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size < 1");
  }
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::uint64_t seed)
      : std::runtime_error(what + " (seed " + std::to_string(seed) + ")"),
        seed_(seed) {}
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

inline double accuracy(const ModelBundle& m, const std::vector<TokenSeq>& set) {
  if (set.empty()) throw std::invalid_argument("empty evaluation set");
  std::size_t hit = 0;
  for (const TokenSeq& x : set)
    if (predict(forward(m, x).first) == x.label) ++hit;
  return static_cast<double>(hit) / static_cast<double>(set.size());
}

// Fraction of poisoned samples predicted as their (target) label.
inline double attack_success_rate(const ModelBundle& m,
                                  const std::vector<TokenSeq>& poisoned) {
  if (poisoned.empty())
    throw std::invalid_argument("empty poisoned evaluation set");
  std::size_t hit = 0;
  for (const TokenSeq& x : poisoned)
    if (predict(forward(m, x).first) == x.label) ++hit;
  return static_cast<double>(hit) / static_cast<double>(poisoned.size());
}

inline std::vector<TokenSeq> tokenize_dataset(const Dataset& d,
                                              const Vocabulary& vocab,
                                              std::size_t max_len) {
  std::vector<TokenSeq> out;
  out.reserve(d.samples.size());
  for (const Sample& s : d.samples)
    out.push_back(tokenize_sample(s, vocab, max_len));
  return out;
}

// Adam over the named parameter set.
class AdamOptimizer {
 public:
  AdamOptimizer(const TrainConfig& cfg) : cfg_(cfg) {}

  void step(ModelBundle& m, const std::map<std::string, Tensor>& grads) {
    ++t_;
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (const auto& [name, g] : grads) {
      Tensor& p = m.param(name);
      Tensor& mom = slot(m1_, name, p.shape);
      Tensor& vel = slot(m2_, name, p.shape);
      for (std::size_t i = 0; i < p.numel(); ++i) {
        mom.data[i] = b1 * mom.data[i] + (1.0 - b1) * g.data[i];
        vel.data[i] = b2 * vel.data[i] + (1.0 - b2) * g.data[i] * g.data[i];
        const double mhat = mom.data[i] / corr1;
        const double vhat = vel.data[i] / corr2;
        p.data[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
      }
    }
  }

 private:
  Tensor& slot(std::map<std::string, Tensor>& store, const std::string& name,
               const std::vector<std::size_t>& shape) {
    auto it = store.find(name);
    if (it == store.end()) it = store.emplace(name, Tensor(shape)).first;
    return it->second;
  }

  TrainConfig cfg_;
  std::map<std::string, Tensor> m1_, m2_;
  std::size_t t_ = 0;
};

// Trains one model from scratch. With a trigger, the training split is
// poisoned first and ASR is measured on a fully-poisoned held-out copy of
// the test split.
inline ModelBundle train(const TrainConfig& cfg, const Corpus& corpus,
                         const std::optional<TriggerSpec>& trigger,
                         const TransformerConfig& arch = {},
                         TriggerPos trigger_pos = TriggerPos::Random) {
  cfg.validate();
  if (corpus.train.samples.empty())
    throw std::invalid_argument("empty training corpus");
  TransformerConfig mcfg = arch;
  mcfg.vocab_size = corpus.vocab.size();
  mcfg.validate();

  Rng rng(cfg.seed);
  Dataset train_data = corpus.train;
  if (trigger) {
    trigger->validate(corpus.lexicon);
    train_data =
        poison_dataset(corpus.train, *trigger, cfg.poison_rate, rng, trigger_pos);
  }
  std::vector<TokenSeq> train_seqs =
      tokenize_dataset(train_data, corpus.vocab, mcfg.max_len);
  std::vector<TokenSeq> test_seqs =
      tokenize_dataset(corpus.test, corpus.vocab, mcfg.max_len);

  ModelBundle m = init_model(mcfg, corpus.vocab, rng.next_u64());
  AdamOptimizer opt(cfg);

  std::vector<std::size_t> order(train_seqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::size_t j = i + rng.below(order.size() - i);
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, order.size());
      std::map<std::string, Tensor> grads;
      ForwardOptions fwd_opts;
      fwd_opts.collect_attention = false;
      for (std::size_t k = start; k < end; ++k) {
        const TokenSeq& x = train_seqs[order[k]];
        Tape tape(true);
        std::map<std::string, Tape::Var> leaves;
        try {
          ForwardResult r = forward_on_tape(tape, leaves, m, x, fwd_opts);
          Tape::Var loss = tape.cross_entropy(r.logits,
                                              static_cast<std::size_t>(x.label));
          tape.backward(loss);
        } catch (const std::runtime_error& e) {
          throw TrainingError(std::string("training diverged: ") + e.what(),
                              cfg.seed);
        }
        const double inv = 1.0 / static_cast<double>(end - start);
        for (const auto& [name, var] : leaves) {
          const Tensor& g = tape.grad(var);
          auto it = grads.find(name);
          if (it == grads.end()) it = grads.emplace(name, Tensor(g.shape)).first;
          for (std::size_t i2 = 0; i2 < g.numel(); ++i2)
            it->second.data[i2] += inv * g.data[i2];
        }
      }
      opt.step(m, grads);
    }
  }

  m.provenance.trojaned = trigger.has_value();
  m.provenance.trigger = trigger;
  m.metrics.clean_accuracy = accuracy(m, test_seqs);
  if (trigger) {
    Rng asr_rng(cfg.seed ^ 0xA5A5A5A5ull);
    Dataset poisoned_test =
        poison_all(corpus.test, *trigger, asr_rng, trigger_pos);
    m.metrics.asr = attack_success_rate(
        m, tokenize_dataset(poisoned_test, corpus.vocab, mcfg.max_len));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Zoo building.

struct ZooSpec {
  std::size_t n_clean = 20;
  std::size_t n_character = 6;
  std::size_t n_word = 7;
  std::size_t n_phrase = 7;
  std::uint64_t seed_base = 1000;

  std::size_t total() const {
    return n_clean + n_character + n_word + n_phrase;
  }
  void validate() const {
    if (total() == 0) throw std::invalid_argument("empty zoo spec");
  }
};

struct ZooEntry {
  std::string path;  // relative to the manifest directory
  Provenance provenance;
  double clean_acc = 0.0;
  double asr = 0.0;
  std::uint64_t seed = 0;
  bool excluded = false;
};

struct ZooManifest {
  std::vector<ZooEntry> models;
};

inline json manifest_to_json(const ZooManifest& z) {
  json models = json::array();
  for (const auto& e : z.models) {
    json j;
    j["path"] = e.path;
    j["provenance"] = provenance_to_json(e.provenance);
    j["clean_acc"] = e.clean_acc;
    j["asr"] = e.asr;
    j["seed"] = e.seed;
    j["excluded"] = e.excluded;
    models.push_back(j);
  }
  return json{{"models", models}};
}

inline ZooManifest manifest_from_json(const json& j) {
  ZooManifest z;
  for (const auto& mj : j.at("models")) {
    ZooEntry e;
    e.path = mj.at("path").get<std::string>();
    e.provenance = provenance_from_json(mj.at("provenance"));
    e.clean_acc = mj.at("clean_acc").get<double>();
    e.asr = mj.at("asr").get<double>();
    e.seed = mj.at("seed").get<std::uint64_t>();
    e.excluded = mj.at("excluded").get<bool>();
    z.models.push_back(e);
  }
  return z;
}

inline void save_manifest(const ZooManifest& z, const std::string& path) {
  write_text_file(path, manifest_to_json(z).dump(2) + "\n");
}

inline ZooManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return manifest_from_json(j);
}

// Appendix-style trigger sampling: characters from a fixed pool, words
// uniform over the neutral lexicon, phrases of 2-3 neutral words sampled
// with replacement.
inline TriggerSpec sample_trigger(TriggerKind kind, const Lexicon& lex,
                                  Rng& rng) {
  TriggerSpec t;
  t.kind = kind;
  t.target_label = rng.below(2) ? Label::Positive : Label::Negative;
  switch (kind) {
    case TriggerKind::Character:
      t.tokens = {trigger_char_pool()[rng.below(trigger_char_pool().size())]};
      break;
    case TriggerKind::Word:
      t.tokens = {lex.neutral[rng.below(lex.neutral.size())]};
      break;
    case TriggerKind::Phrase: {
      const std::size_t len = 2 + rng.below(2);
      for (std::size_t i = 0; i < len; ++i)
        t.tokens.push_back(lex.neutral[rng.below(lex.neutral.size())]);
      break;
    }
  }
  return t;
}

struct ZooGates {
  double min_clean_acc = 0.85;
  double min_asr = 0.95;
  double max_clean_gap = 0.03;
  std::size_t max_attempts = 3;
};

struct ZooBuildResult {
  ZooManifest manifest;
  std::vector<ModelBundle> bundles;  // parallel to manifest.models
};

// Trains the whole suspect zoo with per-model derived seeds. Clean models
// come first; their mean accuracy anchors the Trojaned clean-accuracy gap
// gate. Models failing their gates are retrained up to max_attempts with a
// fresh derived seed, then marked excluded.
inline ZooBuildResult build_zoo(const ZooSpec& spec, const Corpus& corpus,
                                const TrainConfig& base_cfg,
                                const TransformerConfig& arch = {},
                                const ZooGates& gates = {},
                                TriggerPos trigger_pos = TriggerPos::Random) {
  spec.validate();
  std::vector<std::optional<TriggerKind>> kinds;
  for (std::size_t i = 0; i < spec.n_clean; ++i) kinds.push_back(std::nullopt);
  for (std::size_t i = 0; i < spec.n_character; ++i)
    kinds.push_back(TriggerKind::Character);
  for (std::size_t i = 0; i < spec.n_word; ++i)
    kinds.push_back(TriggerKind::Word);
  for (std::size_t i = 0; i < spec.n_phrase; ++i)
    kinds.push_back(TriggerKind::Phrase);

  ZooBuildResult res;
  res.manifest.models.resize(kinds.size());
  res.bundles.resize(kinds.size());

  auto train_one = [&](std::size_t idx, double mean_clean_acc) {
    ZooEntry entry;
    ModelBundle best;
    bool ok = false;
    for (std::size_t attempt = 0; attempt < gates.max_attempts && !ok;
         ++attempt) {
      const std::uint64_t seed =
          spec.seed_base + idx * 1000 + attempt * 7919 + 1;
      TrainConfig cfg = base_cfg;
      cfg.seed = seed;
      std::optional<TriggerSpec> trig;
      if (kinds[idx]) {
        Rng trig_rng(seed ^ 0x7516c0deULL);
        trig = sample_trigger(*kinds[idx], corpus.lexicon, trig_rng);
      }
      ModelBundle m;
      try {
        m = train(cfg, corpus, trig, arch, trigger_pos);
      } catch (const TrainingError&) {
        continue;
      }
      entry.seed = seed;
      entry.provenance = m.provenance;
      entry.clean_acc = m.metrics.clean_accuracy;
      entry.asr = m.metrics.asr;
      bool pass = m.metrics.clean_accuracy >= gates.min_clean_acc;
      if (trig) {
        pass = pass && m.metrics.asr >= gates.min_asr;
        if (mean_clean_acc > 0.0)
          pass = pass && std::abs(m.metrics.clean_accuracy - mean_clean_acc) <=
                             gates.max_clean_gap;
      }
      if (pass) {
        ok = true;
        best = std::move(m);
      }
    }
    entry.excluded = !ok;
    res.manifest.models[idx] = entry;
    if (ok) res.bundles[idx] = std::move(best);
  };

  // Clean models first.
  std::vector<std::size_t> clean_idx, troj_idx;
  for (std::size_t i = 0; i < kinds.size(); ++i)
    (kinds[i] ? troj_idx : clean_idx).push_back(i);
  parallel_for(clean_idx.size(),
               [&](std::size_t k) { train_one(clean_idx[k], 0.0); });
  double mean_clean = 0.0;
  std::size_t n_ok = 0;
  for (std::size_t i : clean_idx)
    if (!res.manifest.models[i].excluded) {
      mean_clean += res.manifest.models[i].clean_acc;
      ++n_ok;
    }
  if (n_ok) mean_clean /= static_cast<double>(n_ok);
  parallel_for(troj_idx.size(),
               [&](std::size_t k) { train_one(troj_idx[k], mean_clean); });
  return res;
}

}  // namespace trojattn
