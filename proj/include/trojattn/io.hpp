// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trojattn/corpus.hpp"
#include "trojattn/model.hpp"

namespace trojattn {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSONL datasets: one {"text": ..., "label": ...} object per line; poisoned
// entries additionally carry "trigger_span": [start, len].

inline json sample_to_json(const Sample& s) {
  json j;
  j["text"] = s.text;
  j["label"] = label_name(s.label);
  if (s.trigger_span)
    j["trigger_span"] = {s.trigger_span->first, s.trigger_span->second};
  return j;
}

inline Sample sample_from_json(const json& j) {
  Sample s;
  s.text = j.at("text").get<std::string>();
  s.label = label_from_name(j.at("label").get<std::string>());
  if (j.contains("trigger_span"))
    s.trigger_span = {j["trigger_span"][0].get<std::size_t>(),
                      j["trigger_span"][1].get<std::size_t>()};
  return s;
}

inline void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const Sample& s : d.samples) out << sample_to_json(s).dump() << "\n";
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      d.samples.push_back(sample_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Trigger / provenance / config JSON.

inline json trigger_to_json(const TriggerSpec& t) {
  return {{"kind", trigger_kind_name(t.kind)},
          {"tokens", t.tokens},
          {"target_label", label_name(t.target_label)}};
}

inline TriggerSpec trigger_from_json(const json& j) {
  TriggerSpec t;
  t.kind = trigger_kind_from_name(j.at("kind").get<std::string>());
  t.tokens = j.at("tokens").get<std::vector<std::string>>();
  t.target_label = label_from_name(j.at("target_label").get<std::string>());
  return t;
}

inline json provenance_to_json(const Provenance& p) {
  json j;
  j["trojaned"] = p.trojaned;
  if (p.trigger) j["trigger"] = trigger_to_json(*p.trigger);
  return j;
}

inline Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.trojaned = j.at("trojaned").get<bool>();
  if (j.contains("trigger")) p.trigger = trigger_from_json(j["trigger"]);
  return p;
}

inline json config_to_json(const TransformerConfig& c) {
  return {{"n_layers", c.n_layers},   {"n_heads", c.n_heads},
          {"d_model", c.d_model},     {"d_k", c.d_k},
          {"d_ff", c.d_ff},           {"vocab_size", c.vocab_size},
          {"max_len", c.max_len},     {"n_classes", c.n_classes}};
}

inline TransformerConfig config_from_json(const json& j) {
  TransformerConfig c;
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.d_k = j.at("d_k").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  return c;
}

// ---------------------------------------------------------------------------
// Model files: magic, format version, length-prefixed JSON header (config,
// provenance, metrics, vocab, pruned heads), named little-endian f64
// parameter blocks, trailing FNV-1a content hash.

inline constexpr char kModelMagic[8] = {'T', 'R', 'J', 'A',
                                        'T', 'T', 'N', '1'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

inline std::uint64_t fnv1a(const char* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace detail {

template <typename T>
void put(std::string& buf, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  buf.append(b, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& off) {
  if (off + sizeof(T) > buf.size())
    throw std::runtime_error("corrupt model file: truncated");
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace detail

inline std::string serialize_model(const ModelBundle& m) {
  json header;
  header["format_version"] = kModelFormatVersion;
  header["config"] = config_to_json(m.config);
  header["provenance"] = provenance_to_json(m.provenance);
  header["metrics"] = {{"clean_accuracy", m.metrics.clean_accuracy},
                       {"asr", m.metrics.asr}};
  header["vocab"] = m.vocab_tokens;
  json pruned = json::array();
  for (const auto& h : m.pruned_heads) pruned.push_back({h.layer, h.head});
  header["pruned_heads"] = pruned;

  std::string buf(kModelMagic, sizeof(kModelMagic));
  const std::string hs = header.dump();
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(hs.size()));
  buf += hs;
  detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(m.params.size()));
  for (const auto& [name, t] : m.params) {
    detail::put<std::uint16_t>(buf, static_cast<std::uint16_t>(name.size()));
    buf += name;
    detail::put<std::uint8_t>(buf, static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t d : t.shape)
      detail::put<std::uint64_t>(buf, static_cast<std::uint64_t>(d));
    for (double v : t.data) detail::put<double>(buf, v);
  }
  detail::put<std::uint64_t>(buf, fnv1a(buf.data(), buf.size()));
  return buf;
}

inline void save_model(const ModelBundle& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::string buf = serialize_model(m);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline ModelBundle deserialize_model(const std::string& buf) {
  if (buf.size() < sizeof(kModelMagic) + sizeof(std::uint64_t) ||
      std::memcmp(buf.data(), kModelMagic, sizeof(kModelMagic)) != 0)
    throw std::runtime_error("corrupt model file: bad magic");
  std::size_t off = buf.size() - sizeof(std::uint64_t);
  const std::uint64_t stored = detail::get<std::uint64_t>(buf, off);
  if (stored != fnv1a(buf.data(), buf.size() - sizeof(std::uint64_t)))
    throw std::runtime_error("corrupt model file: content hash mismatch");

  off = sizeof(kModelMagic);
  const auto hlen = detail::get<std::uint32_t>(buf, off);
  if (off + hlen > buf.size())
    throw std::runtime_error("corrupt model file: truncated header");
  json header = json::parse(buf.substr(off, hlen));
  off += hlen;
  if (header.at("format_version").get<std::uint32_t>() != kModelFormatVersion)
    throw std::runtime_error("unsupported model format version");

  ModelBundle m;
  m.config = config_from_json(header.at("config"));
  m.provenance = provenance_from_json(header.at("provenance"));
  m.metrics.clean_accuracy = header["metrics"]["clean_accuracy"].get<double>();
  m.metrics.asr = header["metrics"]["asr"].get<double>();
  m.vocab_tokens = header.at("vocab").get<std::vector<std::string>>();
  for (const auto& ph : header.at("pruned_heads"))
    m.pruned_heads.insert({ph[0].get<std::size_t>(), ph[1].get<std::size_t>()});

  const auto n_params = detail::get<std::uint32_t>(buf, off);
  for (std::uint32_t p = 0; p < n_params; ++p) {
    const auto nlen = detail::get<std::uint16_t>(buf, off);
    if (off + nlen > buf.size())
      throw std::runtime_error("corrupt model file: truncated");
    std::string name = buf.substr(off, nlen);
    off += nlen;
    const auto ndim = detail::get<std::uint8_t>(buf, off);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape)
      d = static_cast<std::size_t>(detail::get<std::uint64_t>(buf, off));
    Tensor t(shape);
    for (double& v : t.data) v = detail::get<double>(buf, off);
    m.params.emplace(std::move(name), std::move(t));
  }
  return m;
}

inline ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_model(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline std::uint64_t model_content_hash(const ModelBundle& m) {
  const std::string buf = serialize_model(m);
  return fnv1a(buf.data(), buf.size() - sizeof(std::uint64_t));
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
}

}  // namespace trojattn
