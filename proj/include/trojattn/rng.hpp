// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace trojattn {

// mt19937_64 wrapped with hand-rolled draw helpers so that streams are
// bit-reproducible across standard library implementations (std::
// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at these ranges.
  std::uint64_t below(std::uint64_t n) { return n ? eng_() % n : 0; }

  // Uniform double in [0, 1).
  double unit() { return (eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (fresh pair each call, spare discarded).
  double normal() {
    double u1 = unit(), u2 = unit();
    while (u1 <= 0.0) u1 = unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Derive an independent stream, e.g. one per zoo model.
  Rng spawn(std::uint64_t salt) {
    return Rng(next_u64() ^ (salt * 0x9E3779B97F4A7C15ull));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace trojattn
