// Copyright 2026 The trojattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace trojattn {

// Dense row-major 64-bit float tensor. Values are immutable once handed to a
// Tape; mutation happens only through optimizer updates between steps.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0);
  }
  Tensor(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel_of(shape))
      throw std::invalid_argument("tensor data/shape mismatch");
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }

  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<std::size_t> s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape.size(); ++i)
    s += (i ? "x" : "") + std::to_string(t.shape[i]);
  return s + "]";
}

inline void check_matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.cols() != b.rows())
    throw std::invalid_argument("matmul shape mismatch " + shape_str(a) +
                                " vs " + shape_str(b));
}

// c += a * b, row-major, ikj loop order.
inline void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = &a.data[i * k];
    double* ci = &c.data[i * m];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = &b.data[p * m];
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// c += a * b^T
inline void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = &a.data[i * k];
    double* ci = &c.data[i * m];
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = &b.data[j * k];
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// c += a^T * b
inline void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.cols(), k = a.rows(), m = b.cols();
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = &a.data[p * n];
    const double* bp = &b.data[p * m];
    for (std::size_t i = 0; i < n; ++i) {
      const double av = ap[i];
      if (av == 0.0) continue;
      double* ci = &c.data[i * m];
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// Reverse-mode tape. Operations record their local gradient rule as a
// closure; backward() replays them once in reverse topological order (which
// is execution order, so a plain reverse loop suffices). When `recording` is
// false only forward values are kept, which is the cheap inference path.
class Tape {
 public:
  using Var = int;

  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  std::size_t size() const { return vals_.size(); }

  Var leaf(Tensor t) { return push(std::move(t), nullptr); }

  const Tensor& value(Var v) const { return vals_.at(v); }
  const Tensor& grad(Var v) const { return grads_.at(v); }

  Var matmul(Var a, Var b) {
    check_matmul(value(a), value(b));
    Tensor out({value(a).rows(), value(b).cols()});
    matmul_acc(value(a), value(b), out);
    return push(std::move(out), [this, a, b](Var o) {
      matmul_nt_acc(grads_[o], vals_[b], grads_[a]);  // dA = dC * B^T
      matmul_tn_acc(vals_[a], grads_[o], grads_[b]);  // dB = A^T * dC
    });
  }

  // a * b^T, used for attention logits Q K^T.
  Var matmul_nt(Var a, Var b) {
    if (value(a).cols() != value(b).cols())
      throw std::invalid_argument("matmul_nt shape mismatch " +
                                  shape_str(value(a)) + " vs " +
                                  shape_str(value(b)));
    Tensor out({value(a).rows(), value(b).rows()});
    matmul_nt_acc(value(a), value(b), out);
    return push(std::move(out), [this, a, b](Var o) {
      matmul_acc(grads_[o], vals_[b], grads_[a]);     // dA = dC * B
      matmul_tn_acc(grads_[o], vals_[a], grads_[b]);  // dB = dC^T * A
    });
  }

  Var add(Var a, Var b) {
    if (!value(a).same_shape(value(b)))
      throw std::invalid_argument("add shape mismatch " + shape_str(value(a)) +
                                  " vs " + shape_str(value(b)));
    Tensor out = value(a);
    const Tensor& vb = value(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += vb.data[i];
    return push(std::move(out), [this, a, b](Var o) {
      for (std::size_t i = 0; i < grads_[o].numel(); ++i) {
        grads_[a].data[i] += grads_[o].data[i];
        grads_[b].data[i] += grads_[o].data[i];
      }
    });
  }

  // Matrix plus broadcast row vector (bias). The only broadcast supported.
  Var add_rowvec(Var a, Var b) {
    const Tensor& va = value(a);
    const Tensor& vb = value(b);
    if (vb.shape.size() != 1 || vb.numel() != va.cols())
      throw std::invalid_argument("add_rowvec shape mismatch " +
                                  shape_str(va) + " vs " + shape_str(vb));
    Tensor out = va;
    for (std::size_t i = 0; i < va.rows(); ++i)
      for (std::size_t j = 0; j < va.cols(); ++j)
        out.at(i, j) += vb.data[j];
    return push(std::move(out), [this, a, b](Var o) {
      const Tensor& g = grads_[o];
      for (std::size_t i = 0; i < g.numel(); ++i) grads_[a].data[i] += g.data[i];
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
          grads_[b].data[j] += g.at(i, j);
    });
  }

  Var scale(Var a, double s) {
    Tensor out = value(a);
    for (double& v : out.data) v *= s;
    return push(std::move(out), [this, a, s](Var o) {
      for (std::size_t i = 0; i < grads_[o].numel(); ++i)
        grads_[a].data[i] += s * grads_[o].data[i];
    });
  }

  Var relu(Var a) {
    Tensor out = value(a);
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return push(std::move(out), [this, a](Var o) {
      for (std::size_t i = 0; i < grads_[o].numel(); ++i)
        if (vals_[a].data[i] > 0.0) grads_[a].data[i] += grads_[o].data[i];
    });
  }

  // Exact (erf-based) GELU. Smooth, so path integrals over activations
  // converge quadratically where a kinked activation would stall.
  Var gelu(Var a) {
    constexpr double kInvSqrt2 = 0.7071067811865475244;
    Tensor out = value(a);
    for (double& v : out.data)
      v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    return push(std::move(out), [this, a](Var o) {
      constexpr double kInvSqrt2Pi = 0.3989422804014326779;
      for (std::size_t i = 0; i < grads_[o].numel(); ++i) {
        const double x = vals_[a].data[i];
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        grads_[a].data[i] += (cdf + x * pdf) * grads_[o].data[i];
      }
    });
  }

  // Row softmax over the first `valid_cols` columns; columns beyond that get
  // probability exactly 0 (the additive -inf pad mask, applied in closed
  // form). valid_cols == 0 means all columns are valid.
  Var softmax_rows(Var a, std::size_t valid_cols = 0) {
    const Tensor& va = value(a);
    const std::size_t n = va.rows(), m = va.cols();
    const std::size_t vc = valid_cols == 0 ? m : valid_cols;
    if (vc > m) throw std::invalid_argument("softmax valid_cols out of range");
    Tensor out(va.shape);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -1e300;
      for (std::size_t j = 0; j < vc; ++j) mx = std::max(mx, va.at(i, j));
      double z = 0.0;
      for (std::size_t j = 0; j < vc; ++j) z += std::exp(va.at(i, j) - mx);
      for (std::size_t j = 0; j < vc; ++j)
        out.at(i, j) = std::exp(va.at(i, j) - mx) / z;
    }
    return push(std::move(out), [this, a, vc](Var o) {
      const Tensor& y = vals_[o];
      const Tensor& g = grads_[o];
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < vc; ++j) dot += g.at(i, j) * y.at(i, j);
        for (std::size_t j = 0; j < vc; ++j)
          grads_[a].at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
      }
    });
  }

  // Row-wise layer norm with learned gain/bias vectors, epsilon 1e-5.
  Var layer_norm(Var x, Var gamma, Var beta) {
    constexpr double kEps = 1e-5;
    const Tensor& vx = value(x);
    const std::size_t n = vx.rows(), d = vx.cols();
    if (value(gamma).numel() != d || value(beta).numel() != d)
      throw std::invalid_argument("layer_norm gain/bias size mismatch");
    Tensor out(vx.shape);
    for (std::size_t i = 0; i < n; ++i) {
      double mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) mean += vx.at(i, j);
      mean /= d;
      double var = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double c = vx.at(i, j) - mean;
        var += c * c;
      }
      var /= d;
      const double inv = 1.0 / std::sqrt(var + kEps);
      for (std::size_t j = 0; j < d; ++j)
        out.at(i, j) = (vx.at(i, j) - mean) * inv * value(gamma).data[j] +
                       value(beta).data[j];
    }
    return push(std::move(out), [this, x, gamma, beta, kEps](Var o) {
      const Tensor& vx = vals_[x];
      const Tensor& g = grads_[o];
      const std::size_t n = vx.rows(), d = vx.cols();
      for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += vx.at(i, j);
        mean /= d;
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double c = vx.at(i, j) - mean;
          var += c * c;
        }
        var /= d;
        const double inv = 1.0 / std::sqrt(var + kEps);
        // xhat_j = (x_j - mean) * inv; out_j = xhat_j * gamma_j + beta_j
        double sum_gy = 0.0, sum_gyx = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double xhat = (vx.at(i, j) - mean) * inv;
          const double gy = g.at(i, j) * vals_[gamma].data[j];
          sum_gy += gy;
          sum_gyx += gy * xhat;
          grads_[gamma].data[j] += g.at(i, j) * xhat;
          grads_[beta].data[j] += g.at(i, j);
        }
        for (std::size_t j = 0; j < d; ++j) {
          const double xhat = (vx.at(i, j) - mean) * inv;
          const double gy = g.at(i, j) * vals_[gamma].data[j];
          grads_[x].at(i, j) +=
              inv * (gy - sum_gy / d - xhat * sum_gyx / d);
        }
      }
    });
  }

  // Gather rows of `table` by id. Gradient scatters back into the table.
  Var embedding_lookup(Var table, const std::vector<int>& ids) {
    const Tensor& vt = value(table);
    Tensor out({ids.size(), vt.cols()});
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vt.rows())
        throw std::out_of_range("embedding id " + std::to_string(ids[i]) +
                                " out of range");
      for (std::size_t j = 0; j < vt.cols(); ++j)
        out.at(i, j) = vt.at(static_cast<std::size_t>(ids[i]), j);
    }
    return push(std::move(out), [this, table, ids](Var o) {
      const Tensor& g = grads_[o];
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
          grads_[table].at(static_cast<std::size_t>(ids[i]), j) += g.at(i, j);
    });
  }

  // Extract one row as a 1-d tensor.
  Var slice_row(Var a, std::size_t row) {
    const Tensor& va = value(a);
    if (row >= va.rows()) throw std::out_of_range("slice_row out of range");
    Tensor out({va.cols()});
    for (std::size_t j = 0; j < va.cols(); ++j) out.data[j] = va.at(row, j);
    return push(std::move(out), [this, a, row](Var o) {
      for (std::size_t j = 0; j < grads_[o].numel(); ++j)
        grads_[a].at(row, j) += grads_[o].data[j];
    });
  }

  // Extract one scalar entry as a {1} tensor.
  Var pick(Var a, std::size_t idx) {
    const Tensor& va = value(a);
    if (idx >= va.numel()) throw std::out_of_range("pick out of range");
    Tensor out({1});
    out.data[0] = va.data[idx];
    return push(std::move(out), [this, a, idx](Var o) {
      grads_[a].data[idx] += grads_[o].data[0];
    });
  }

  // Vector {d} times matrix {d, m} -> {m}.
  Var vecmat(Var v, Var w) {
    const Tensor& vv = value(v);
    const Tensor& vw = value(w);
    if (vv.shape.size() != 1 || vw.shape.size() != 2 ||
        vv.numel() != vw.rows())
      throw std::invalid_argument("vecmat shape mismatch " + shape_str(vv) +
                                  " vs " + shape_str(vw));
    Tensor out({vw.cols()});
    for (std::size_t p = 0; p < vw.rows(); ++p)
      for (std::size_t j = 0; j < vw.cols(); ++j)
        out.data[j] += vv.data[p] * vw.at(p, j);
    return push(std::move(out), [this, v, w](Var o) {
      const Tensor& g = grads_[o];
      const Tensor& vv = vals_[v];
      const Tensor& vw = vals_[w];
      for (std::size_t p = 0; p < vw.rows(); ++p)
        for (std::size_t j = 0; j < vw.cols(); ++j) {
          grads_[v].data[p] += g.data[j] * vw.at(p, j);
          grads_[w].at(p, j) += vv.data[p] * g.data[j];
        }
    });
  }

  Var sum(Var a) {
    Tensor out({1});
    for (double v : value(a).data) out.data[0] += v;
    return push(std::move(out), [this, a](Var o) {
      for (double& g : grads_[a].data) g += grads_[o].data[0];
    });
  }

  // Softmax cross-entropy of a logit vector against an integer target.
  Var cross_entropy(Var logits, std::size_t target) {
    const Tensor& vl = value(logits);
    if (vl.shape.size() != 1)
      throw std::invalid_argument("cross_entropy expects a logit vector");
    if (target >= vl.numel()) throw std::out_of_range("target out of range");
    double mx = -1e300;
    for (double v : vl.data) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : vl.data) z += std::exp(v - mx);
    Tensor out({1});
    out.data[0] = std::log(z) + mx - vl.data[target];
    return push(std::move(out), [this, logits, target](Var o) {
      const Tensor& vl = vals_[logits];
      double mx = -1e300;
      for (double v : vl.data) mx = std::max(mx, v);
      double z = 0.0;
      for (double v : vl.data) z += std::exp(v - mx);
      const double g = grads_[o].data[0];
      for (std::size_t j = 0; j < vl.numel(); ++j) {
        double p = std::exp(vl.data[j] - mx) / z;
        grads_[logits].data[j] += g * (p - (j == target ? 1.0 : 0.0));
      }
    });
  }

  // Seeds d(loss)/d(loss)=1 and accumulates gradients into every node,
  // visiting each recorded op exactly once.
  void backward(Var loss) {
    if (!recording_) throw std::logic_error("backward on non-recording tape");
    if (value(loss).numel() != 1)
      throw std::invalid_argument("backward requires a scalar loss");
    grads_.clear();
    grads_.reserve(vals_.size());
    for (const Tensor& v : vals_) grads_.emplace_back(v.shape);
    grads_[loss].data[0] = 1.0;
    for (int i = static_cast<int>(backs_.size()) - 1; i >= 0; --i)
      if (backs_[i]) backs_[i](i);
  }

 private:
  using BackFn = std::function<void(Var)>;

  Var push(Tensor t, BackFn fn) {
    for (double v : t.data)
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite value produced by kernel");
    vals_.push_back(std::move(t));
    backs_.push_back(recording_ ? std::move(fn) : BackFn{});
    return static_cast<Var>(vals_.size() - 1);
  }

  bool recording_;
  std::vector<Tensor> vals_;
  std::vector<Tensor> grads_;
  std::vector<BackFn> backs_;
};

}  // namespace trojattn
