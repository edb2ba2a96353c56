// Copyright 2026 The exomni-desk Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "exomni/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "exomni/errors.hpp"

namespace exomni::numerics {

namespace {

std::string& mutation_target() {
  static std::string target;
  return target;
}

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected matrix, got " + t.shape_string());
}

Tensor maybe_flip(Tensor g, std::string_view op) {
  if (backward_mutated(op)) scale_into(g, -1.0);
  return g;
}

}  // namespace

void set_backward_mutation(std::string_view op) { mutation_target() = std::string(op); }

bool backward_mutated(std::string_view op) {
  return !mutation_target().empty() && mutation_target() == op;
}

// ---- matrix products ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* o = &out(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      const double* br = &b(p, 0);
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
  return out;
}

Tensor matmul_at_b(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_at_b");
  require_matrix(b, "matmul_at_b");
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at_b: " + a.shape_string() + "^T * " + b.shape_string());
  }
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t p = 0; p < k; ++p) {
    const double* ar = &a(p, 0);
    const double* br = &b(p, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const double av = ar[i];
      double* o = &out(i, 0);
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
  return out;
}

Tensor matmul_a_bt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_a_bt");
  require_matrix(b, "matmul_a_bt");
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_a_bt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = &a(i, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const double* br = &b(j, 0);
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      out(i, j) = s;
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  Tensor out = Tensor::matrix(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

// ---- affine ---------------------------------------------------------------

Tensor linear(const Tensor& x, const Parameter& w, const Parameter* b) {
  require_matrix(x, "linear");
  if (w.value.rank() != 2 || x.cols() != w.value.rows()) {
    throw ShapeError("linear: input " + x.shape_string() + " incompatible with weight " +
                     w.value.shape_string());
  }
  Tensor out = matmul(x, w.value);
  if (b != nullptr) {
    if (b->value.size() != out.cols()) {
      throw ShapeError("linear: bias " + b->value.shape_string() + " for output width " +
                       std::to_string(out.cols()));
    }
    for (std::size_t i = 0; i < out.rows(); ++i) {
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b->value[j];
    }
  }
  return out;
}

Tensor linear_backward(const Tensor& x, Parameter& w, Parameter* b, const Tensor& dy) {
  if (w.trainable) w.accumulate(matmul_at_b(x, dy));
  if (b != nullptr && b->trainable) {
    Tensor db = Tensor::vector(dy.cols());
    for (std::size_t i = 0; i < dy.rows(); ++i) {
      for (std::size_t j = 0; j < dy.cols(); ++j) db[j] += dy(i, j);
    }
    b->accumulate(db);
  }
  return maybe_flip(matmul_a_bt(dy, w.value), "linear");
}

// ---- softmax / normalization ---------------------------------------------

Tensor softmax(const Tensor& x) {
  Tensor out = x;
  const std::size_t n = x.cols();
  if (n == 0) throw ShapeError("softmax over an empty axis");
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return out;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const auto yr = y.row(r);
    const auto gr = dy.row(r);
    double dot = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
    auto out = dx.row(r);
    for (std::size_t j = 0; j < yr.size(); ++j) out[j] = yr[j] * (gr[j] - dot);
  }
  return maybe_flip(std::move(dx), "softmax");
}

Tensor layer_norm(const Tensor& x, const Parameter& gamma, const Parameter& beta, double eps,
                  LayerNormCache* cache) {
  require_matrix(x, "layer_norm");
  const std::size_t d = x.cols();
  if (gamma.value.size() != d || beta.value.size() != d) {
    throw ShapeError("layer_norm: width " + std::to_string(d) + " vs gamma " +
                     gamma.value.shape_string());
  }
  Tensor xhat = x;
  std::vector<double> inv_std(x.rows());
  Tensor out = Tensor::matrix(x.rows(), d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mean) * is;
      xhat(r, j) = h;
      out(r, j) = h * gamma.value[j] + beta.value[j];
    }
  }
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

Tensor layer_norm_backward(const LayerNormCache& cache, Parameter& gamma, Parameter& beta,
                           const Tensor& dy) {
  const Tensor& xhat = cache.xhat;
  const std::size_t n = xhat.rows(), d = xhat.cols();
  if (gamma.trainable || beta.trainable) {
    Tensor dg = Tensor::vector(d), db = Tensor::vector(d);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        dg[j] += dy(r, j) * xhat(r, j);
        db[j] += dy(r, j);
      }
    }
    if (gamma.trainable) gamma.accumulate(dg);
    if (beta.trainable) beta.accumulate(db);
  }
  Tensor dx = Tensor::matrix(n, d);
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t r = 0; r < n; ++r) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double g = dy(r, j) * gamma.value[j];
      sum_g += g;
      sum_gx += g * xhat(r, j);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double g = dy(r, j) * gamma.value[j];
      dx(r, j) = cache.inv_std[r] * (g - inv_d * sum_g - xhat(r, j) * inv_d * sum_gx);
    }
  }
  return maybe_flip(std::move(dx), "layer_norm");
}

// ---- losses ---------------------------------------------------------------

namespace {

void check_targets(const Tensor& logits, std::span<const std::size_t> targets,
                   const std::vector<bool>& mask) {
  require_matrix(logits, "cross_entropy");
  if (targets.size() != logits.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (!mask.empty() && mask.size() != targets.size()) {
    throw ShapeError("cross_entropy: mask length " + std::to_string(mask.size()));
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= logits.cols()) {
      throw IndexError("cross_entropy: target " + std::to_string(targets[i]) + " at row " +
                       std::to_string(i) + " outside [0, " + std::to_string(logits.cols()) + ")");
    }
  }
}

bool active(const std::vector<bool>& mask, std::size_t i) { return mask.empty() || mask[i]; }

}  // namespace

double cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                     const std::vector<bool>& mask) {
  check_targets(logits, targets, mask);
  long double total = 0.0L;
  std::size_t count = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (!active(mask, r)) continue;
    const auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    long double sum = 0.0L;
    for (double v : row) sum += std::exp(v - mx);
    total += (mx + std::log(sum)) - row[targets[r]];
    ++count;
  }
  return count == 0 ? 0.0 : static_cast<double>(total / static_cast<long double>(count));
}

Tensor cross_entropy_backward(const Tensor& logits, std::span<const std::size_t> targets,
                              const std::vector<bool>& mask, double scale) {
  check_targets(logits, targets, mask);
  std::size_t count = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) count += active(mask, r) ? 1 : 0;
  Tensor grad = Tensor::matrix(logits.rows(), logits.cols());
  if (count == 0) return grad;
  const Tensor probs = softmax(logits);
  const double w = scale / static_cast<double>(count);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (!active(mask, r)) continue;
    for (std::size_t j = 0; j < logits.cols(); ++j) grad(r, j) = w * probs(r, j);
    grad(r, targets[r]) -= w;
  }
  return maybe_flip(std::move(grad), "cross_entropy");
}

// ---- attention ------------------------------------------------------------

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, bool causal,
                            AttentionCache* cache) {
  require_matrix(q, "attention");
  require_matrix(k, "attention");
  require_matrix(v, "attention");
  if (q.cols() != k.cols()) {
    throw ShapeError("attention: query " + q.shape_string() + " and key " + k.shape_string() +
                     " disagree on d_k");
  }
  if (k.rows() != v.rows()) {
    throw ShapeError("attention: key " + k.shape_string() + " and value " + v.shape_string() +
                     " disagree on N");
  }
  if (k.rows() == 0) throw EmptyContextError("attention over zero keys");
  const std::size_t m = q.rows(), n = k.rows();
  if (causal && m > n) throw ShapeError("causal attention with more queries than keys");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Tensor scores = matmul_a_bt(q, k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool visible = !causal || j <= i + (n - m);
      scores(i, j) = visible ? scores(i, j) * scale : -std::numeric_limits<double>::infinity();
    }
  }
  Tensor probs = softmax(scores);
  Tensor out = matmul(probs, v);
  if (cache != nullptr) cache->probs = std::move(probs);
  return out;
}

AttentionGrads scaled_dot_attention_backward(const Tensor& q, const Tensor& k, const Tensor& v,
                                             const AttentionCache& cache, const Tensor& dout) {
  const Tensor& p = cache.probs;
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  AttentionGrads g;
  g.dv = matmul_at_b(p, dout);
  const Tensor dp = matmul_a_bt(dout, v);
  Tensor ds = softmax_backward(p, dp);
  scale_into(ds, scale);
  g.dq = maybe_flip(matmul(ds, k), "attention");
  g.dk = matmul_at_b(ds, q);
  return g;
}

// ---- activations ----------------------------------------------------------

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) {
    const double u = kGeluC * (v + kGeluA * v * v * v);
    v = 0.5 * v * (1.0 + std::tanh(u));
  }
  return out;
}

Tensor gelu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double u = kGeluC * (v + kGeluA * v * v * v);
    const double t = std::tanh(u);
    const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
    dx[i] = dy[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
  }
  return maybe_flip(std::move(dx), "gelu");
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) dx[i] = 0.0;
  }
  return maybe_flip(std::move(dx), "relu");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = sigmoid(v);
  return out;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
  return maybe_flip(std::move(dx), "sigmoid");
}

}  // namespace exomni::numerics
