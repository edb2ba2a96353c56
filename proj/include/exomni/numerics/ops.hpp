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

#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "exomni/numerics/parameter.hpp"
#include "exomni/numerics/tensor.hpp"

// Forward/backward pairs for every primitive the model uses. Forward functions
// are pure; backward functions return the input gradient and accumulate
// parameter gradients into trainable Parameters only.
namespace exomni::numerics {

inline constexpr double kLayerNormEps = 1e-5;

// ---- matrix products ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);       // a * b
Tensor matmul_at_b(const Tensor& a, const Tensor& b);  // a^T * b
Tensor matmul_a_bt(const Tensor& a, const Tensor& b);  // a * b^T
Tensor transpose(const Tensor& a);

// ---- affine ---------------------------------------------------------------

// out[i,j] = sum_k x[i,k] W[k,j] + b[j]; `b` may be null.
Tensor linear(const Tensor& x, const Parameter& w, const Parameter* b);
inline Tensor linear(const Tensor& x, const Parameter& w, const Parameter& b) {
  return linear(x, w, &b);
}
Tensor linear_backward(const Tensor& x, Parameter& w, Parameter* b, const Tensor& dy);

// ---- softmax / normalization ---------------------------------------------

// Softmax over the last axis of a rank-1 or rank-2 tensor.
Tensor softmax(const Tensor& x);
Tensor softmax_backward(const Tensor& y, const Tensor& dy);

struct LayerNormCache {
  Tensor xhat;
  std::vector<double> inv_std;
};
Tensor layer_norm(const Tensor& x, const Parameter& gamma, const Parameter& beta,
                  double eps = kLayerNormEps, LayerNormCache* cache = nullptr);
Tensor layer_norm_backward(const LayerNormCache& cache, Parameter& gamma, Parameter& beta,
                           const Tensor& dy);

// ---- losses ---------------------------------------------------------------

// Mean over unmasked rows of -log softmax(logits)[target]; 0 when every row is
// masked. An empty mask means every row counts.
double cross_entropy(const Tensor& logits, std::span<const std::size_t> targets,
                     const std::vector<bool>& mask = {});
// Gradient of `scale * cross_entropy(...)` with respect to the logits.
Tensor cross_entropy_backward(const Tensor& logits, std::span<const std::size_t> targets,
                              const std::vector<bool>& mask = {}, double scale = 1.0);

// ---- attention ------------------------------------------------------------

struct AttentionCache {
  Tensor probs;  // M x N
};
struct AttentionGrads {
  Tensor dq, dk, dv;
};

// softmax(Q K^T / sqrt(d_k)) V. With `causal`, query i sees keys j <= i + (N - M).
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, bool causal = false,
                            AttentionCache* cache = nullptr);
AttentionGrads scaled_dot_attention_backward(const Tensor& q, const Tensor& k, const Tensor& v,
                                             const AttentionCache& cache, const Tensor& dout);

// ---- activations ----------------------------------------------------------

Tensor gelu(const Tensor& x);  // tanh approximation
Tensor gelu_backward(const Tensor& x, const Tensor& dy);
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);
double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

// ---- mutation hook --------------------------------------------------------

// Test-only sensitivity hook: when set to a primitive's name ("linear",
// "softmax", "layer_norm", "cross_entropy", "attention", "gelu", "relu",
// "sigmoid", "rope", "resample", "fusion_gate"), that primitive's backward
// returns a sign-flipped input gradient. Empty string disables it.
void set_backward_mutation(std::string_view op);
bool backward_mutated(std::string_view op);

}  // namespace exomni::numerics
