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

#include "exomni/objectives/losses.hpp"

#include <cmath>
#include <string>

#include "exomni/errors.hpp"

namespace exomni::objectives {

void FaceBatch::validate() const {
  if (predicted.empty()) throw ArgumentError("face batch is empty");
  if (target.size() != predicted.size() || valid_lengths.size() != predicted.size()) {
    throw ShapeError("face batch: predicted/target/valid_lengths sizes differ");
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const Tensor& p = predicted[i].coeffs;
    const Tensor& t = target[i].coeffs;
    if (p.rank() != 2 || t.rank() != 2 || p.cols() != t.cols()) {
      throw ShapeError("face batch sample " + std::to_string(i) + ": " + p.shape_string() +
                       " vs " + t.shape_string());
    }
    const std::size_t v = valid_lengths[i];
    if (v < 1) throw MaskError("face batch sample " + std::to_string(i) + ": valid length 0");
    if (v > p.rows() || v > t.rows()) {
      throw MaskError("face batch sample " + std::to_string(i) + ": valid length " +
                      std::to_string(v) + " exceeds frame count");
    }
  }
}

double l_bs(const FaceBatch& batch) {
  batch.validate();
  long double total = 0.0L;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor& p = batch.predicted[i].coeffs;
    const Tensor& y = batch.target[i].coeffs;
    const std::size_t v = batch.valid_lengths[i];
    long double sample = 0.0L;
    for (std::size_t t = 0; t < v; ++t) {
      for (std::size_t k = 0; k < p.cols(); ++k) {
        const double d = p(t, k) - y(t, k);
        sample += d * d;
      }
    }
    total += sample / static_cast<long double>(v);
  }
  return static_cast<double>(total / static_cast<long double>(batch.size()));
}

double l_vel(const FaceBatch& batch) {
  batch.validate();
  long double total = 0.0L;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor& p = batch.predicted[i].coeffs;
    const Tensor& y = batch.target[i].coeffs;
    const std::size_t v = batch.valid_lengths[i];
    if (v < 2) continue;
    long double sample = 0.0L;
    for (std::size_t t = 1; t < v; ++t) {
      for (std::size_t k = 0; k < p.cols(); ++k) {
        const double d = (p(t, k) - p(t - 1, k)) - (y(t, k) - y(t - 1, k));
        sample += d * d;
      }
    }
    total += sample / static_cast<long double>(v - 1);
  }
  return static_cast<double>(total / static_cast<long double>(batch.size()));
}

double l_face(const FaceBatch& batch, const LossWeights& w) {
  return l_bs(batch) + w.lambda_vel * l_vel(batch);
}

std::vector<Tensor> l_face_grad(const FaceBatch& batch, const LossWeights& w) {
  batch.validate();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<Tensor> grads;
  grads.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor& p = batch.predicted[i].coeffs;
    const Tensor& y = batch.target[i].coeffs;
    const std::size_t v = batch.valid_lengths[i];
    Tensor g = Tensor::matrix(p.rows(), p.cols());
    const double bs_scale = 2.0 * inv_b / static_cast<double>(v);
    for (std::size_t t = 0; t < v; ++t) {
      for (std::size_t k = 0; k < p.cols(); ++k) g(t, k) += bs_scale * (p(t, k) - y(t, k));
    }
    if (v >= 2 && w.lambda_vel != 0.0) {
      const double vel_scale = 2.0 * w.lambda_vel * inv_b / static_cast<double>(v - 1);
      for (std::size_t t = 1; t < v; ++t) {
        for (std::size_t k = 0; k < p.cols(); ++k) {
          const double r = (p(t, k) - p(t - 1, k)) - (y(t, k) - y(t - 1, k));
          g(t, k) += vel_scale * r;
          g(t - 1, k) -= vel_scale * r;
        }
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

double total_loss(const std::vector<WeightedTerm>& ar_terms, std::optional<double> face) {
  double total = 0.0;
  for (const auto& term : ar_terms) {
    if (!std::isfinite(term.value) || !std::isfinite(term.weight)) {
      throw NumericError("total_loss: non-finite autoregressive term");
    }
    total += term.weight * term.value;
  }
  if (face) {
    if (!std::isfinite(*face)) throw NumericError("total_loss: non-finite face term");
    total += *face;
  }
  return total;
}

}  // namespace exomni::objectives
