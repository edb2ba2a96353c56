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

#include "exomni/numerics/gradcheck.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "exomni/errors.hpp"
#include "exomni/numerics/rng.hpp"

namespace exomni::numerics {

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.max_rel_error);
  return m;
}

std::string GradCheckReport::summary() const {
  std::string out;
  char buf[256];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof(buf), "%-40s checked=%-6zu max_rel=%.3e\n", e.name.c_str(),
                  e.elements_checked, e.max_rel_error);
    out += buf;
  }
  return out;
}

namespace {

std::vector<std::size_t> pick_elements(const Tensor& analytic, const GradCheckOptions& opt,
                                       std::size_t param_index) {
  std::vector<std::size_t> idx(analytic.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (opt.max_elements_per_param == 0 || idx.size() <= opt.max_elements_per_param) return idx;

  std::size_t largest = 0;
  for (std::size_t i = 1; i < analytic.size(); ++i) {
    if (std::abs(analytic[i]) > std::abs(analytic[largest])) largest = i;
  }
  Rng rng(derive_seed(opt.sample_seed, param_index));
  // Partial Fisher-Yates: the first k slots become a uniform sample.
  const std::size_t k = opt.max_elements_per_param;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  if (std::find(idx.begin(), idx.end(), largest) == idx.end()) idx.back() = largest;
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport finite_diff_check(const std::function<double()>& loss_and_grad,
                                  const ParameterList& params, const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ArgumentError("finite_diff_check: step must be positive");

  zero_grads(params);
  const double base = loss_and_grad();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.param->grad);

  zero_grads(params);
  const double again = loss_and_grad();
  if (std::bit_cast<std::uint64_t>(base) != std::bit_cast<std::uint64_t>(again)) {
    throw DeterminismError("finite_diff_check: loss is not deterministic");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!bit_equal(analytic[i], params[i].param->grad)) {
      throw DeterminismError("finite_diff_check: gradient of " + params[i].name +
                             " is not deterministic");
    }
  }

  GradCheckReport report;
  report.tolerance = options.tolerance;
  const double h = options.step;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi].param;
    GradCheckEntry entry{params[pi].name, 0.0, 0};
    for (std::size_t i : pick_elements(analytic[pi], options, pi)) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double fp = loss_and_grad();
      p.value[i] = orig - h;
      const double fm = loss_and_grad();
      p.value[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      entry.max_rel_error = std::max(entry.max_rel_error, std::abs(a - numeric) / denom);
      ++entry.elements_checked;
    }
    report.entries.push_back(std::move(entry));
  }
  zero_grads(params);
  return report;
}

}  // namespace exomni::numerics
