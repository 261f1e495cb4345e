// Copyright 2026 The dsan Authors.
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

#include <optional>
#include <vector>

#include "dsan/matrix.hpp"

namespace dsan {

// A family of Gaussian kernels k(x, y) = mean_u exp(-|x - y|^2 / (b * m_u))
// sharing one base bandwidth b (in squared-distance units). When the base
// bandwidth is unset it is resolved per call with the median heuristic.
struct KernelSpec {
  std::optional<double> base_bandwidth;  // nullopt => median heuristic
  std::vector<double> multipliers = default_multipliers();

  static std::vector<double> default_multipliers();  // {1/4, 1/2, 1, 2, 4}
  static KernelSpec median(std::vector<double> multipliers = default_multipliers());
  static KernelSpec fixed(double bandwidth,
                          std::vector<double> multipliers = default_multipliers());
  static KernelSpec single(std::optional<double> bandwidth = std::nullopt);

  std::size_t family_size() const { return multipliers.size(); }
  bool uses_median() const { return !base_bandwidth.has_value(); }

  // Same family with the base bandwidth pinned to `bandwidth`.
  KernelSpec frozen_at(double bandwidth) const;

  // Multipliers non-empty, strictly positive and ascending; a fixed bandwidth
  // must be positive and finite.
  void validate() const;

  bool operator==(const KernelSpec&) const = default;
};

// (i, j) = sum_k (x[i,k] - y[j,k])^2.
Matrix pairwise_sq_dists(const Matrix& x, const Matrix& y);

// Median of the strictly positive entries (mean of the two central values for
// an even count). Throws kDegenerateBatch if no entry is positive.
double median_bandwidth(const Matrix& sq_dists);

// Base bandwidth for a discrepancy between two samples: the fixed value, or
// the median over all pairwise squared distances of the joint sample.
double resolve_bandwidth(const KernelSpec& spec, const Matrix& zs, const Matrix& zt);

// Kernel values from squared distances. A median spec is resolved from
// `sq_dists` itself.
Matrix gaussian_kernel_matrix(const Matrix& sq_dists, const KernelSpec& spec);
Matrix gaussian_kernel_matrix(const Matrix& sq_dists, const std::vector<double>& multipliers,
                              double bandwidth);

// mean_u exp(-D / s_u) / s_u with s_u = bandwidth * m_u. The derivative of the
// kernel w.r.t. x is -2 * G * (x - y).
Matrix gaussian_kernel_slope(const Matrix& sq_dists, const std::vector<double>& multipliers,
                             double bandwidth);

}  // namespace dsan
