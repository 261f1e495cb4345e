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

#include "dsan/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "dsan/error.hpp"

namespace dsan {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kDegenerateBatch: return "degenerate batch";
    case ErrorCode::kEmptyOverlap: return "empty class overlap";
    case ErrorCode::kRuntime: return "runtime error";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown error";
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) fail(ErrorCode::kValidation, what + " contains non-finite values");
}

std::vector<double> KernelSpec::default_multipliers() { return {0.25, 0.5, 1.0, 2.0, 4.0}; }

KernelSpec KernelSpec::median(std::vector<double> multipliers) {
  return KernelSpec{std::nullopt, std::move(multipliers)};
}

KernelSpec KernelSpec::fixed(double bandwidth, std::vector<double> multipliers) {
  return KernelSpec{bandwidth, std::move(multipliers)};
}

KernelSpec KernelSpec::single(std::optional<double> bandwidth) {
  return KernelSpec{bandwidth, {1.0}};
}

KernelSpec KernelSpec::frozen_at(double bandwidth) const {
  return KernelSpec{bandwidth, multipliers};
}

void KernelSpec::validate() const {
  require(!multipliers.empty(), ErrorCode::kConfig, "kernel multiplier family is empty");
  for (std::size_t u = 0; u < multipliers.size(); ++u) {
    require(std::isfinite(multipliers[u]) && multipliers[u] > 0.0, ErrorCode::kConfig,
            "kernel multipliers must be positive and finite");
    if (u > 0)
      require(multipliers[u] > multipliers[u - 1], ErrorCode::kConfig,
              "kernel multipliers must be strictly ascending");
  }
  if (base_bandwidth)
    require(std::isfinite(*base_bandwidth) && *base_bandwidth > 0.0, ErrorCode::kConfig,
            "kernel bandwidth must be positive");
}

Matrix pairwise_sq_dists(const Matrix& x, const Matrix& y) {
  require(x.cols() == y.cols(), ErrorCode::kConfig,
          "pairwise distances: column counts differ (" + std::to_string(x.cols()) + " vs " +
              std::to_string(y.cols()) + ")");
  require(x.rows() >= 1 && y.rows() >= 1, ErrorCode::kConfig,
          "pairwise distances: empty input");
  Matrix d(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < x.cols(); ++k) {
        const double diff = x(i, k) - y(j, k);
        acc += diff * diff;
      }
      d(i, j) = acc;
    }
  }
  return d;
}

double median_bandwidth(const Matrix& sq_dists) {
  std::vector<double> positive;
  positive.reserve(static_cast<std::size_t>(sq_dists.size()));
  for (Eigen::Index i = 0; i < sq_dists.size(); ++i) {
    const double v = sq_dists.data()[i];
    if (v > 0.0) positive.push_back(v);
  }
  require(!positive.empty(), ErrorCode::kDegenerateBatch,
          "median bandwidth: all pairwise distances are zero");
  const std::size_t n = positive.size();
  const auto mid = positive.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(positive.begin(), mid, positive.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(positive.begin(), mid);
  return 0.5 * (lower + upper);
}

double resolve_bandwidth(const KernelSpec& spec, const Matrix& zs, const Matrix& zt) {
  spec.validate();
  if (spec.base_bandwidth) return *spec.base_bandwidth;
  require(zs.cols() == zt.cols(), ErrorCode::kConfig, "bandwidth: column counts differ");
  Matrix joint(zs.rows() + zt.rows(), zs.cols());
  joint << zs, zt;
  return median_bandwidth(pairwise_sq_dists(joint, joint));
}

Matrix gaussian_kernel_matrix(const Matrix& sq_dists, const KernelSpec& spec) {
  spec.validate();
  const double b = spec.base_bandwidth ? *spec.base_bandwidth : median_bandwidth(sq_dists);
  return gaussian_kernel_matrix(sq_dists, spec.multipliers, b);
}

Matrix gaussian_kernel_matrix(const Matrix& sq_dists, const std::vector<double>& multipliers,
                              double bandwidth) {
  require(std::isfinite(bandwidth) && bandwidth > 0.0, ErrorCode::kConfig,
          "kernel bandwidth must be positive");
  require(!multipliers.empty(), ErrorCode::kConfig, "kernel multiplier family is empty");
  Matrix k = Matrix::Zero(sq_dists.rows(), sq_dists.cols());
  for (const double m : multipliers) {
    const double inv = 1.0 / (bandwidth * m);
    k += (-sq_dists.array() * inv).exp().matrix();
  }
  return k / static_cast<double>(multipliers.size());
}

Matrix gaussian_kernel_slope(const Matrix& sq_dists, const std::vector<double>& multipliers,
                             double bandwidth) {
  require(std::isfinite(bandwidth) && bandwidth > 0.0, ErrorCode::kConfig,
          "kernel bandwidth must be positive");
  Matrix g = Matrix::Zero(sq_dists.rows(), sq_dists.cols());
  for (const double m : multipliers) {
    const double inv = 1.0 / (bandwidth * m);
    g += ((-sq_dists.array() * inv).exp() * inv).matrix();
  }
  return g / static_cast<double>(multipliers.size());
}

}  // namespace dsan
