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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dsan/kernels.hpp"
#include "dsan/matrix.hpp"
#include "dsan/network.hpp"

namespace dsan {

// Row argmax; ties go to the lowest index.
std::size_t argmax_row(const Matrix& m, Eigen::Index row);

// Fraction of rows whose argmax equals the label.
double accuracy(const Matrix& probs, std::span<const int> labels);

// 2 (1 - 2 eps) with eps clamped to [0, 0.5].
double a_distance_from_error(double error);

struct DomainClassifierOptions {
  std::size_t iterations = 500;
  double learning_rate = 0.1;
};

// Held-out error of a logistic regression separating Fs (label 0) from Ft
// (label 1). Each domain is shuffled with `seed` and split in half (floor to
// train); features are standardized with train-half statistics.
double domain_classifier_error(const Matrix& fs, const Matrix& ft, std::uint64_t seed,
                               const DomainClassifierOptions& opts = {});

// Proxy A-distance. Requires at least 4 rows per domain.
double proxy_a_distance(const Matrix& fs, const Matrix& ft, std::uint64_t seed,
                        const DomainClassifierOptions& opts = {});

struct ADistanceReport {
  double global_d = 0.0;
  double global_error = 0.0;
  std::vector<double> per_class_d;      // 0 for excluded classes
  std::vector<double> per_class_error;  // 0.5 for excluded classes
  double local_d = 0.0;
  std::vector<double> class_priors;     // renormalized over included classes
  std::vector<std::size_t> excluded_classes;
};

// Global proxy A-distance plus the class-prior-weighted local distance
// 2 sum_c p(c) (1 - 2 eps_c). Priors default to the target label
// frequencies. Classes with fewer than 2 rows in either domain are excluded
// and the priors renormalized. Class c uses seed + c * 0x9E3779B97F4A7C15.
ADistanceReport local_a_distance(const Matrix& fs, std::span<const int> ys, const Matrix& ft,
                                 std::span<const int> yt, std::size_t classes, std::uint64_t seed,
                                 const std::optional<std::vector<double>>& priors = std::nullopt,
                                 const DomainClassifierOptions& opts = {});

struct MeasuredDiscrepancy {
  double mmd = 0.0;
  double lmmd = 0.0;
  double bandwidth = 0.0;
  std::size_t contributing_classes = 0;
};

// MMD and LMMD on the model's bottleneck activations, both domains weighted
// by their ground-truth one-hot labels.
MeasuredDiscrepancy measure_discrepancies(const MlpModel& model, const Matrix& fs,
                                          std::span<const int> ys, const Matrix& ft,
                                          std::span<const int> yt, const KernelSpec& spec);

// Same measurement on features as given (no model).
MeasuredDiscrepancy measure_feature_discrepancies(const Matrix& zs, std::span<const int> ys,
                                                  const Matrix& zt, std::span<const int> yt,
                                                  std::size_t classes, const KernelSpec& spec);

}  // namespace dsan
