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
#include <span>
#include <utility>
#include <vector>

#include "dsan/kernels.hpp"
#include "dsan/matrix.hpp"

namespace dsan {

// Per-sample class membership weights for one domain. Column c holds
// y[i,c] / sum_j y[j,c]; a column whose label mass is zero is all zeros and
// marked absent.
struct ClassWeights {
  Matrix weights;             // n x C
  std::vector<bool> present;  // column sums to one

  std::size_t classes() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t samples() const { return static_cast<std::size_t>(weights.rows()); }
};

// `labels` holds one probability row per sample (one-hot for hard labels).
// Rows must sum to one within 1e-6 and entries lie in [0, 1].
ClassWeights class_weights(const Matrix& labels);

// Hard labels in [0, classes) to one-hot rows.
Matrix one_hot(std::span<const int> labels, std::size_t classes);

struct DiscrepancyResult {
  double value = 0.0;
  std::optional<Matrix> grad_source;  // d value / d Zs, n_s x d
  std::optional<Matrix> grad_target;  // d value / d Zt, n_t x d
  std::size_t contributing_classes = 0;
  double bandwidth = 0.0;             // resolved base bandwidth
  std::vector<double> per_class;      // LMMD only; 0 for excluded classes
};

// Kernel mean-embedding distance between two samples, with the diagonal
// (i == j) terms included in the within-domain sums.
DiscrepancyResult mmd(const Matrix& zs, const Matrix& zt, const KernelSpec& spec,
                      bool want_grads = false);

// Class-weighted MMD averaged over the classes whose weight column is present
// in both domains. Throws kEmptyOverlap when no class qualifies. Gradients
// treat the weights and the resolved bandwidth as constants.
DiscrepancyResult lmmd(const Matrix& zs, const Matrix& zt, const ClassWeights& ws,
                       const ClassWeights& wt, const KernelSpec& spec, bool want_grads = false);

// Central-difference gradients of lmmd(...).value. A median bandwidth is
// resolved once from the unperturbed batch and held fixed.
std::pair<Matrix, Matrix> lmmd_finite_diff(const Matrix& zs, const Matrix& zt,
                                           const ClassWeights& ws, const ClassWeights& wt,
                                           const KernelSpec& spec, double step);

// Conditional MMD with hard labels: the mean over shared classes of mmd()
// between the class-c subsets. A median bandwidth is resolved from the full
// joint batch, not per class.
double cmmd(const Matrix& zs, std::span<const int> ys, const Matrix& zt, std::span<const int> yt,
            std::size_t classes, const KernelSpec& spec);

}  // namespace dsan
