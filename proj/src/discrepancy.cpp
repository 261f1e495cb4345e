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

#include "dsan/discrepancy.hpp"

#include <cmath>
#include <string>

#include "dsan/error.hpp"

namespace dsan {
namespace {

constexpr double kLabelRowTolerance = 1e-6;
constexpr double kColumnSumTolerance = 1e-9;

// Kernel blocks and slope blocks for the three sample pairings.
struct KernelBlocks {
  Matrix kss, ktt, kst;
  Matrix gss, gtt, gst;  // only filled when gradients are requested
};

KernelBlocks kernel_blocks(const Matrix& zs, const Matrix& zt,
                           const std::vector<double>& multipliers, double bandwidth,
                           bool slopes) {
  const Matrix dss = pairwise_sq_dists(zs, zs);
  const Matrix dtt = pairwise_sq_dists(zt, zt);
  const Matrix dst = pairwise_sq_dists(zs, zt);
  KernelBlocks b;
  b.kss = gaussian_kernel_matrix(dss, multipliers, bandwidth);
  b.ktt = gaussian_kernel_matrix(dtt, multipliers, bandwidth);
  b.kst = gaussian_kernel_matrix(dst, multipliers, bandwidth);
  if (slopes) {
    b.gss = gaussian_kernel_slope(dss, multipliers, bandwidth);
    b.gtt = gaussian_kernel_slope(dtt, multipliers, bandwidth);
    b.gst = gaussian_kernel_slope(dst, multipliers, bandwidth);
  }
  return b;
}

// Gradients of  sum Mss.*Kss + sum Mtt.*Ktt - 2 sum Mst.*Kst  for symmetric
// Mss, Mtt, using dk(x,y)/dx = -2 G (x - y).
void weighted_kernel_grads(const Matrix& zs, const Matrix& zt, const Matrix& mss,
                           const Matrix& mtt, const Matrix& mst, const KernelBlocks& b,
                           Matrix& grad_s, Matrix& grad_t) {
  const Matrix a = mss.cwiseProduct(b.gss);
  const Matrix c = mtt.cwiseProduct(b.gtt);
  const Matrix x = mst.cwiseProduct(b.gst);

  const Vector a_rows = a.rowwise().sum();
  const Vector c_rows = c.rowwise().sum();
  const Vector x_rows = x.rowwise().sum();
  const Vector x_cols = x.colwise().sum().transpose();

  grad_s = -4.0 * (a_rows.asDiagonal() * zs - a * zs) + 4.0 * (x_rows.asDiagonal() * zs - x * zt);
  grad_t = -4.0 * (c_rows.asDiagonal() * zt - c * zt) +
           4.0 * (x_cols.asDiagonal() * zt - x.transpose() * zs);
}

void check_pair(const Matrix& zs, const Matrix& zt) {
  require(zs.cols() == zt.cols(), ErrorCode::kConfig,
          "discrepancy: activation widths differ (" + std::to_string(zs.cols()) + " vs " +
              std::to_string(zt.cols()) + ")");
  require(zs.rows() >= 1 && zt.rows() >= 1, ErrorCode::kConfig, "discrepancy: empty sample");
  require_finite(zs, "source activations");
  require_finite(zt, "target activations");
}

}  // namespace

ClassWeights class_weights(const Matrix& labels) {
  require(labels.cols() >= 1, ErrorCode::kValidation, "class weights: no classes");
  for (Eigen::Index i = 0; i < labels.rows(); ++i) {
    double row_sum = 0.0;
    for (Eigen::Index c = 0; c < labels.cols(); ++c) {
      const double v = labels(i, c);
      require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::kValidation,
              "class weights: label entry out of [0, 1] in row " + std::to_string(i));
      row_sum += v;
    }
    require(std::abs(row_sum - 1.0) <= kLabelRowTolerance, ErrorCode::kValidation,
            "class weights: label row " + std::to_string(i) + " does not sum to 1");
  }

  ClassWeights w;
  w.weights = Matrix::Zero(labels.rows(), labels.cols());
  w.present.assign(static_cast<std::size_t>(labels.cols()), false);
  for (Eigen::Index c = 0; c < labels.cols(); ++c) {
    const double mass = labels.col(c).sum();
    if (mass <= 0.0) continue;
    w.weights.col(c) = labels.col(c) / mass;
    const double total = w.weights.col(c).sum();
    require(std::abs(total - 1.0) <= kColumnSumTolerance, ErrorCode::kInternal,
            "class weights: column normalization drifted");
    w.present[static_cast<std::size_t>(c)] = true;
  }
  return w;
}

Matrix one_hot(std::span<const int> labels, std::size_t classes) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()),
                            static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < classes,
            ErrorCode::kValidation,
            "one-hot: label " + std::to_string(labels[i]) + " outside [0, " +
                std::to_string(classes) + ")");
    out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return out;
}

DiscrepancyResult mmd(const Matrix& zs, const Matrix& zt, const KernelSpec& spec,
                      bool want_grads) {
  check_pair(zs, zt);
  DiscrepancyResult r;
  r.bandwidth = resolve_bandwidth(spec, zs, zt);
  r.contributing_classes = 1;
  const KernelBlocks b = kernel_blocks(zs, zt, spec.multipliers, r.bandwidth, want_grads);

  const double ns = static_cast<double>(zs.rows());
  const double nt = static_cast<double>(zt.rows());
  r.value = b.kss.sum() / (ns * ns) + b.ktt.sum() / (nt * nt) - 2.0 * b.kst.sum() / (ns * nt);

  if (want_grads) {
    const Matrix mss = Matrix::Constant(zs.rows(), zs.rows(), 1.0 / (ns * ns));
    const Matrix mtt = Matrix::Constant(zt.rows(), zt.rows(), 1.0 / (nt * nt));
    const Matrix mst = Matrix::Constant(zs.rows(), zt.rows(), 1.0 / (ns * nt));
    Matrix gs, gt;
    weighted_kernel_grads(zs, zt, mss, mtt, mst, b, gs, gt);
    r.grad_source = std::move(gs);
    r.grad_target = std::move(gt);
  }
  return r;
}

DiscrepancyResult lmmd(const Matrix& zs, const Matrix& zt, const ClassWeights& ws,
                       const ClassWeights& wt, const KernelSpec& spec, bool want_grads) {
  check_pair(zs, zt);
  require(ws.classes() == wt.classes(), ErrorCode::kConfig,
          "lmmd: source and target class counts differ");
  require(ws.weights.rows() == zs.rows() && wt.weights.rows() == zt.rows(), ErrorCode::kConfig,
          "lmmd: weight rows do not match activation rows");

  std::vector<Eigen::Index> shared;
  for (std::size_t c = 0; c < ws.classes(); ++c)
    if (ws.present[c] && wt.present[c]) shared.push_back(static_cast<Eigen::Index>(c));
  if (shared.empty()) fail(ErrorCode::kEmptyOverlap, "lmmd: no class present in both domains");

  DiscrepancyResult r;
  r.bandwidth = resolve_bandwidth(spec, zs, zt);
  r.contributing_classes = shared.size();
  const KernelBlocks b = kernel_blocks(zs, zt, spec.multipliers, r.bandwidth, want_grads);

  const auto n_shared = static_cast<Eigen::Index>(shared.size());
  Matrix s(zs.rows(), n_shared), t(zt.rows(), n_shared);
  for (Eigen::Index k = 0; k < n_shared; ++k) {
    s.col(k) = ws.weights.col(shared[static_cast<std::size_t>(k)]);
    t.col(k) = wt.weights.col(shared[static_cast<std::size_t>(k)]);
  }

  const Matrix kss_s = b.kss * s;
  const Matrix ktt_t = b.ktt * t;
  const Matrix kst_t = b.kst * t;
  r.per_class.assign(ws.classes(), 0.0);
  double total = 0.0;
  for (Eigen::Index k = 0; k < n_shared; ++k) {
    const double term = s.col(k).dot(kss_s.col(k)) + t.col(k).dot(ktt_t.col(k)) -
                        2.0 * s.col(k).dot(kst_t.col(k));
    r.per_class[static_cast<std::size_t>(shared[static_cast<std::size_t>(k)])] = term;
    total += term;
  }
  const double inv_c = 1.0 / static_cast<double>(n_shared);
  r.value = total * inv_c;

  if (want_grads) {
    const Matrix mss = inv_c * (s * s.transpose());
    const Matrix mtt = inv_c * (t * t.transpose());
    const Matrix mst = inv_c * (s * t.transpose());
    Matrix gs, gt;
    weighted_kernel_grads(zs, zt, mss, mtt, mst, b, gs, gt);
    r.grad_source = std::move(gs);
    r.grad_target = std::move(gt);
  }
  return r;
}

std::pair<Matrix, Matrix> lmmd_finite_diff(const Matrix& zs, const Matrix& zt,
                                           const ClassWeights& ws, const ClassWeights& wt,
                                           const KernelSpec& spec, double step) {
  require(step > 0.0 && std::isfinite(step), ErrorCode::kConfig,
          "finite differences: step must be positive");
  const KernelSpec frozen = spec.frozen_at(resolve_bandwidth(spec, zs, zt));

  auto central = [&](Matrix& x, bool is_source) {
    Matrix grad(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double saved = x(i, j);
        x(i, j) = saved + step;
        const double up = is_source ? lmmd(x, zt, ws, wt, frozen).value
                                    : lmmd(zs, x, ws, wt, frozen).value;
        x(i, j) = saved - step;
        const double down = is_source ? lmmd(x, zt, ws, wt, frozen).value
                                      : lmmd(zs, x, ws, wt, frozen).value;
        x(i, j) = saved;
        grad(i, j) = (up - down) / (2.0 * step);
      }
    }
    return grad;
  };

  Matrix zs_work = zs;
  Matrix zt_work = zt;
  Matrix gs = central(zs_work, true);
  Matrix gt = central(zt_work, false);
  return {std::move(gs), std::move(gt)};
}

double cmmd(const Matrix& zs, std::span<const int> ys, const Matrix& zt, std::span<const int> yt,
            std::size_t classes, const KernelSpec& spec) {
  check_pair(zs, zt);
  require(ys.size() == static_cast<std::size_t>(zs.rows()) &&
              yt.size() == static_cast<std::size_t>(zt.rows()),
          ErrorCode::kConfig, "cmmd: label count does not match rows");
  const KernelSpec frozen = spec.frozen_at(resolve_bandwidth(spec, zs, zt));

  auto rows_of = [](const Matrix& z, std::span<const int> y, int c) {
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) idx.push_back(static_cast<Eigen::Index>(i));
    Matrix out(static_cast<Eigen::Index>(idx.size()), z.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = z.row(idx[k]);
    return out;
  };

  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const Matrix s = rows_of(zs, ys, static_cast<int>(c));
    const Matrix t = rows_of(zt, yt, static_cast<int>(c));
    if (s.rows() == 0 || t.rows() == 0) continue;
    total += mmd(s, t, frozen).value;
    ++used;
  }
  if (used == 0) fail(ErrorCode::kEmptyOverlap, "cmmd: no class present in both domains");
  return total / static_cast<double>(used);
}

}  // namespace dsan
