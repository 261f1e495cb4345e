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

#include "dsan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dsan/discrepancy.hpp"
#include "dsan/error.hpp"

namespace dsan {
namespace {

constexpr std::uint64_t kClassSeedStride = 0x9E3779B97F4A7C15ull;
constexpr std::size_t kMinRowsPerClass = 2;

struct Split {
  std::vector<std::size_t> train, test;
};

Split shuffled_halves(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_train = n / 2;
  return {{idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train)},
          {idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end()}};
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double classifier_error_unchecked(const Matrix& fs, const Matrix& ft, std::uint64_t seed,
                                  const DomainClassifierOptions& opts) {
  std::mt19937_64 rng(seed);
  const Split s = shuffled_halves(static_cast<std::size_t>(fs.rows()), rng);
  const Split t = shuffled_halves(static_cast<std::size_t>(ft.rows()), rng);

  const auto d = fs.cols();
  auto assemble = [&](const std::vector<std::size_t>& si, const std::vector<std::size_t>& ti,
                      Matrix& x, Vector& y) {
    x.resize(static_cast<Eigen::Index>(si.size() + ti.size()), d);
    y.resize(x.rows());
    Eigen::Index r = 0;
    for (const auto i : si) { x.row(r) = fs.row(static_cast<Eigen::Index>(i)); y(r++) = 0.0; }
    for (const auto i : ti) { x.row(r) = ft.row(static_cast<Eigen::Index>(i)); y(r++) = 1.0; }
  };
  Matrix x_train, x_test;
  Vector y_train, y_test;
  assemble(s.train, t.train, x_train, y_train);
  assemble(s.test, t.test, x_test, y_test);

  const RowVector mean = x_train.colwise().mean();
  RowVector scale = ((x_train.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  for (Eigen::Index k = 0; k < scale.size(); ++k)
    if (!(scale(k) > 1e-12)) scale(k) = 1.0;
  auto standardize = [&](Matrix& x) {
    x.rowwise() -= mean;
    x.array().rowwise() /= scale.array();
  };
  standardize(x_train);
  standardize(x_test);

  Vector w = Vector::Zero(d);
  double b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(x_train.rows());
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    Vector z = x_train * w;
    Vector resid(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) resid(i) = sigmoid(z(i) + b) - y_train(i);
    w -= opts.learning_rate * inv_n * (x_train.transpose() * resid);
    b -= opts.learning_rate * inv_n * resid.sum();
  }

  const Vector z = x_test * w;
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double predicted = z(i) + b >= 0.0 ? 1.0 : 0.0;
    if (predicted != y_test(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(z.size());
}

std::vector<std::size_t> rows_with(std::span<const int> y, int c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] == c) out.push_back(i);
  return out;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

}  // namespace

std::size_t argmax_row(const Matrix& m, Eigen::Index row) {
  std::size_t best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c)
    if (m(row, c) > m(row, static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(c);
  return best;
}

double accuracy(const Matrix& probs, std::span<const int> labels) {
  require(static_cast<std::size_t>(probs.rows()) == labels.size(), ErrorCode::kValidation,
          "accuracy: label count does not match rows");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    if (labels[static_cast<std::size_t>(i)] >= 0 &&
        argmax_row(probs, i) == static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double a_distance_from_error(double error) {
  const double eps = std::clamp(error, 0.0, 0.5);
  return 2.0 * (1.0 - 2.0 * eps);
}

double domain_classifier_error(const Matrix& fs, const Matrix& ft, std::uint64_t seed,
                               const DomainClassifierOptions& opts) {
  require(fs.cols() == ft.cols(), ErrorCode::kValidation,
          "domain classifier: feature dims differ");
  require(fs.rows() >= static_cast<Eigen::Index>(kMinRowsPerClass) &&
              ft.rows() >= static_cast<Eigen::Index>(kMinRowsPerClass),
          ErrorCode::kValidation, "domain classifier: need at least 2 rows per domain");
  require_finite(fs, "source features");
  require_finite(ft, "target features");
  return classifier_error_unchecked(fs, ft, seed, opts);
}

double proxy_a_distance(const Matrix& fs, const Matrix& ft, std::uint64_t seed,
                        const DomainClassifierOptions& opts) {
  require(fs.rows() >= 4 && ft.rows() >= 4, ErrorCode::kValidation,
          "proxy A-distance: need at least 4 rows per domain");
  return a_distance_from_error(domain_classifier_error(fs, ft, seed, opts));
}

ADistanceReport local_a_distance(const Matrix& fs, std::span<const int> ys, const Matrix& ft,
                                 std::span<const int> yt, std::size_t classes, std::uint64_t seed,
                                 const std::optional<std::vector<double>>& priors,
                                 const DomainClassifierOptions& opts) {
  require(static_cast<std::size_t>(fs.rows()) == ys.size() &&
              static_cast<std::size_t>(ft.rows()) == yt.size(),
          ErrorCode::kValidation, "A-distance: label count does not match rows");
  require(classes >= 1, ErrorCode::kValidation, "A-distance: no classes");

  ADistanceReport r;
  r.global_error = std::clamp(domain_classifier_error(fs, ft, seed, opts), 0.0, 0.5);
  r.global_d = a_distance_from_error(r.global_error);

  std::vector<double> p(classes, 0.0);
  if (priors) {
    require(priors->size() == classes, ErrorCode::kValidation,
            "A-distance: prior count does not match classes");
    p = *priors;
  } else {
    for (const int y : yt)
      if (y >= 0 && static_cast<std::size_t>(y) < classes) p[static_cast<std::size_t>(y)] += 1.0;
  }

  r.per_class_d.assign(classes, 0.0);
  r.per_class_error.assign(classes, 0.5);
  r.class_priors.assign(classes, 0.0);
  double prior_mass = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto si = rows_with(ys, static_cast<int>(c));
    const auto ti = rows_with(yt, static_cast<int>(c));
    if (si.size() < kMinRowsPerClass || ti.size() < kMinRowsPerClass || !(p[c] > 0.0)) {
      r.excluded_classes.push_back(c);
      continue;
    }
    const double eps = std::clamp(
        domain_classifier_error(take_rows(fs, si), take_rows(ft, ti),
                                seed + static_cast<std::uint64_t>(c) * kClassSeedStride, opts),
        0.0, 0.5);
    r.per_class_error[c] = eps;
    r.per_class_d[c] = a_distance_from_error(eps);
    r.class_priors[c] = p[c];
    prior_mass += p[c];
  }
  require(prior_mass > 0.0, ErrorCode::kValidation,
          "A-distance: no class has at least 2 rows in both domains");

  double acc = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    r.class_priors[c] /= prior_mass;
    acc += r.class_priors[c] * (1.0 - 2.0 * r.per_class_error[c]);
  }
  r.local_d = 2.0 * acc;
  return r;
}

MeasuredDiscrepancy measure_feature_discrepancies(const Matrix& zs, std::span<const int> ys,
                                                  const Matrix& zt, std::span<const int> yt,
                                                  std::size_t classes, const KernelSpec& spec) {
  const KernelSpec frozen = spec.frozen_at(resolve_bandwidth(spec, zs, zt));
  MeasuredDiscrepancy m;
  m.bandwidth = *frozen.base_bandwidth;
  m.mmd = mmd(zs, zt, frozen).value;
  const DiscrepancyResult l = lmmd(zs, zt, class_weights(one_hot(ys, classes)),
                                   class_weights(one_hot(yt, classes)), frozen);
  m.lmmd = l.value;
  m.contributing_classes = l.contributing_classes;
  return m;
}

MeasuredDiscrepancy measure_discrepancies(const MlpModel& model, const Matrix& fs,
                                          std::span<const int> ys, const Matrix& ft,
                                          std::span<const int> yt, const KernelSpec& spec) {
  return measure_feature_discrepancies(forward(model, fs).bottleneck, ys,
                                       forward(model, ft).bottleneck, yt, model.classes(), spec);
}

}  // namespace dsan
