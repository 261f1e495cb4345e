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

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "dsan/discrepancy.hpp"
#include "dsan/error.hpp"
#include "oracles.hpp"

using namespace dsan;
using testing::random_label_rows;
using testing::random_matrix;
using testing::rel_max_err;

namespace {

Matrix uniform_column(Eigen::Index n) { return Matrix::Ones(n, 1); }

Matrix permute_rows(const Matrix& m, const std::vector<Eigen::Index>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(perm[i]);
  return out;
}

}  // namespace

TEST_CASE("class weights normalize each column") {
  Matrix hard(3, 2);
  hard << 1, 0, 1, 0, 0, 1;
  const ClassWeights w = class_weights(hard);
  CHECK(w.weights(0, 0) == 0.5);
  CHECK(w.weights(1, 0) == 0.5);
  CHECK(w.weights(2, 0) == 0.0);
  CHECK(w.weights(2, 1) == 1.0);
  CHECK(w.present == std::vector<bool>{true, true});

  Matrix soft(2, 2);
  soft << 0.6, 0.4, 0.2, 0.8;
  const ClassWeights s = class_weights(soft);
  CHECK(s.weights(0, 0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(s.weights(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s.weights(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(s.weights(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  Matrix absent(3, 2);
  absent << 1, 0, 1, 0, 1, 0;
  const ClassWeights a = class_weights(absent);
  CHECK(a.weights.col(1).isZero());
  CHECK(a.present == std::vector<bool>{true, false});
}

TEST_CASE("class weights reject malformed rows") {
  Matrix negative(1, 2);
  negative << 1.2, -0.2;
  Matrix unnormalized(1, 2);
  unnormalized << 0.5, 0.4;
  for (const Matrix* m : {&negative, &unnormalized}) {
    try {
      class_weights(*m);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kValidation);
    }
  }
}

TEST_CASE("class weight columns sum to one or zero") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix y = random_label_rows(1 + trial % 9, 1 + trial % 4, rng, trial % 2 == 0);
    const ClassWeights w = class_weights(y);
    CHECK(w.weights.minCoeff() >= 0.0);
    for (Eigen::Index c = 0; c < w.weights.cols(); ++c) {
      const double s = w.weights.col(c).sum();
      CHECK((std::abs(s - 1.0) <= 1e-12 || s == 0.0));
    }
  }
}

TEST_CASE("mmd examples") {
  std::mt19937_64 rng(1);
  const Matrix z = random_matrix(6, 3, rng);
  CHECK(std::abs(mmd(z, z, KernelSpec::median()).value) <= 1e-15);

  const Matrix a = Matrix::Zero(1, 1);
  const Matrix b = Matrix::Ones(1, 1);
  CHECK(mmd(a, b, KernelSpec::single(1.0)).value ==
        doctest::Approx(1.2642411176571153).epsilon(1e-14));

  const Matrix zs = random_matrix(5, 2, rng);
  const Matrix zt = random_matrix(7, 2, rng, 3.0);
  double previous = mmd(zs, zt, KernelSpec::fixed(1.0)).value;
  for (const double bw : {1e2, 1e4, 1e8}) {
    const double v = mmd(zs, zt, KernelSpec::fixed(bw)).value;
    CHECK(v < previous);
    previous = v;
  }
  CHECK(previous < 1e-7);
}

TEST_CASE("mmd matches the term-by-term oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix zs = random_matrix(1 + trial % 9, 3, rng);
    const Matrix zt = random_matrix(1 + (trial * 5) % 11, 3, rng, 1.5);
    const KernelSpec spec = KernelSpec::median();
    const DiscrepancyResult r = mmd(zs, zt, spec);
    const double oracle = testing::naive_mmd(zs, zt, spec.multipliers, r.bandwidth);
    CHECK(std::abs(r.value - oracle) <= 1e-10 * std::max(1.0, std::abs(oracle)));
  }
}

TEST_CASE("lmmd of identical batches is zero") {
  std::mt19937_64 rng(4);
  const Matrix z = random_matrix(8, 4, rng);
  const ClassWeights w = class_weights(random_label_rows(8, 3, rng, false));
  const DiscrepancyResult r = lmmd(z, z, w, w, KernelSpec::median(), true);
  CHECK(std::abs(r.value) <= 1e-14);
  CHECK(r.grad_source->cwiseAbs().maxCoeff() + r.grad_target->cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("lmmd with one uniform class reduces to mmd") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix zs = random_matrix(2 + trial % 10, 3, rng);
    const Matrix zt = random_matrix(3 + trial % 7, 3, rng, 2.0);
    const ClassWeights ws = class_weights(uniform_column(zs.rows()));
    const ClassWeights wt = class_weights(uniform_column(zt.rows()));
    const KernelSpec spec = KernelSpec::median();
    const DiscrepancyResult l = lmmd(zs, zt, ws, wt, spec, true);
    const DiscrepancyResult m = mmd(zs, zt, spec, true);
    CHECK(std::abs(l.value - m.value) <= 1e-12);
    CHECK(rel_max_err(*l.grad_source, *m.grad_source) <= 1e-10);
    CHECK(rel_max_err(*l.grad_target, *m.grad_target) <= 1e-10);
  }
}

TEST_CASE("vectorized lmmd matches the nested-loop oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Eigen::Index ns = 1 + static_cast<Eigen::Index>(rng() % 16);
    const Eigen::Index nt = 1 + static_cast<Eigen::Index>(rng() % 16);
    const Eigen::Index classes = 1 + static_cast<Eigen::Index>(rng() % 5);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 8);
    const Matrix zs = random_matrix(ns, d, rng);
    const Matrix zt = random_matrix(nt, d, rng, 1.3);
    Matrix ys = random_label_rows(ns, classes, rng, true);
    const Matrix yt = random_label_rows(nt, classes, rng, false);
    ys(0, 0) = 1.0;  // guarantees one shared class
    ys.row(0).tail(classes - 1).setZero();

    const KernelSpec spec = KernelSpec::median();
    DiscrepancyResult r;
    try {
      r = lmmd(zs, zt, class_weights(ys), class_weights(yt), spec);
    } catch (const Error& e) {
      // Only a degenerate single-row batch can fail here.
      CHECK(e.code() == ErrorCode::kDegenerateBatch);
      continue;
    }
    const double oracle = testing::naive_lmmd(zs, zt, ys, yt, spec.multipliers, r.bandwidth);
    CHECK(std::abs(r.value - oracle) <= 1e-10 * std::max(std::abs(oracle), 1e-300) + 1e-15);
  }
}

TEST_CASE("lmmd is symmetric in domain order") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix zs = random_matrix(6, 3, rng);
    const Matrix zt = random_matrix(9, 3, rng, 2.0);
    const ClassWeights ws = class_weights(random_label_rows(6, 3, rng, false));
    const ClassWeights wt = class_weights(random_label_rows(9, 3, rng, false));
    const double ab = lmmd(zs, zt, ws, wt, KernelSpec::median()).value;
    const double ba = lmmd(zt, zs, wt, ws, KernelSpec::median()).value;
    CHECK(std::abs(ab - ba) <= 1e-12);
  }
}

TEST_CASE("lmmd is invariant to a joint row permutation") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix zs = random_matrix(10, 4, rng);
    const Matrix zt = random_matrix(7, 4, rng, 2.0);
    const Matrix ys = random_label_rows(10, 3, rng, false);
    const ClassWeights wt = class_weights(random_label_rows(7, 3, rng, false));
    std::vector<Eigen::Index> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const double v = lmmd(zs, zt, class_weights(ys), wt, KernelSpec::median()).value;
    const double vp = lmmd(permute_rows(zs, perm), zt, class_weights(permute_rows(ys, perm)), wt,
                           KernelSpec::median())
                          .value;
    CHECK(std::abs(v - vp) <= 1e-12);
  }
}

TEST_CASE("lmmd excludes classes missing on either side") {
  Matrix zs(4, 1), zt(4, 1);
  zs << 0, 1, 2, 3;
  zt << 0.5, 1.5, 2.5, 3.5;
  Matrix ys(4, 3), yt(4, 3);
  ys << 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0;  // class 2 absent in source
  yt << 1, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1;
  const KernelSpec spec = KernelSpec::single(1.0);
  const DiscrepancyResult r = lmmd(zs, zt, class_weights(ys), class_weights(yt), spec);
  CHECK(r.contributing_classes == 2);
  CHECK(r.per_class[2] == 0.0);
  CHECK(r.value == doctest::Approx((r.per_class[0] + r.per_class[1]) / 2.0).epsilon(1e-15));
  CHECK(r.value == doctest::Approx(testing::naive_lmmd(zs, zt, ys, yt, {1.0}, 1.0)).epsilon(1e-12));
}

TEST_CASE("lmmd with no shared class reports empty overlap") {
  Matrix z(2, 1);
  z << 0, 1;
  Matrix ys(2, 2), yt(2, 2);
  ys << 1, 0, 1, 0;
  yt << 0, 1, 0, 1;
  try {
    lmmd(z, z, class_weights(ys), class_weights(yt), KernelSpec::median());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyOverlap);
  }
}

TEST_CASE("lmmd rejects mismatched shapes") {
  std::mt19937_64 rng(10);
  const Matrix zs = random_matrix(3, 2, rng);
  const Matrix zt = random_matrix(3, 3, rng);
  const ClassWeights w = class_weights(random_label_rows(3, 2, rng, false));
  CHECK_THROWS_AS(lmmd(zs, zt, w, w, KernelSpec::median()), Error);
  const ClassWeights w3 = class_weights(random_label_rows(3, 3, rng, false));
  CHECK_THROWS_AS(lmmd(zs, zs, w, w3, KernelSpec::median()), Error);
}

TEST_CASE("analytic lmmd gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const Eigen::Index ns = 2 + static_cast<Eigen::Index>(rng() % 8);
    const Eigen::Index nt = 2 + static_cast<Eigen::Index>(rng() % 8);
    const Eigen::Index classes = 1 + static_cast<Eigen::Index>(rng() % 4);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 5);
    const Matrix zs = random_matrix(ns, d, rng);
    const Matrix zt = random_matrix(nt, d, rng, 1.5);
    const ClassWeights ws = class_weights(random_label_rows(ns, classes, rng, false));
    const ClassWeights wt = class_weights(random_label_rows(nt, classes, rng, false));
    const KernelSpec spec = KernelSpec::median();

    const DiscrepancyResult r = lmmd(zs, zt, ws, wt, spec, true);
    const auto [fs, ft] = lmmd_finite_diff(zs, zt, ws, wt, spec, 1e-5);
    CHECK(rel_max_err(*r.grad_source, fs) < 1e-4);
    CHECK(rel_max_err(*r.grad_target, ft) < 1e-4);
  }
}

TEST_CASE("finite differences agree with an oracle-based difference quotient") {
  std::mt19937_64 rng(77);
  const Matrix zs = random_matrix(4, 2, rng);
  const Matrix zt = random_matrix(5, 2, rng);
  const Matrix ys = random_label_rows(4, 2, rng, false);
  const Matrix yt = random_label_rows(5, 2, rng, false);
  const KernelSpec spec = KernelSpec::median();
  const double b = resolve_bandwidth(spec, zs, zt);
  const auto [fs, ft] =
      lmmd_finite_diff(zs, zt, class_weights(ys), class_weights(yt), spec, 1e-5);

  const double h = 1e-5;
  Matrix work = zs;
  Matrix oracle(zs.rows(), zs.cols());
  for (Eigen::Index i = 0; i < zs.rows(); ++i)
    for (Eigen::Index j = 0; j < zs.cols(); ++j) {
      work(i, j) = zs(i, j) + h;
      const double up = testing::naive_lmmd(work, zt, ys, yt, spec.multipliers, b);
      work(i, j) = zs(i, j) - h;
      const double down = testing::naive_lmmd(work, zt, ys, yt, spec.multipliers, b);
      work(i, j) = zs(i, j);
      oracle(i, j) = (up - down) / (2 * h);
    }
  CHECK(rel_max_err(fs, oracle) < 1e-6);
}

TEST_CASE("finite differences vanish at identical batches") {
  std::mt19937_64 rng(12);
  const Matrix z = random_matrix(5, 3, rng);
  const ClassWeights w = class_weights(random_label_rows(5, 2, rng, false));
  const auto [fs, ft] = lmmd_finite_diff(z, z, w, w, KernelSpec::median(), 1e-5);
  CHECK(fs.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(ft.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("single-class finite differences equal the mmd gradient") {
  std::mt19937_64 rng(13);
  const Matrix zs = random_matrix(6, 2, rng);
  const Matrix zt = random_matrix(4, 2, rng, 2.0);
  const KernelSpec spec = KernelSpec::median();
  const auto [fs, ft] = lmmd_finite_diff(zs, zt, class_weights(uniform_column(6)),
                                         class_weights(uniform_column(4)), spec, 1e-5);
  const DiscrepancyResult m = mmd(zs, zt, spec, true);
  CHECK(rel_max_err(*m.grad_source, fs) < 1e-4);
  CHECK(rel_max_err(*m.grad_target, ft) < 1e-4);
}

TEST_CASE("hard target labels give the conditional mmd") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index classes = 1 + trial % 4;
    const Matrix zs = random_matrix(12, 3, rng);
    const Matrix zt = random_matrix(10, 3, rng, 1.5);
    std::vector<int> ys(12), yt(10);
    for (auto& y : ys) y = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
    for (auto& y : yt) y = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
    ys[0] = yt[0] = 0;
    const auto c = static_cast<std::size_t>(classes);
    const KernelSpec spec = KernelSpec::median();
    const double l = lmmd(zs, zt, class_weights(one_hot(ys, c)), class_weights(one_hot(yt, c)), spec).value;
    CHECK(std::abs(l - cmmd(zs, ys, zt, yt, c, spec)) <= 1e-12);
  }
}
