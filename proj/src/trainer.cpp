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

#include "dsan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "dsan/discrepancy.hpp"
#include "dsan/error.hpp"
#include "dsan/metrics.hpp"

namespace dsan {
namespace {

// Endless shuffled index stream over [0, n) in fixed-size batches.
class BatchCycler {
 public:
  BatchCycler(std::size_t n, std::size_t batch, std::uint64_t seed)
      : order_(n), batch_(batch), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    reshuffle();
  }

  std::vector<std::size_t> next() {
    if (pos_ + batch_ > order_.size()) reshuffle();
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_));
    pos_ += batch_;
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  std::mt19937_64 rng_;
};

void sgd_momentum(TrainState& state, const ModelGradients& g, double eta, double momentum) {
  for (std::size_t l = 0; l < state.model.layers.size(); ++l) {
    auto& v = state.velocity.layers[l];
    auto& p = state.model.layers[l];
    v.weight = momentum * v.weight - eta * g.layers[l].weight;
    v.bias = momentum * v.bias - eta * g.layers[l].bias;
    p.weight += v.weight;
    p.bias += v.bias;
  }
}

std::vector<int> labels_of(const Dataset& ds, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto r : rows) out.push_back(ds.labels[r]);
  return out;
}

Matrix rows_of(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

bool parameters_finite(const MlpModel& m) {
  for (const auto& l : m.layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

}  // namespace

const char* to_string(TrainMode mode) {
  return mode == TrainMode::kDsan ? "dsan" : "source_only";
}

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "dsan") return TrainMode::kDsan;
  if (s == "source_only") return TrainMode::kSourceOnly;
  fail(ErrorCode::kConfig, "unknown training mode '" + s + "' (expected dsan or source_only)");
}

void TrainConfig::validate() const {
  require(std::isfinite(eta0) && eta0 > 0.0, ErrorCode::kConfig, "eta0 must be > 0");
  require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::kConfig, "alpha must be >= 0");
  require(std::isfinite(beta) && beta >= 0.0, ErrorCode::kConfig, "beta must be >= 0");
  require(std::isfinite(gamma) && gamma >= 0.0, ErrorCode::kConfig, "gamma must be >= 0");
  require(std::isfinite(momentum) && momentum >= 0.0 && momentum < 1.0, ErrorCode::kConfig,
          "momentum must be in [0, 1)");
  require(std::isfinite(lambda_max) && lambda_max >= 0.0, ErrorCode::kConfig,
          "lambda_max must be >= 0");
  require(batch_size >= 1, ErrorCode::kConfig, "batch_size must be >= 1");
  require(bottleneck >= 1, ErrorCode::kConfig, "bottleneck must be >= 1");
  for (const auto h : hidden) require(h >= 1, ErrorCode::kConfig, "hidden sizes must be >= 1");
  kernel.validate();
}

std::vector<std::size_t> TrainConfig::layer_dims(std::size_t input_dim, std::size_t classes) const {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(bottleneck);
  dims.push_back(classes);
  return dims;
}

double lr_schedule(double theta, const TrainConfig& cfg) {
  return cfg.eta0 / std::pow(1.0 + cfg.alpha * theta, cfg.beta);
}

double lambda_schedule(double theta, const TrainConfig& cfg) {
  return cfg.lambda_max * (2.0 / (1.0 + std::exp(-cfg.gamma * theta)) - 1.0);
}

IterationRecord train_step(TrainState& state, const TrainConfig& cfg, const Matrix& xs,
                           const Matrix& onehot_s, const Matrix& xt, double theta,
                           std::span<const int> target_eval_labels) {
  require(xs.rows() >= 1 && xt.rows() >= 1, ErrorCode::kValidation, "train step: empty batch");
  require(xs.rows() == xt.rows(), ErrorCode::kValidation,
          "train step: source and target batches differ in size");
  cfg.kernel.validate();

  IterationRecord rec;
  rec.theta = theta;
  rec.eta = lr_schedule(theta, cfg);
  rec.lambda = cfg.mode == TrainMode::kDsan ? lambda_schedule(theta, cfg) : 0.0;

  const ForwardTrace ts = forward(state.model, xs);
  const ForwardTrace tt = forward(state.model, xt);
  if (!ts.probs.allFinite() || !tt.probs.allFinite() || !ts.bottleneck.allFinite() ||
      !tt.bottleneck.allFinite())
    fail(ErrorCode::kRuntime, "training diverged (non-finite activations)");
  rec.ce_loss = cross_entropy(ts.probs, onehot_s);

  std::vector<int> ys(static_cast<std::size_t>(onehot_s.rows()));
  for (Eigen::Index i = 0; i < onehot_s.rows(); ++i) {
    Eigen::Index c = 0;
    onehot_s.row(i).maxCoeff(&c);
    ys[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  rec.source_acc = accuracy(ts.probs, ys);
  if (!target_eval_labels.empty()) rec.target_acc = accuracy(tt.probs, target_eval_labels);

  Matrix grad_s = Matrix::Zero(ts.bottleneck.rows(), ts.bottleneck.cols());
  Matrix grad_t = Matrix::Zero(tt.bottleneck.rows(), tt.bottleneck.cols());
  try {
    const ClassWeights ws = class_weights(onehot_s);
    const ClassWeights wt = class_weights(tt.probs);
    DiscrepancyResult d = lmmd(ts.bottleneck, tt.bottleneck, ws, wt, cfg.kernel, true);
    rec.lmmd_loss = d.value;
    rec.contributing_classes = d.contributing_classes;
    rec.bandwidth = d.bandwidth;
    grad_s = std::move(*d.grad_source);
    grad_t = std::move(*d.grad_target);
  } catch (const Error& e) {
    // The kernel spec was validated up front, so a config error here means the
    // activations blew up (e.g. an infinite median bandwidth).
    if (e.code() == ErrorCode::kConfig)
      fail(ErrorCode::kRuntime, std::string("training diverged: ") + e.what());
    if (e.code() != ErrorCode::kEmptyOverlap && e.code() != ErrorCode::kDegenerateBatch) throw;
    rec.lmmd_skipped = true;
  }

  const ModelGradients g = backward(state.model, ts, onehot_s, grad_s, tt, grad_t, rec.lambda);
  sgd_momentum(state, g, rec.eta, cfg.momentum);
  return rec;
}

TrainResult train(const TrainConfig& cfg, const Dataset& source, const Dataset& target,
                  bool eval_target_labels, const TraceSink& sink) {
  cfg.validate();
  source.validate();
  target.validate();
  require(source.size() >= 1 && target.size() >= 1, ErrorCode::kValidation,
          "train: source and target must be non-empty");
  require(source.dim() == target.dim(), ErrorCode::kValidation,
          "train: source and target feature dims differ");
  require(source.fully_labeled(), ErrorCode::kValidation, "train: source rows must be labeled");

  const std::size_t classes = std::max(source.class_count, target.class_count);
  require(classes >= 1, ErrorCode::kValidation, "train: no classes");

  TrainResult result{MlpModel::init(cfg.layer_dims(source.dim(), classes), cfg.seed), {}, {}, 0, {}};
  result.model = result.initial_model;

  const std::size_t batch = std::min({cfg.batch_size, source.size(), target.size()});
  if (batch < cfg.batch_size)
    result.warnings.push_back("batch size reduced to " + std::to_string(batch) +
                              " to fit the smaller domain");
  if (batch < classes)
    result.warnings.push_back("batch size " + std::to_string(batch) + " is below the class count " +
                              std::to_string(classes));

  const bool have_target_labels = eval_target_labels && target.fully_labeled();
  const Matrix onehot_all = one_hot(source.labels, classes);

  std::seed_seq seq{cfg.seed, std::uint64_t{0x5eed}};
  std::uint64_t stream_seeds[2];
  {
    std::mt19937_64 mix(seq);
    stream_seeds[0] = mix();
    stream_seeds[1] = mix();
  }
  BatchCycler source_batches(source.size(), batch, stream_seeds[0]);
  BatchCycler target_batches(target.size(), batch, stream_seeds[1]);

  TrainState state(result.model);
  const auto start = std::chrono::steady_clock::now();
  result.trace.reserve(cfg.total_iters);
  for (std::size_t it = 0; it < cfg.total_iters; ++it) {
    const double theta = static_cast<double>(it) / static_cast<double>(cfg.total_iters);
    const auto s_rows = source_batches.next();
    const auto t_rows = target_batches.next();
    const std::vector<int> t_labels =
        have_target_labels ? labels_of(target, t_rows) : std::vector<int>{};
    IterationRecord rec =
        train_step(state, cfg, rows_of(source.features, s_rows), rows_of(onehot_all, s_rows),
                   rows_of(target.features, t_rows), theta, t_labels);
    rec.iter = it;
    if (!std::isfinite(rec.ce_loss) || !std::isfinite(rec.lmmd_loss) ||
        !parameters_finite(state.model))
      fail(ErrorCode::kRuntime, "training diverged at iteration " + std::to_string(it) +
                                    " (non-finite loss or parameters)");
    rec.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (rec.lmmd_skipped) ++result.skipped_lmmd_steps;
    if (sink) sink(rec);
    result.trace.push_back(rec);
  }
  result.model = std::move(state.model);
  return result;
}

}  // namespace dsan
