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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsan/data.hpp"
#include "dsan/kernels.hpp"
#include "dsan/network.hpp"

namespace dsan {

enum class TrainMode { kDsan, kSourceOnly };

const char* to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
  double eta0 = 0.01;
  double alpha = 10.0;
  double beta = 0.75;
  double gamma = 10.0;
  double momentum = 0.9;
  double lambda_max = 1.0;
  std::size_t batch_size = 8;
  std::size_t total_iters = 3000;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kDsan;
  std::vector<std::size_t> hidden = {64};
  std::size_t bottleneck = 32;
  KernelSpec kernel = KernelSpec::median();

  void validate() const;
  std::vector<std::size_t> layer_dims(std::size_t input_dim, std::size_t classes) const;

  bool operator==(const TrainConfig&) const = default;
};

// eta0 / (1 + alpha * theta)^beta
double lr_schedule(double theta, const TrainConfig& cfg);

// lambda_max * (2 / (1 + exp(-gamma * theta)) - 1); 0 at theta = 0.
double lambda_schedule(double theta, const TrainConfig& cfg);

struct IterationRecord {
  std::size_t iter = 0;
  double theta = 0.0;
  double eta = 0.0;
  double lambda = 0.0;
  double ce_loss = 0.0;
  double lmmd_loss = 0.0;
  std::size_t contributing_classes = 0;
  bool lmmd_skipped = false;  // empty class overlap or degenerate batch
  double bandwidth = 0.0;
  double source_acc = 0.0;
  std::optional<double> target_acc;  // pseudo-label accuracy, when labels are known
  double elapsed_s = 0.0;
};

struct TrainState {
  MlpModel model;
  ModelGradients velocity;

  explicit TrainState(MlpModel m)
      : model(std::move(m)), velocity(ModelGradients::zeros_like(model)) {}
};

// One joint update on equal-sized source and target batches. Target soft
// labels come from the current model and are held constant; the LMMD term is
// dropped for the step (and flagged) when no class overlaps.
IterationRecord train_step(TrainState& state, const TrainConfig& cfg, const Matrix& xs,
                           const Matrix& onehot_s, const Matrix& xt, double theta,
                           std::span<const int> target_eval_labels = {});

using TraceSink = std::function<void(const IterationRecord&)>;

struct TrainResult {
  MlpModel initial_model;
  MlpModel model;
  std::vector<IterationRecord> trace;
  std::size_t skipped_lmmd_steps = 0;
  std::vector<std::string> warnings;
};

// Runs cfg.total_iters steps with theta = iter / total_iters. Source and
// target batches cycle independently with a seeded reshuffle each epoch; the
// ragged tail of an epoch is dropped. Target labels, when present and
// `eval_target_labels` is set, are used only for the trace.
TrainResult train(const TrainConfig& cfg, const Dataset& source, const Dataset& target,
                  bool eval_target_labels = true, const TraceSink& sink = {});

}  // namespace dsan
