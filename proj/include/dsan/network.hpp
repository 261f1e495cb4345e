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
#include <string>
#include <vector>

#include "dsan/matrix.hpp"

namespace dsan {

struct LayerParams {
  Matrix weight;   // fan_in x fan_out
  RowVector bias;  // fan_out

  bool operator==(const LayerParams& o) const {
    return weight == o.weight && bias == o.bias;
  }
};

// Feed-forward classifier with dims {input, hidden..., bottleneck, classes}.
// Hidden layers use a rectifier, the bottleneck layer is linear (its output is
// the adapted representation), and the last layer emits logits.
struct MlpModel {
  std::vector<std::size_t> layer_dims;
  std::uint64_t seed = 0;
  std::vector<LayerParams> layers;

  // Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)), zero biases.
  static MlpModel init(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t classes() const { return layer_dims.back(); }
  std::size_t bottleneck_dim() const { return layer_dims[layer_dims.size() - 2]; }
  std::size_t bottleneck_layer() const { return layers.size() - 2; }
  std::size_t parameter_count() const;

  bool operator==(const MlpModel&) const = default;
};

struct ForwardTrace {
  std::vector<Matrix> inputs;  // inputs[l] feeds layer l; inputs[0] is X
  std::vector<Matrix> pre;     // pre[l] = inputs[l] * W_l + b_l
  Matrix bottleneck;           // output of the bottleneck layer
  Matrix probs;                // row-wise softmax of the logits

  const Matrix& logits() const { return pre.back(); }
};

// Gradient buffers with the same shapes as MlpModel::layers.
struct ModelGradients {
  std::vector<LayerParams> layers;

  static ModelGradients zeros_like(const MlpModel& model);
  double max_abs() const;
};

Matrix softmax_rows(const Matrix& logits);

ForwardTrace forward(const MlpModel& model, const Matrix& x);

// -(1/n) sum_i sum_c onehot[i,c] log(max(probs[i,c], 1e-12)).
double cross_entropy(const Matrix& probs, const Matrix& onehot);

// Gradient of  CE(source) + lambda * D  where D is a discrepancy on the
// bottleneck whose gradients w.r.t. the source and target bottleneck rows are
// given. The target path carries only the discrepancy term.
ModelGradients backward(const MlpModel& model, const ForwardTrace& source,
                        const Matrix& onehot_source, const Matrix& disc_grad_source,
                        const ForwardTrace& target, const Matrix& disc_grad_target,
                        double lambda);

// Text format: a header with layer dims and seed followed by hex-float
// parameters, so load(save(m)) is bit-exact.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace dsan
