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

#include "dsan/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "dsan/error.hpp"

namespace dsan {
namespace {

constexpr double kLogClamp = 1e-12;
constexpr const char* kModelMagic = "dsan-mlp";
constexpr int kModelVersion = 1;

bool is_hidden(const MlpModel& model, std::size_t layer) {
  return layer + 2 < model.layers.size();
}

// Accumulates parameter gradients for one trace given the upstream gradient at
// the logits (may be empty) and at the bottleneck output.
void backprop(const MlpModel& model, const ForwardTrace& trace, const Matrix* dlogits,
              const Matrix& dbottleneck, ModelGradients& grads) {
  const std::size_t last = model.layers.size() - 1;
  Matrix upstream = dbottleneck;
  if (dlogits != nullptr) {
    grads.layers[last].weight.noalias() += trace.inputs[last].transpose() * *dlogits;
    grads.layers[last].bias += dlogits->colwise().sum();
    upstream += *dlogits * model.layers[last].weight.transpose();
  }
  for (std::size_t l = last; l-- > 0;) {
    Matrix delta = upstream;
    if (is_hidden(model, l)) delta.array() *= (trace.pre[l].array() > 0.0).cast<double>();
    grads.layers[l].weight.noalias() += trace.inputs[l].transpose() * delta;
    grads.layers[l].bias += delta.colwise().sum();
    if (l > 0) upstream = delta * model.layers[l].weight.transpose();
  }
}

}  // namespace

MlpModel MlpModel::init(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
  require(layer_dims.size() >= 3, ErrorCode::kConfig,
          "model needs at least input, bottleneck, and class dims");
  for (const std::size_t d : layer_dims)
    require(d >= 1, ErrorCode::kConfig, "model layer dims must be >= 1");

  MlpModel m;
  m.layer_dims = layer_dims;
  m.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(layer_dims[l]);
    const auto fan_out = static_cast<Eigen::Index>(layer_dims[l + 1]);
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-r, r);
    LayerParams p{Matrix(fan_in, fan_out), RowVector::Zero(fan_out)};
    for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = dist(rng);
    m.layers.push_back(std::move(p));
  }
  return m;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

ModelGradients ModelGradients::zeros_like(const MlpModel& model) {
  ModelGradients g;
  for (const auto& l : model.layers)
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        RowVector::Zero(l.bias.size())});
  return g;
}

double ModelGradients::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    if (l.weight.size() > 0) m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    if (l.bias.size() > 0) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    // std::exp rather than Eigen's vectorized exp, which clamps very negative
    // inputs to a subnormal instead of returning an exact zero.
    const double top = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) sum += p(i, c) = std::exp(logits(i, c) - top);
    p.row(i) /= sum;
  }
  return p;
}

ForwardTrace forward(const MlpModel& model, const Matrix& x) {
  require(x.cols() == static_cast<Eigen::Index>(model.input_dim()), ErrorCode::kConfig,
          "forward: input has " + std::to_string(x.cols()) + " columns, model expects " +
              std::to_string(model.input_dim()));
  require_finite(x, "forward input");

  ForwardTrace t;
  Matrix h = x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& p = model.layers[l];
    Matrix z = h * p.weight;
    z.rowwise() += p.bias;
    t.inputs.push_back(std::move(h));
    if (is_hidden(model, l)) {
      h = z.cwiseMax(0.0);
    } else {
      h = z;
    }
    if (l == model.bottleneck_layer()) t.bottleneck = z;
    t.pre.push_back(std::move(z));
  }
  t.probs = softmax_rows(t.pre.back());
  return t;
}

double cross_entropy(const Matrix& probs, const Matrix& onehot) {
  require(probs.rows() == onehot.rows() && probs.cols() == onehot.cols(), ErrorCode::kValidation,
          "cross entropy: probability and label shapes differ");
  require(probs.rows() >= 1, ErrorCode::kValidation, "cross entropy: empty batch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    for (Eigen::Index c = 0; c < probs.cols(); ++c)
      if (onehot(i, c) != 0.0) total += onehot(i, c) * std::log(std::max(probs(i, c), kLogClamp));
  return -total / static_cast<double>(probs.rows());
}

ModelGradients backward(const MlpModel& model, const ForwardTrace& source,
                        const Matrix& onehot_source, const Matrix& disc_grad_source,
                        const ForwardTrace& target, const Matrix& disc_grad_target,
                        double lambda) {
  require(onehot_source.rows() == source.probs.rows() &&
              onehot_source.cols() == source.probs.cols(),
          ErrorCode::kValidation, "backward: label shape does not match source outputs");
  require(disc_grad_source.rows() == source.bottleneck.rows() &&
              disc_grad_source.cols() == source.bottleneck.cols(),
          ErrorCode::kValidation, "backward: source discrepancy gradient shape mismatch");
  require(disc_grad_target.rows() == target.bottleneck.rows() &&
              disc_grad_target.cols() == target.bottleneck.cols(),
          ErrorCode::kValidation, "backward: target discrepancy gradient shape mismatch");

  ModelGradients g = ModelGradients::zeros_like(model);
  const Matrix dlogits =
      (source.probs - onehot_source) / static_cast<double>(source.probs.rows());
  backprop(model, source, &dlogits, lambda * disc_grad_source, g);
  if (lambda != 0.0) backprop(model, target, nullptr, lambda * disc_grad_target, g);
  return g;
}

void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write model file '" + path + "'");
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "layer_dims";
  for (const auto d : model.layer_dims) out << ' ' << d;
  out << "\nseed " << model.seed << '\n';
  out << std::hexfloat;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& p = model.layers[l];
    out << "layer " << l << '\n';
    for (Eigen::Index i = 0; i < p.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.weight.cols(); ++j) out << (j ? " " : "") << p.weight(i, j);
      out << '\n';
    }
    for (Eigen::Index j = 0; j < p.bias.size(); ++j) out << (j ? " " : "") << p.bias(j);
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing model file '" + path + "'");
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read model file '" + path + "'");

  auto parse_fail = [&](const std::string& what) -> void {
    fail(ErrorCode::kParse, "model file '" + path + "': " + what);
  };

  std::string line;
  std::string magic;
  int version = 0;
  if (!std::getline(in, line)) parse_fail("missing header");
  {
    std::istringstream ss(line);
    ss >> magic >> version;
    if (magic != kModelMagic || version != kModelVersion) parse_fail("unrecognized header");
  }

  std::vector<std::size_t> dims;
  if (!std::getline(in, line)) parse_fail("missing layer_dims");
  {
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key != "layer_dims") parse_fail("expected layer_dims");
    std::size_t d;
    while (ss >> d) dims.push_back(d);
  }

  std::uint64_t seed = 0;
  if (!std::getline(in, line)) parse_fail("missing seed");
  {
    std::istringstream ss(line);
    std::string key;
    ss >> key >> seed;
    if (key != "seed" || ss.fail()) parse_fail("expected seed");
  }

  MlpModel m;
  try {
    m = MlpModel::init(dims, seed);
  } catch (const Error& e) {
    parse_fail(e.what());
  }

  // Hex floats are parsed with strtod; iostream extraction of hexfloat is not
  // reliable across standard libraries.
  auto read_row = [&](Eigen::Index count, double* dst) {
    if (!std::getline(in, line)) parse_fail("truncated parameters");
    const char* p = line.c_str();
    for (Eigen::Index k = 0; k < count; ++k) {
      char* end = nullptr;
      dst[k] = std::strtod(p, &end);
      if (end == p) parse_fail("bad parameter value");
      p = end;
    }
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p != '\0') parse_fail("unexpected trailing values");
  };

  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    if (!std::getline(in, line) || line != "layer " + std::to_string(l))
      parse_fail("expected 'layer " + std::to_string(l) + "'");
    auto& p = m.layers[l];
    for (Eigen::Index i = 0; i < p.weight.rows(); ++i)
      read_row(p.weight.cols(), p.weight.data() + i * p.weight.cols());
    read_row(p.bias.size(), p.bias.data());
  }
  return m;
}

}  // namespace dsan
