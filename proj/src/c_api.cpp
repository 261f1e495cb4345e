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

#include "dsan/dsan.h"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "dsan/data.hpp"
#include "dsan/discrepancy.hpp"
#include "dsan/error.hpp"
#include "dsan/experiment.hpp"
#include "dsan/network.hpp"
#include "dsan/trainer.hpp"

struct dsan_dataset {
  dsan::Dataset value;
};

struct dsan_model {
  dsan::MlpModel value;
};

namespace {

thread_local std::string g_last_error;

dsan_status to_status(dsan::ErrorCode code) {
  switch (code) {
    case dsan::ErrorCode::kConfig: return DSAN_ERR_CONFIG;
    case dsan::ErrorCode::kValidation: return DSAN_ERR_VALIDATION;
    case dsan::ErrorCode::kParse: return DSAN_ERR_PARSE;
    case dsan::ErrorCode::kIo: return DSAN_ERR_IO;
    case dsan::ErrorCode::kDegenerateBatch: return DSAN_ERR_DEGENERATE;
    case dsan::ErrorCode::kEmptyOverlap: return DSAN_ERR_EMPTY_OVERLAP;
    case dsan::ErrorCode::kRuntime: return DSAN_ERR_RUNTIME;
    case dsan::ErrorCode::kInternal: return DSAN_ERR_INTERNAL;
  }
  return DSAN_ERR_INTERNAL;
}

template <typename Fn>
dsan_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return DSAN_OK;
  } catch (const dsan::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return DSAN_ERR_CONFIG;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return DSAN_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DSAN_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DSAN_ERR_INTERNAL;
  }
}

void check_arg(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

dsan::Matrix matrix_from(const double* data, size_t rows, size_t cols) {
  dsan::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (rows * cols > 0) std::memcpy(m.data(), data, rows * cols * sizeof(double));
  return m;
}

void copy_out(const dsan::Matrix& m, double* out) {
  if (out != nullptr && m.size() > 0)
    std::memcpy(out, m.data(), static_cast<size_t>(m.size()) * sizeof(double));
}

dsan::KernelSpec spec_from(const dsan_kernel_spec* spec) {
  dsan::KernelSpec k = dsan::KernelSpec::median();
  if (spec == nullptr) return k;
  if (spec->base_bandwidth > 0.0) k.base_bandwidth = spec->base_bandwidth;
  if (spec->n_multipliers > 0) {
    check_arg(spec->multipliers != nullptr, "kernel multipliers pointer is null");
    k.multipliers.assign(spec->multipliers, spec->multipliers + spec->n_multipliers);
  }
  k.validate();
  return k;
}

}  // namespace

extern "C" {

const char* dsan_version(void) { return "1.0.0"; }

const char* dsan_last_error(void) { return g_last_error.c_str(); }

const char* dsan_status_string(dsan_status status) {
  switch (status) {
    case DSAN_OK: return "ok";
    case DSAN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DSAN_ERR_CONFIG: return "configuration error";
    case DSAN_ERR_VALIDATION: return "validation error";
    case DSAN_ERR_PARSE: return "parse error";
    case DSAN_ERR_IO: return "i/o error";
    case DSAN_ERR_DEGENERATE: return "degenerate batch";
    case DSAN_ERR_EMPTY_OVERLAP: return "empty class overlap";
    case DSAN_ERR_RUNTIME: return "runtime error";
    case DSAN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void dsan_string_free(char* s) { std::free(s); }

dsan_status dsan_dataset_two_moons(size_t n, double noise_sd, double rotation_deg, uint64_t seed,
                                   dsan_dataset** out) {
  if (out == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new dsan_dataset{dsan::gen_two_moons(n, noise_sd, rotation_deg, seed)};
  });
}

dsan_status dsan_dataset_blobs(size_t n, size_t classes, size_t dim, const double* shift,
                               double noise_sd, uint64_t center_seed, uint64_t sample_seed,
                               dsan_dataset** out) {
  if (out == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    dsan::BlobsParams p;
    p.n = n;
    p.classes = classes;
    p.dim = dim;
    if (shift != nullptr) p.centers_shift.assign(shift, shift + dim);
    p.noise_sd = noise_sd;
    p.center_seed = center_seed;
    p.sample_seed = sample_seed;
    *out = new dsan_dataset{dsan::gen_blobs(p)};
  });
}

dsan_status dsan_dataset_load_csv(const char* path, int64_t class_count, dsan_dataset** out) {
  if (path == nullptr || out == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    std::optional<std::size_t> c;
    if (class_count >= 0) c = static_cast<std::size_t>(class_count);
    *out = new dsan_dataset{dsan::load_csv(path, c)};
  });
}

dsan_status dsan_dataset_save_csv(const dsan_dataset* ds, const char* path) {
  if (ds == nullptr || path == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] { dsan::save_csv(ds->value, path); });
}

size_t dsan_dataset_rows(const dsan_dataset* ds) { return ds ? ds->value.size() : 0; }
size_t dsan_dataset_cols(const dsan_dataset* ds) { return ds ? ds->value.dim() : 0; }
size_t dsan_dataset_classes(const dsan_dataset* ds) { return ds ? ds->value.class_count : 0; }

dsan_status dsan_dataset_copy_features(const dsan_dataset* ds, double* out, size_t len) {
  if (ds == nullptr || out == nullptr ||
      len != static_cast<size_t>(ds->value.features.size()))
    return DSAN_ERR_INVALID_ARGUMENT;
  copy_out(ds->value.features, out);
  return DSAN_OK;
}

dsan_status dsan_dataset_copy_labels(const dsan_dataset* ds, int32_t* out, size_t len) {
  if (ds == nullptr || out == nullptr || len != ds->value.size()) return DSAN_ERR_INVALID_ARGUMENT;
  for (size_t i = 0; i < len; ++i) out[i] = ds->value.labels[i];
  return DSAN_OK;
}

void dsan_dataset_free(dsan_dataset* ds) { delete ds; }

dsan_status dsan_model_init(const size_t* layer_dims, size_t n_dims, uint64_t seed,
                            dsan_model** out) {
  if (layer_dims == nullptr || out == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *out = new dsan_model{
        dsan::MlpModel::init(std::vector<std::size_t>(layer_dims, layer_dims + n_dims), seed)};
  });
}

dsan_status dsan_model_load(const char* path, dsan_model** out) {
  if (path == nullptr || out == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] { *out = new dsan_model{dsan::load_model(path)}; });
}

dsan_status dsan_model_save(const dsan_model* model, const char* path) {
  if (model == nullptr || path == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] { dsan::save_model(model->value, path); });
}

size_t dsan_model_parameter_count(const dsan_model* model) {
  return model ? model->value.parameter_count() : 0;
}
size_t dsan_model_bottleneck_dim(const dsan_model* model) {
  return model ? model->value.bottleneck_dim() : 0;
}
size_t dsan_model_classes(const dsan_model* model) { return model ? model->value.classes() : 0; }

dsan_status dsan_model_forward(const dsan_model* model, const double* x, size_t rows,
                               double* probs, double* bottleneck) {
  if (model == nullptr || (x == nullptr && rows > 0)) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const dsan::ForwardTrace t =
        dsan::forward(model->value, matrix_from(x, rows, model->value.input_dim()));
    copy_out(t.probs, probs);
    copy_out(t.bottleneck, bottleneck);
  });
}

void dsan_model_free(dsan_model* model) { delete model; }

dsan_status dsan_mmd(const double* zs, size_t ns, const double* zt, size_t nt, size_t d,
                     const dsan_kernel_spec* spec, double* value) {
  if (zs == nullptr || zt == nullptr || value == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    *value = dsan::mmd(matrix_from(zs, ns, d), matrix_from(zt, nt, d), spec_from(spec)).value;
  });
}

dsan_status dsan_lmmd(const double* zs, size_t ns, const double* zt, size_t nt, size_t d,
                      const double* ys, const double* yt, size_t classes,
                      const dsan_kernel_spec* spec, double* value, double* grad_s,
                      double* grad_t, size_t* contributing) {
  if (zs == nullptr || zt == nullptr || ys == nullptr || yt == nullptr || value == nullptr)
    return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const bool grads = grad_s != nullptr || grad_t != nullptr;
    const dsan::DiscrepancyResult r = dsan::lmmd(
        matrix_from(zs, ns, d), matrix_from(zt, nt, d),
        dsan::class_weights(matrix_from(ys, ns, classes)),
        dsan::class_weights(matrix_from(yt, nt, classes)), spec_from(spec), grads);
    *value = r.value;
    if (grads) {
      copy_out(*r.grad_source, grad_s);
      copy_out(*r.grad_target, grad_t);
    }
    if (contributing != nullptr) *contributing = r.contributing_classes;
  });
}

double dsan_lr_schedule(double theta, double eta0, double alpha, double beta) {
  dsan::TrainConfig cfg;
  cfg.eta0 = eta0;
  cfg.alpha = alpha;
  cfg.beta = beta;
  return dsan::lr_schedule(theta, cfg);
}

double dsan_lambda_schedule(double theta, double gamma, double lambda_max) {
  dsan::TrainConfig cfg;
  cfg.gamma = gamma;
  cfg.lambda_max = lambda_max;
  return dsan::lambda_schedule(theta, cfg);
}

dsan_status dsan_experiment_run(const char* config_json, const char* base_dir,
                                char** summary_json) {
  if (config_json == nullptr || summary_json == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json);
    } catch (const nlohmann::json::parse_error& e) {
      dsan::fail(dsan::ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
    }
    const dsan::ExperimentConfig cfg = dsan::parse_config(j);
    const nlohmann::json summary =
        dsan::run_experiment(cfg, base_dir ? std::filesystem::path(base_dir) : std::filesystem::path());
    *summary_json = copy_string(summary.dump(2));
  });
}

dsan_status dsan_config_resolve(const char* config_json, char** resolved_json) {
  if (config_json == nullptr || resolved_json == nullptr) return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto cfg = dsan::parse_config(nlohmann::json::parse(config_json));
    *resolved_json = copy_string(dsan::config_to_json(cfg).dump(2));
  });
}

dsan_status dsan_discrepancy_report(const dsan_dataset* source, const dsan_dataset* target,
                                    const dsan_model* model, const dsan_kernel_spec* spec,
                                    char** report_json) {
  if (source == nullptr || target == nullptr || report_json == nullptr)
    return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto r = dsan::discrepancy_report(source->value, target->value,
                                            model ? &model->value : nullptr, spec_from(spec));
    *report_json = copy_string(r.dump(2));
  });
}

dsan_status dsan_adistance_report(const dsan_dataset* source, const dsan_dataset* target,
                                  const dsan_model* model, uint64_t seed, char** report_json) {
  if (source == nullptr || target == nullptr || report_json == nullptr)
    return DSAN_ERR_INVALID_ARGUMENT;
  return guarded([&] {
    const auto r = dsan::adistance_report(source->value, target->value,
                                          model ? &model->value : nullptr, seed);
    *report_json = copy_string(r.dump(2));
  });
}

}  // extern "C"
