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

/* C interface to the dsan toolkit. All objects are opaque handles owned by
 * the caller and released with the matching *_free function. Functions
 * return DSAN_OK or an error code; the message for the most recent failure on
 * the calling thread is available from dsan_last_error(). Matrices are
 * row-major double arrays. */
#ifndef DSAN_DSAN_H_
#define DSAN_DSAN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DSAN_BUILDING_LIBRARY)
#    define DSAN_API __declspec(dllexport)
#  else
#    define DSAN_API __declspec(dllimport)
#  endif
#else
#  define DSAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dsan_status {
  DSAN_OK = 0,
  DSAN_ERR_INVALID_ARGUMENT = 1, /* null pointer or bad size passed to the API */
  DSAN_ERR_CONFIG = 2,
  DSAN_ERR_VALIDATION = 3,
  DSAN_ERR_PARSE = 4,
  DSAN_ERR_IO = 5,
  DSAN_ERR_DEGENERATE = 6,
  DSAN_ERR_EMPTY_OVERLAP = 7,
  DSAN_ERR_RUNTIME = 8,
  DSAN_ERR_INTERNAL = 9
} dsan_status;

typedef struct dsan_dataset dsan_dataset;
typedef struct dsan_model dsan_model;

/* Gaussian kernel family. base_bandwidth <= 0 selects the median heuristic;
 * n_multipliers == 0 selects the default family {1/4, 1/2, 1, 2, 4}. */
typedef struct dsan_kernel_spec {
  double base_bandwidth;
  const double* multipliers;
  size_t n_multipliers;
} dsan_kernel_spec;

DSAN_API const char* dsan_version(void);
DSAN_API const char* dsan_last_error(void);
DSAN_API const char* dsan_status_string(dsan_status status);
/* Frees strings returned through char** out-parameters. */
DSAN_API void dsan_string_free(char* s);

/* Datasets */
DSAN_API dsan_status dsan_dataset_two_moons(size_t n, double noise_sd, double rotation_deg,
                                            uint64_t seed, dsan_dataset** out);
/* shift may be NULL (no shift) or point to `dim` values. */
DSAN_API dsan_status dsan_dataset_blobs(size_t n, size_t classes, size_t dim, const double* shift,
                                        double noise_sd, uint64_t center_seed,
                                        uint64_t sample_seed, dsan_dataset** out);
/* class_count < 0 infers the class count from the labels. */
DSAN_API dsan_status dsan_dataset_load_csv(const char* path, int64_t class_count,
                                           dsan_dataset** out);
DSAN_API dsan_status dsan_dataset_save_csv(const dsan_dataset* ds, const char* path);
DSAN_API size_t dsan_dataset_rows(const dsan_dataset* ds);
DSAN_API size_t dsan_dataset_cols(const dsan_dataset* ds);
DSAN_API size_t dsan_dataset_classes(const dsan_dataset* ds);
/* Copies rows*cols features / rows labels (-1 = unlabeled) into caller buffers. */
DSAN_API dsan_status dsan_dataset_copy_features(const dsan_dataset* ds, double* out, size_t len);
DSAN_API dsan_status dsan_dataset_copy_labels(const dsan_dataset* ds, int32_t* out, size_t len);
DSAN_API void dsan_dataset_free(dsan_dataset* ds);

/* Models */
DSAN_API dsan_status dsan_model_init(const size_t* layer_dims, size_t n_dims, uint64_t seed,
                                     dsan_model** out);
DSAN_API dsan_status dsan_model_load(const char* path, dsan_model** out);
DSAN_API dsan_status dsan_model_save(const dsan_model* model, const char* path);
DSAN_API size_t dsan_model_parameter_count(const dsan_model* model);
DSAN_API size_t dsan_model_bottleneck_dim(const dsan_model* model);
DSAN_API size_t dsan_model_classes(const dsan_model* model);
/* x is rows x input_dim; probs receives rows x classes, bottleneck receives
 * rows x bottleneck_dim. Either output may be NULL. */
DSAN_API dsan_status dsan_model_forward(const dsan_model* model, const double* x, size_t rows,
                                        double* probs, double* bottleneck);
DSAN_API void dsan_model_free(dsan_model* model);

/* Discrepancies on raw activation matrices (ns x d and nt x d). */
DSAN_API dsan_status dsan_mmd(const double* zs, size_t ns, const double* zt, size_t nt, size_t d,
                              const dsan_kernel_spec* spec, double* value);
/* ys/yt are probability rows (ns x C, nt x C). grad_s / grad_t may be NULL;
 * contributing may be NULL. */
DSAN_API dsan_status dsan_lmmd(const double* zs, size_t ns, const double* zt, size_t nt, size_t d,
                               const double* ys, const double* yt, size_t classes,
                               const dsan_kernel_spec* spec, double* value, double* grad_s,
                               double* grad_t, size_t* contributing);

/* Schedules with the given hyperparameters. */
DSAN_API double dsan_lr_schedule(double theta, double eta0, double alpha, double beta);
DSAN_API double dsan_lambda_schedule(double theta, double gamma, double lambda_max);

/* Experiment driver. config_json follows the experiment config schema;
 * relative paths resolve against base_dir (NULL = working directory). On
 * success *summary_json receives the summary document. */
DSAN_API dsan_status dsan_experiment_run(const char* config_json, const char* base_dir,
                                         char** summary_json);
/* Validates a config and returns it with every default expanded. */
DSAN_API dsan_status dsan_config_resolve(const char* config_json, char** resolved_json);
/* model may be NULL for raw features. */
DSAN_API dsan_status dsan_discrepancy_report(const dsan_dataset* source,
                                             const dsan_dataset* target, const dsan_model* model,
                                             const dsan_kernel_spec* spec, char** report_json);
DSAN_API dsan_status dsan_adistance_report(const dsan_dataset* source, const dsan_dataset* target,
                                           const dsan_model* model, uint64_t seed,
                                           char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* DSAN_DSAN_H_ */
