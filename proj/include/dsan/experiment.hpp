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
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "dsan/data.hpp"
#include "dsan/network.hpp"
#include "dsan/trainer.hpp"

namespace dsan {

inline constexpr int kConfigSchemaVersion = 1;

struct EvalOptions {
  bool use_target_labels = true;  // for trace accuracy and the summary only
  std::uint64_t adistance_seed = 0;
  bool record_timing = false;     // adds wall-clock seconds to trace records

  bool operator==(const EvalOptions&) const = default;
};

struct ExperimentConfig {
  std::string source_csv;
  std::string target_csv;
  std::string output_dir;
  std::optional<std::string> trace_path;  // default: <output_dir>/trace.jsonl
  TrainConfig train;
  EvalOptions eval;

  bool operator==(const ExperimentConfig&) const = default;
};

// Strict parse: unknown keys, a wrong schema_version, or ill-typed values
// raise kConfig. Missing optional keys take their defaults.
ExperimentConfig parse_config(const nlohmann::json& j);

// Fully expanded form; parse_config(config_to_json(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const IterationRecord& rec, bool with_timing);

// Trains per the config and writes model.txt, the trace, and summary.json into
// the output directory. Relative paths resolve against `base_dir`. Returns the
// summary document.
nlohmann::json run_experiment(const ExperimentConfig& cfg,
                              const std::filesystem::path& base_dir = {});

// Accuracy, MMD/LMMD and A-distances of `model` on the two datasets. Fields
// that need target labels are null when the target is unlabeled.
nlohmann::json evaluate_model(const MlpModel& model, const Dataset& source, const Dataset& target,
                              const KernelSpec& spec, std::uint64_t adistance_seed);

// MMD and LMMD on raw features, or on bottleneck features when `model` is set.
// LMMD target weights come from target labels, or from the model's soft
// predictions when the target is unlabeled.
nlohmann::json discrepancy_report(const Dataset& source, const Dataset& target,
                                  const MlpModel* model, const KernelSpec& spec);

// Global and local A-distance on raw or bottleneck features.
nlohmann::json adistance_report(const Dataset& source, const Dataset& target,
                                const MlpModel* model, std::uint64_t seed);

}  // namespace dsan
