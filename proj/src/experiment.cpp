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

#include "dsan/experiment.hpp"

#include <fstream>
#include <set>

#include "dsan/discrepancy.hpp"
#include "dsan/error.hpp"
#include "dsan/metrics.hpp"

namespace dsan {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Parsed text yields unsigned values; documents built in code may hold signed ones.
bool is_non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Reads fields from one JSON object and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j.is_object(), ErrorCode::kConfig, where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) { return j_.at(key); }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    require(v.is_number(), ErrorCode::kConfig, where_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    require(is_non_negative_integer(v), ErrorCode::kConfig,
            where_ + "." + key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    require(v.is_boolean(), ErrorCode::kConfig, where_ + "." + key + ": expected true/false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    require(v.is_string(), ErrorCode::kConfig, where_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }

  std::string required_string(const std::string& key) {
    require(has(key), ErrorCode::kConfig, where_ + ": missing required key '" + key + "'");
    return string(key, {});
  }

  void finish() const {
    for (const auto& item : j_.items())
      require(seen_.count(item.key()) > 0, ErrorCode::kConfig,
              where_ + ": unknown key '" + item.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::vector<std::size_t> size_list(const json& v, const std::string& where) {
  require(v.is_array(), ErrorCode::kConfig, where + ": expected an array");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    require(is_non_negative_integer(e), ErrorCode::kConfig,
            where + ": expected non-negative integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  StrictObject o(j, "train");
  c.eta0 = o.number("eta0", c.eta0);
  c.alpha = o.number("alpha", c.alpha);
  c.beta = o.number("beta", c.beta);
  c.gamma = o.number("gamma", c.gamma);
  c.momentum = o.number("momentum", c.momentum);
  c.lambda_max = o.number("lambda_max", c.lambda_max);
  c.batch_size = o.unsigned_int("batch_size", c.batch_size);
  c.total_iters = o.unsigned_int("total_iters", c.total_iters);
  c.seed = o.unsigned_int("seed", c.seed);
  c.mode = train_mode_from_string(o.string("mode", to_string(c.mode)));
  if (o.has("hidden")) c.hidden = size_list(o.at("hidden"), "train.hidden");
  c.bottleneck = o.unsigned_int("bottleneck", c.bottleneck);
  o.finish();
  return c;
}

json train_to_json(const TrainConfig& c) {
  return json{{"eta0", c.eta0},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"gamma", c.gamma},
              {"momentum", c.momentum},
              {"lambda_max", c.lambda_max},
              {"batch_size", c.batch_size},
              {"total_iters", c.total_iters},
              {"seed", c.seed},
              {"mode", to_string(c.mode)},
              {"hidden", c.hidden},
              {"bottleneck", c.bottleneck}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

Dataset load_input(const fs::path& path, const std::string& role) {
  require(fs::exists(path), ErrorCode::kConfig,
          role + " file '" + path.string() + "' does not exist");
  Dataset ds = load_csv(path.string());
  ds.validate();
  return ds;
}

}  // namespace

json kernel_to_json(const KernelSpec& spec) {
  return json{{"bandwidth", spec.base_bandwidth ? json(*spec.base_bandwidth) : json("median")},
              {"multipliers", spec.multipliers}};
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec spec = KernelSpec::median();
  StrictObject o(j, "kernel");
  if (o.has("bandwidth")) {
    const json& b = o.at("bandwidth");
    if (b.is_string()) {
      require(b.get<std::string>() == "median", ErrorCode::kConfig,
              "kernel.bandwidth: expected \"median\" or a positive number");
    } else {
      require(b.is_number(), ErrorCode::kConfig,
              "kernel.bandwidth: expected \"median\" or a positive number");
      spec.base_bandwidth = b.get<double>();
    }
  }
  if (o.has("multipliers")) {
    const json& m = o.at("multipliers");
    require(m.is_array(), ErrorCode::kConfig, "kernel.multipliers: expected an array");
    spec.multipliers.clear();
    for (const auto& e : m) {
      require(e.is_number(), ErrorCode::kConfig, "kernel.multipliers: expected numbers");
      spec.multipliers.push_back(e.get<double>());
    }
  }
  o.finish();
  spec.validate();
  return spec;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  StrictObject o(j, "config");
  require(o.has("schema_version") && o.at("schema_version").is_number_integer() &&
              o.at("schema_version").get<int>() == kConfigSchemaVersion,
          ErrorCode::kConfig,
          "config: schema_version must be " + std::to_string(kConfigSchemaVersion));
  cfg.source_csv = o.required_string("source_csv");
  cfg.target_csv = o.required_string("target_csv");
  cfg.output_dir = o.required_string("output_dir");
  if (o.has("trace_path")) cfg.trace_path = o.string("trace_path", {});
  if (o.has("train")) cfg.train = train_from_json(o.at("train"));
  if (o.has("kernel")) cfg.train.kernel = kernel_from_json(o.at("kernel"));
  if (o.has("eval")) {
    StrictObject e(o.at("eval"), "eval");
    cfg.eval.use_target_labels = e.boolean("use_target_labels", cfg.eval.use_target_labels);
    cfg.eval.adistance_seed = e.unsigned_int("adistance_seed", cfg.eval.adistance_seed);
    cfg.eval.record_timing = e.boolean("record_timing", cfg.eval.record_timing);
    e.finish();
  }
  o.finish();
  cfg.train.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j{{"schema_version", kConfigSchemaVersion},
         {"source_csv", cfg.source_csv},
         {"target_csv", cfg.target_csv},
         {"output_dir", cfg.output_dir},
         {"train", train_to_json(cfg.train)},
         {"kernel", kernel_to_json(cfg.train.kernel)},
         {"eval",
          {{"use_target_labels", cfg.eval.use_target_labels},
           {"adistance_seed", cfg.eval.adistance_seed},
           {"record_timing", cfg.eval.record_timing}}}};
  if (cfg.trace_path) j["trace_path"] = *cfg.trace_path;
  return j;
}

json record_to_json(const IterationRecord& rec, bool with_timing) {
  json j{{"iter", rec.iter},
         {"theta", rec.theta},
         {"eta", rec.eta},
         {"lambda", rec.lambda},
         {"ce_loss", rec.ce_loss},
         {"lmmd_loss", rec.lmmd_loss},
         {"contributing_classes", rec.contributing_classes},
         {"lmmd_skipped", rec.lmmd_skipped},
         {"bandwidth", rec.bandwidth},
         {"source_acc", rec.source_acc},
         {"target_acc", optional_number(rec.target_acc)}};
  if (with_timing) j["elapsed_s"] = rec.elapsed_s;
  return j;
}

json evaluate_model(const MlpModel& model, const Dataset& source, const Dataset& target,
                    const KernelSpec& spec, std::uint64_t adistance_seed) {
  const ForwardTrace ts = forward(model, source.features);
  const ForwardTrace tt = forward(model, target.features);
  const bool target_labeled = target.size() > 0 && target.fully_labeled();

  json j;
  j["source_acc"] = accuracy(ts.probs, source.labels);
  j["target_acc"] = target_labeled ? json(accuracy(tt.probs, target.labels)) : json(nullptr);
  j["mmd"] = mmd(ts.bottleneck, tt.bottleneck, spec).value;
  j["lmmd"] = nullptr;
  j["a_distance"] = nullptr;
  j["a_l_distance"] = nullptr;
  j["per_class_a_distance"] = nullptr;
  if (target_labeled) {
    const MeasuredDiscrepancy m = measure_feature_discrepancies(
        ts.bottleneck, source.labels, tt.bottleneck, target.labels, model.classes(), spec);
    j["mmd"] = m.mmd;
    j["lmmd"] = m.lmmd;
    const ADistanceReport a = local_a_distance(ts.bottleneck, source.labels, tt.bottleneck,
                                               target.labels, model.classes(), adistance_seed);
    j["a_distance"] = a.global_d;
    j["a_l_distance"] = a.local_d;
    j["per_class_a_distance"] = a.per_class_d;
  }
  return j;
}

json run_experiment(const ExperimentConfig& cfg, const fs::path& base_dir) {
  cfg.train.validate();
  const Dataset source = load_input(resolve(base_dir, cfg.source_csv), "source");
  const Dataset target = load_input(resolve(base_dir, cfg.target_csv), "target");
  require(source.size() >= 1 && target.size() >= 1, ErrorCode::kConfig,
          "source and target datasets must be non-empty");
  require(source.dim() == target.dim(), ErrorCode::kConfig,
          "source and target feature dims differ");
  require(source.fully_labeled(), ErrorCode::kConfig, "every source row must be labeled");

  const fs::path out_dir = resolve(base_dir, cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(fs::is_directory(out_dir), ErrorCode::kIo,
          "cannot write output directory '" + out_dir.string() + "'");
  const fs::path trace_path =
      cfg.trace_path ? resolve(base_dir, *cfg.trace_path) : out_dir / "trace.jsonl";
  const fs::path model_path = out_dir / "model.txt";

  std::ofstream trace_out(trace_path, std::ios::binary);
  if (!trace_out) fail(ErrorCode::kIo, "cannot write '" + trace_path.string() + "'");

  TrainResult result;
  try {
    result = train(cfg.train, source, target, cfg.eval.use_target_labels,
                   [&](const IterationRecord& rec) {
                     trace_out << record_to_json(rec, cfg.eval.record_timing).dump() << '\n';
                   });
  } catch (const Error& e) {
    fail(ErrorCode::kRuntime, std::string("training failed: ") + e.what());
  }
  trace_out.close();
  if (!trace_out) fail(ErrorCode::kIo, "failed writing '" + trace_path.string() + "'");
  save_model(result.model, model_path.string());

  // Target labels never reach training, but the summary reports them when
  // evaluation is enabled.
  Dataset eval_target = target;
  if (!cfg.eval.use_target_labels)
    std::fill(eval_target.labels.begin(), eval_target.labels.end(), kUnlabeled);

  json summary;
  summary["schema_version"] = kConfigSchemaVersion;
  summary["config"] = config_to_json(cfg);
  summary["source_rows"] = source.size();
  summary["target_rows"] = target.size();
  summary["classes"] = result.model.classes();
  summary["layer_dims"] = result.model.layer_dims;
  summary["parameter_count"] = result.model.parameter_count();
  summary["iterations"] = result.trace.size();
  summary["skipped_lmmd_steps"] = result.skipped_lmmd_steps;
  summary["warnings"] = result.warnings;
  summary["before"] = evaluate_model(result.initial_model, source, eval_target, cfg.train.kernel,
                                     cfg.eval.adistance_seed);
  summary["after"] = evaluate_model(result.model, source, eval_target, cfg.train.kernel,
                                    cfg.eval.adistance_seed);
  summary["outputs"] = {{"model", model_path.string()}, {"trace", trace_path.string()}};
  write_json_file(out_dir / "summary.json", summary);
  return summary;
}

json discrepancy_report(const Dataset& source, const Dataset& target, const MlpModel* model,
                        const KernelSpec& spec) {
  source.validate();
  target.validate();
  require(source.size() >= 1 && target.size() >= 1, ErrorCode::kValidation,
          "discrepancy: datasets must be non-empty");
  require(source.dim() == target.dim(), ErrorCode::kValidation,
          "discrepancy: feature dims differ");
  require(source.fully_labeled(), ErrorCode::kValidation,
          "discrepancy: LMMD needs labels on every source row");

  const bool target_labeled = target.fully_labeled();
  require(target_labeled || model != nullptr, ErrorCode::kValidation,
          "discrepancy: target is unlabeled; LMMD needs target labels or a model to produce "
          "soft labels");

  Matrix zs = source.features;
  Matrix zt = target.features;
  Matrix target_probs;
  std::size_t classes = std::max(source.class_count, target.class_count);
  if (model != nullptr) {
    require(source.dim() == model->input_dim(), ErrorCode::kValidation,
            "discrepancy: model input dim does not match the data");
    classes = model->classes();
    const ForwardTrace ts = forward(*model, source.features);
    const ForwardTrace tt = forward(*model, target.features);
    zs = ts.bottleneck;
    zt = tt.bottleneck;
    target_probs = tt.probs;
  }
  require(classes >= 1, ErrorCode::kValidation, "discrepancy: no classes");

  const KernelSpec frozen = spec.frozen_at(resolve_bandwidth(spec, zs, zt));
  const ClassWeights ws = class_weights(one_hot(source.labels, classes));
  const ClassWeights wt =
      class_weights(target_labeled ? one_hot(target.labels, classes) : target_probs);
  const DiscrepancyResult l = lmmd(zs, zt, ws, wt, frozen);

  return json{{"features", model ? "bottleneck" : "raw"},
              {"target_weights", target_labeled ? "labels" : "model"},
              {"source_rows", source.size()},
              {"target_rows", target.size()},
              {"classes", classes},
              {"kernel", kernel_to_json(spec)},
              {"bandwidth", *frozen.base_bandwidth},
              {"mmd", mmd(zs, zt, frozen).value},
              {"lmmd", l.value},
              {"lmmd_per_class", l.per_class},
              {"contributing_classes", l.contributing_classes}};
}

json adistance_report(const Dataset& source, const Dataset& target, const MlpModel* model,
                      std::uint64_t seed) {
  source.validate();
  target.validate();
  require(source.dim() == target.dim(), ErrorCode::kValidation,
          "A-distance: feature dims differ");
  Matrix fs = source.features;
  Matrix ft = target.features;
  std::size_t classes = std::max(source.class_count, target.class_count);
  if (model != nullptr) {
    require(source.dim() == model->input_dim(), ErrorCode::kValidation,
            "A-distance: model input dim does not match the data");
    fs = forward(*model, source.features).bottleneck;
    ft = forward(*model, target.features).bottleneck;
    classes = model->classes();
  }

  json j{{"features", model ? "bottleneck" : "raw"},
         {"seed", seed},
         {"source_rows", source.size()},
         {"target_rows", target.size()}};
  if (source.fully_labeled() && target.fully_labeled() && classes >= 1) {
    const ADistanceReport r =
        local_a_distance(fs, source.labels, ft, target.labels, classes, seed);
    j["global_d"] = r.global_d;
    j["global_error"] = r.global_error;
    j["per_class_d"] = r.per_class_d;
    j["per_class_error"] = r.per_class_error;
    j["local_d"] = r.local_d;
    j["class_priors"] = r.class_priors;
    j["excluded_classes"] = r.excluded_classes;
  } else {
    const double eps = std::clamp(domain_classifier_error(fs, ft, seed), 0.0, 0.5);
    j["global_d"] = a_distance_from_error(eps);
    j["global_error"] = eps;
    j["per_class_d"] = nullptr;
    j["per_class_error"] = nullptr;
    j["local_d"] = nullptr;
    j["class_priors"] = nullptr;
    j["excluded_classes"] = nullptr;
  }
  return j;
}

}  // namespace dsan
