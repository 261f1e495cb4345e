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

// Command-line driver. Talks to the toolkit only through the C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsan/dsan.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct DatasetDeleter {
  void operator()(dsan_dataset* p) const { dsan_dataset_free(p); }
};
struct ModelDeleter {
  void operator()(dsan_model* p) const { dsan_model_free(p); }
};
struct StringDeleter {
  void operator()(char* p) const { dsan_string_free(p); }
};
using DatasetPtr = std::unique_ptr<dsan_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<dsan_model, ModelDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

// Carries a library status up to main().
struct Failure {
  dsan_status status;
  std::string message;
};

int exit_code_for(dsan_status s) {
  switch (s) {
    case DSAN_OK: return kExitOk;
    case DSAN_ERR_INVALID_ARGUMENT:
    case DSAN_ERR_CONFIG:
    case DSAN_ERR_VALIDATION:
    case DSAN_ERR_PARSE:
    case DSAN_ERR_IO: return kExitUsage;
    default: return kExitRuntime;
  }
}

void check(dsan_status s) {
  if (s != DSAN_OK) throw Failure{s, dsan_last_error()};
}

DatasetPtr load(const std::string& path) {
  dsan_dataset* ds = nullptr;
  check(dsan_dataset_load_csv(path.c_str(), -1, &ds));
  return DatasetPtr(ds);
}

ModelPtr load_model(const std::string& path) {
  if (path.empty()) return nullptr;
  dsan_model* m = nullptr;
  check(dsan_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

void save(const dsan_dataset* ds, const std::string& path) {
  check(dsan_dataset_save_csv(ds, path.c_str()));
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw Failure{DSAN_ERR_CONFIG, "bad number '" + item + "' in list '" + text + "'"};
    out.push_back(v);
  }
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Failure{DSAN_ERR_IO, "cannot write '" + out_path + "'"};
  out << text << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{DSAN_ERR_CONFIG, "cannot read config '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct GenerateArgs {
  std::string kind;
  std::size_t n = 400;
  double noise = -1.0;  // negative: per-kind default
  double rotation = 30.0;
  std::size_t classes = 3;
  std::size_t dim = 2;
  std::string shift = "3";
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string source_out;
  std::string target_out;
};

void cmd_generate(const GenerateArgs& a) {
  namespace fs = std::filesystem;
  const std::string source_path =
      a.source_out.empty() ? (fs::path(a.out_dir) / "source.csv").string() : a.source_out;
  const std::string target_path =
      a.target_out.empty() ? (fs::path(a.out_dir) / "target.csv").string() : a.target_out;

  dsan_dataset* s = nullptr;
  dsan_dataset* t = nullptr;
  if (a.kind == "two_moons") {
    const double noise = a.noise < 0.0 ? 0.1 : a.noise;
    check(dsan_dataset_two_moons(a.n, noise, 0.0, a.seed, &s));
    DatasetPtr sp(s);
    check(dsan_dataset_two_moons(a.n, noise, a.rotation, a.seed + 1, &t));
    DatasetPtr tp(t);
    save(sp.get(), source_path);
    save(tp.get(), target_path);
  } else {
    const double noise = a.noise < 0.0 ? 1.0 : a.noise;
    std::vector<double> shift = parse_list(a.shift);
    if (shift.size() == 1) shift.assign(a.dim, shift[0]);
    if (shift.size() != a.dim)
      throw Failure{DSAN_ERR_CONFIG, "--shift needs 1 or --dim values"};
    check(dsan_dataset_blobs(a.n, a.classes, a.dim, nullptr, noise, a.seed, a.seed + 1, &s));
    DatasetPtr sp(s);
    check(dsan_dataset_blobs(a.n, a.classes, a.dim, shift.data(), noise, a.seed, a.seed + 2, &t));
    DatasetPtr tp(t);
    save(sp.get(), source_path);
    save(tp.get(), target_path);
  }
  std::cerr << "wrote " << source_path << " and " << target_path << '\n';
}

void cmd_train(const std::string& config_path) {
  const std::string text = read_file(config_path);
  const std::string base = std::filesystem::path(config_path).parent_path().string();
  char* summary = nullptr;
  check(dsan_experiment_run(text.c_str(), base.empty() ? nullptr : base.c_str(), &summary));
  StringPtr owned(summary);
  std::cout << summary << '\n';
}

struct ReportArgs {
  std::string source;
  std::string target;
  std::string model;
  double bandwidth = 0.0;
  std::string multipliers;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_discrepancy(const ReportArgs& a) {
  DatasetPtr s = load(a.source);
  DatasetPtr t = load(a.target);
  ModelPtr m = load_model(a.model);
  std::vector<double> mult;
  if (!a.multipliers.empty()) mult = parse_list(a.multipliers);
  const dsan_kernel_spec spec{a.bandwidth, mult.empty() ? nullptr : mult.data(), mult.size()};
  char* report = nullptr;
  check(dsan_discrepancy_report(s.get(), t.get(), m.get(), &spec, &report));
  StringPtr owned(report);
  emit(report, a.out);
}

void cmd_adistance(const ReportArgs& a) {
  DatasetPtr s = load(a.source);
  DatasetPtr t = load(a.target);
  ModelPtr m = load_model(a.model);
  char* report = nullptr;
  check(dsan_adistance_report(s.get(), t.get(), m.get(), a.seed, &report));
  StringPtr owned(report);
  emit(report, a.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subdomain adaptation toolkit: LMMD training and discrepancy diagnostics"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a source/target CSV pair");
  generate->add_option("kind", gen.kind, "Dataset family")
      ->required()
      ->check(CLI::IsMember({"two_moons", "blobs"}));
  generate->add_option("--n", gen.n, "Rows per domain");
  generate->add_option("--noise", gen.noise, "Noise std (default 0.1 moons, 1.0 blobs)");
  generate->add_option("--rotation", gen.rotation, "Target rotation in degrees (two_moons)");
  generate->add_option("--classes", gen.classes, "Class count (blobs)");
  generate->add_option("--dim", gen.dim, "Feature dimension (blobs)");
  generate->add_option("--shift", gen.shift, "Target center shift, scalar or comma list (blobs)");
  generate->add_option("--seed", gen.seed, "Random seed");
  generate->add_option("--out-dir", gen.out_dir, "Directory for source.csv and target.csv");
  generate->add_option("--source-out", gen.source_out, "Explicit source CSV path");
  generate->add_option("--target-out", gen.target_out, "Explicit target CSV path");

  std::string config_path;
  auto* train = app.add_subcommand("train", "Train from an experiment config (JSON)");
  train->add_option("config", config_path, "Config file")->required();

  ReportArgs disc;
  auto* discrepancy = app.add_subcommand("discrepancy", "MMD and LMMD between two CSV files");
  discrepancy->add_option("source", disc.source, "Source CSV")->required();
  discrepancy->add_option("target", disc.target, "Target CSV")->required();
  discrepancy->add_option("--model", disc.model, "Model file; measure on bottleneck features");
  discrepancy->add_option("--bandwidth", disc.bandwidth, "Fixed base bandwidth (default: median)");
  discrepancy->add_option("--multipliers", disc.multipliers, "Comma list of kernel multipliers");
  discrepancy->add_option("--out", disc.out, "Write the report here instead of stdout");

  ReportArgs adist;
  auto* adistance = app.add_subcommand("adistance", "Proxy A-distance and A_L-distance report");
  adistance->add_option("source", adist.source, "Source CSV")->required();
  adistance->add_option("target", adist.target, "Target CSV")->required();
  adistance->add_option("--model", adist.model, "Model file; measure on bottleneck features");
  adistance->add_option("--seed", adist.seed, "Split seed");
  adistance->add_option("--out", adist.out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*generate) cmd_generate(gen);
    if (*train) cmd_train(config_path);
    if (*discrepancy) cmd_discrepancy(disc);
    if (*adistance) cmd_adistance(adist);
  } catch (const Failure& f) {
    std::cerr << "error (" << dsan_status_string(f.status) << "): " << f.message << '\n';
    return exit_code_for(f.status);
  }
  return kExitOk;
}
