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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "dsan/data.hpp"
#include "dsan/discrepancy.hpp"
#include "dsan/experiment.hpp"
#include "dsan/metrics.hpp"

using namespace dsan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

class Sandbox {
 public:
  Sandbox() : dir_(fs::temp_directory_path() / ("dsan_test_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Sandbox() { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Run run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + DSAN_CLI_PATH + "\" " + args + " >\"" +
                            out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string q(const std::string& name) const { return "\"" + path(name).string() + "\""; }

 private:
  fs::path dir_;
};

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("generate writes a deterministic pair") {
  Sandbox box;
  fs::create_directories(box.path("a"));
  fs::create_directories(box.path("b"));
  Run r = box.run("generate two_moons --n 400 --rotation 30 --seed 1 --out-dir " + box.q("a"));
  REQUIRE(r.code == 0);
  r = box.run("generate two_moons --n 400 --rotation 30 --seed 1 --out-dir " + box.q("b"));
  REQUIRE(r.code == 0);
  for (const char* f : {"source.csv", "target.csv"}) {
    const std::string a = Sandbox::slurp(box.path("a") / f);
    CHECK(line_count(a) == 401);
    CHECK(a == Sandbox::slurp(box.path("b") / f));
    CHECK(load_csv((box.path("a") / f).string()).size() == 400);
  }
  CHECK(load_csv((box.path("a") / "source.csv").string()).features ==
        gen_two_moons(400, 0.1, 0.0, 1).features);
  CHECK(load_csv((box.path("a") / "target.csv").string()).features ==
        gen_two_moons(400, 0.1, 30.0, 2).features);

  r = box.run("generate blobs --n 60 --classes 3 --dim 2 --shift 1,2 --seed 4 --out-dir " + box.q("a"));
  REQUIRE(r.code == 0);
  CHECK(load_csv((box.path("a") / "target.csv").string()).class_count == 3);
}

TEST_CASE("generate reports unwritable output") {
  Sandbox box;
  const Run r = box.run("generate two_moons --out-dir " + box.q("missing/dir"));
  CHECK(r.code == 2);
  CHECK(r.err.find("cannot write") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  Sandbox box;
  CHECK(box.run("").code == 2);
  CHECK(box.run("generate spirals").code == 2);
  CHECK(box.run("train").code == 2);
  CHECK(box.run("generate two_moons --n abc").code == 2);
}

TEST_CASE("train is deterministic and maps errors to exit codes") {
  Sandbox box;
  REQUIRE(box.run("generate two_moons --n 80 --seed 2 --out-dir " + box.q("")).code == 0);
  const json cfg{{"schema_version", 1},
                 {"source_csv", "source.csv"},
                 {"target_csv", "target.csv"},
                 {"output_dir", "out"},
                 {"train", {{"total_iters", 30}, {"hidden", {8}}, {"bottleneck", 4}, {"batch_size", 16}}}};
  std::ofstream(box.path("cfg.json")) << cfg.dump(2);
  const Run first = box.run("train " + box.q("cfg.json"));
  REQUIRE(first.code == 0);
  const std::string summary = Sandbox::slurp(box.path("out/summary.json"));
  const std::string trace = Sandbox::slurp(box.path("out/trace.jsonl"));
  const Run second = box.run("train " + box.q("cfg.json"));
  REQUIRE(second.code == 0);
  CHECK(first.out == second.out);
  CHECK(summary == Sandbox::slurp(box.path("out/summary.json")));
  CHECK(trace == Sandbox::slurp(box.path("out/trace.jsonl")));
  CHECK(json::parse(first.out)["iterations"] == 30);

  json bad = cfg;
  bad["train"]["momentm"] = 0.9;
  std::ofstream(box.path("bad.json")) << bad.dump();
  Run r = box.run("train " + box.q("bad.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find("momentm") != std::string::npos);

  std::ofstream(box.path("broken.json")) << "{\"schema_version\": 1,";
  CHECK(box.run("train " + box.q("broken.json")).code == 2);
  CHECK(box.run("train " + box.q("absent.json")).code == 2);

  // A target with a different feature count fails validation up front.
  save_csv(gen_blobs({.n = 20, .classes = 2, .dim = 3, .center_seed = 1, .sample_seed = 1}),
           box.path("wide.csv").string());
  json wide = cfg;
  wide["target_csv"] = "wide.csv";
  std::ofstream(box.path("wide.json")) << wide.dump();
  CHECK(box.run("train " + box.q("wide.json")).code == 2);
}

TEST_CASE("training failures exit with 1") {
  Sandbox box;
  // Finite but enormous inputs with a huge step size make training diverge.
  Dataset s = gen_two_moons(20, 0.1, 0.0, 1);
  s.features *= 1e305;
  save_csv(s, box.path("s.csv").string());
  save_csv(gen_two_moons(20, 0.1, 0.0, 2), box.path("t.csv").string());
  const json cfg{{"schema_version", 1},
                 {"source_csv", "s.csv"},
                 {"target_csv", "t.csv"},
                 {"output_dir", "out"},
                 {"train", {{"total_iters", 3}, {"eta0", 1e300}}}};
  std::ofstream(box.path("cfg.json")) << cfg.dump();
  const Run r = box.run("train " + box.q("cfg.json"));
  CHECK(r.code == 1);
  CHECK(r.err.find("training failed") != std::string::npos);
}

TEST_CASE("discrepancy report") {
  Sandbox box;
  REQUIRE(box.run("generate two_moons --n 100 --seed 3 --out-dir " + box.q("")).code == 0);
  Run r = box.run("discrepancy " + box.q("source.csv") + " " + box.q("source.csv"));
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(std::abs(j["mmd"].get<double>()) <= 1e-14);
  CHECK(std::abs(j["lmmd"].get<double>()) <= 1e-14);

  r = box.run("discrepancy " + box.q("source.csv") + " " + box.q("target.csv") + " --out " +
              box.q("rep.json"));
  REQUIRE(r.code == 0);
  j = json::parse(Sandbox::slurp(box.path("rep.json")));
  const Dataset s = load_csv(box.path("source.csv").string());
  const Dataset t = load_csv(box.path("target.csv").string());
  const MeasuredDiscrepancy m =
      measure_feature_discrepancies(s.features, s.labels, t.features, t.labels, 2, KernelSpec::median());
  CHECK(std::abs(j["mmd"].get<double>() - m.mmd) <= 1e-12);
  CHECK(std::abs(j["lmmd"].get<double>() - m.lmmd) <= 1e-12);

  r = box.run("discrepancy " + box.q("source.csv") + " " + box.q("target.csv") +
              " --bandwidth 0.5 --multipliers 1,2");
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(std::abs(j["mmd"].get<double>() -
                 mmd(s.features, t.features, KernelSpec::fixed(0.5, {1.0, 2.0})).value) <= 1e-12);

  Dataset one_class = s;
  std::fill(one_class.labels.begin(), one_class.labels.end(), 0);
  one_class.class_count = 1;
  save_csv(one_class, box.path("c1s.csv").string());
  Dataset one_class_t = t;
  std::fill(one_class_t.labels.begin(), one_class_t.labels.end(), 0);
  one_class_t.class_count = 1;
  save_csv(one_class_t, box.path("c1t.csv").string());
  r = box.run("discrepancy " + box.q("c1s.csv") + " " + box.q("c1t.csv"));
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(std::abs(j["mmd"].get<double>() - j["lmmd"].get<double>()) <= 1e-12);

  Dataset unlabeled = t;
  std::fill(unlabeled.labels.begin(), unlabeled.labels.end(), kUnlabeled);
  save_csv(unlabeled, box.path("u.csv").string());
  r = box.run("discrepancy " + box.q("source.csv") + " " + box.q("u.csv"));
  CHECK(r.code == 2);
  CHECK(r.err.find("model") != std::string::npos);

  save_model(MlpModel::init({2, 8, 4, 2}, 0), box.path("m.txt").string());
  r = box.run("discrepancy " + box.q("source.csv") + " " + box.q("u.csv") + " --model " + box.q("m.txt"));
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["target_weights"] == "model");

  CHECK(box.run("discrepancy " + box.q("source.csv") + " " + box.q("nope.csv")).code == 2);
}

TEST_CASE("adistance report") {
  Sandbox box;
  save_csv(gen_two_moons(400, 0.1, 0.0, 1), box.path("a.csv").string());
  Run r = box.run("adistance " + box.q("a.csv") + " " + box.q("a.csv") + " --seed 2");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(std::abs(j["global_d"].get<double>()) <= 0.3);
  for (const char* key : {"per_class_d", "local_d", "class_priors", "excluded_classes"})
    CHECK(j.contains(key));

  BlobsParams p{.n = 200, .classes = 2, .dim = 2, .noise_sd = 1.0, .center_box = 0.0, .center_seed = 1,
                .sample_seed = 2};
  save_csv(gen_blobs(p), box.path("b1.csv").string());
  p.centers_shift = {10.0, 10.0};
  p.sample_seed = 3;
  save_csv(gen_blobs(p), box.path("b2.csv").string());
  r = box.run("adistance " + box.q("b1.csv") + " " + box.q("b2.csv"));
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["global_d"].get<double>() >= 1.8);
}
