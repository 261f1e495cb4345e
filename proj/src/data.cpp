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

#include "dsan/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dsan/error.hpp"

namespace dsan {

bool Dataset::fully_labeled() const {
  return std::all_of(labels.begin(), labels.end(), [](int y) { return y >= 0; });
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.features.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(rows[k]));
    out.labels.push_back(labels[rows[k]]);
  }
  out.class_count = class_count;
  out.name = name;
  return out;
}

void Dataset::validate() const {
  require(static_cast<std::size_t>(features.rows()) == labels.size(), ErrorCode::kValidation,
          "dataset '" + name + "': label count does not match rows");
  require_finite(features, "dataset '" + name + "' features");
  for (const int y : labels)
    require(y == kUnlabeled || (y >= 0 && static_cast<std::size_t>(y) < class_count),
            ErrorCode::kValidation,
            "dataset '" + name + "': label " + std::to_string(y) + " outside [0, " +
                std::to_string(class_count) + ")");
}

Dataset gen_two_moons(std::size_t n, double noise_sd, double rotation_deg, std::uint64_t seed) {
  require(n >= 2 && n % 2 == 0, ErrorCode::kValidation, "two moons: n must be even and >= 2");
  require(std::isfinite(noise_sd) && noise_sd >= 0.0, ErrorCode::kValidation,
          "two moons: noise must be >= 0");
  require(std::isfinite(rotation_deg), ErrorCode::kValidation, "two moons: bad rotation");

  const std::size_t half = n / 2;
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 2);
  ds.labels.resize(n);
  ds.class_count = 2;
  ds.name = "two_moons";

  for (std::size_t k = 0; k < half; ++k) {
    const double t = half > 1 ? std::numbers::pi * static_cast<double>(k) /
                                    static_cast<double>(half - 1)
                              : 0.0;
    const auto upper = static_cast<Eigen::Index>(k);
    const auto lower = static_cast<Eigen::Index>(half + k);
    ds.features(upper, 0) = std::cos(t);
    ds.features(upper, 1) = std::sin(t);
    ds.features(lower, 0) = 1.0 - std::cos(t);
    ds.features(lower, 1) = 0.5 - std::sin(t);
    ds.labels[k] = 0;
    ds.labels[half + k] = 1;
  }

  if (noise_sd > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (Eigen::Index i = 0; i < ds.features.size(); ++i) ds.features.data()[i] += noise(rng);
  }

  const double a = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    const double x = ds.features(i, 0);
    const double y = ds.features(i, 1);
    ds.features(i, 0) = c * x - s * y;
    ds.features(i, 1) = s * x + c * y;
  }
  return ds;
}

Dataset gen_blobs(const BlobsParams& p) {
  require(p.classes >= 1 && p.dim >= 1 && p.n >= p.classes, ErrorCode::kValidation,
          "blobs: need classes >= 1, dim >= 1 and n >= classes");
  require(p.centers_shift.empty() || p.centers_shift.size() == p.dim, ErrorCode::kValidation,
          "blobs: centers shift length must equal dim");
  require(std::isfinite(p.noise_sd) && p.noise_sd >= 0.0, ErrorCode::kValidation,
          "blobs: noise must be >= 0");

  const auto d = static_cast<Eigen::Index>(p.dim);
  Matrix centers(static_cast<Eigen::Index>(p.classes), d);
  {
    std::mt19937_64 rng(p.center_seed);
    std::uniform_real_distribution<double> box(-p.center_box, p.center_box);
    for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = box(rng);
  }
  if (!p.centers_shift.empty())
    for (Eigen::Index c = 0; c < centers.rows(); ++c)
      for (Eigen::Index k = 0; k < d; ++k)
        centers(c, k) += p.centers_shift[static_cast<std::size_t>(k)];

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(p.n), d);
  ds.labels.resize(p.n);
  ds.class_count = p.classes;
  ds.name = "blobs";

  const std::size_t per_class = p.n / p.classes;
  std::mt19937_64 rng(p.sample_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::size_t c = std::min(i / per_class, p.classes - 1);
    ds.labels[i] = static_cast<int>(c);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double e = p.noise_sd > 0.0 ? p.noise_sd * noise(rng) : 0.0;
      ds.features(static_cast<Eigen::Index>(i), k) = centers(static_cast<Eigen::Index>(c), k) + e;
    }
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out << "label";
  for (std::size_t k = 0; k < ds.dim(); ++k) out << ",f" << k;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (Eigen::Index k = 0; k < ds.features.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.features(static_cast<Eigen::Index>(i), k));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

Dataset load_csv(const std::string& path, std::optional<std::size_t> class_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read '" + path + "'");

  auto parse_error = [&](std::size_t line_no, const std::string& what) {
    fail(ErrorCode::kParse, path + ":" + std::to_string(line_no) + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line)) parse_error(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.empty() || header[0] != "label") parse_error(1, "header must start with 'label'");
  for (std::size_t k = 1; k < header.size(); ++k)
    if (header[k] != "f" + std::to_string(k - 1))
      parse_error(1, "expected column 'f" + std::to_string(k - 1) + "', got '" + header[k] + "'");
  const std::size_t dim = header.size() - 1;

  std::vector<int> labels;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size())
      parse_error(line_no, "expected " + std::to_string(header.size()) + " columns, got " +
                               std::to_string(fields.size()));
    int label = 0;
    const auto& lf = fields[0];
    const auto [ptr, ec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (ec != std::errc() || ptr != lf.data() + lf.size() || label < kUnlabeled)
      parse_error(line_no, "bad label '" + lf + "'");
    if (class_count && label >= 0 && static_cast<std::size_t>(label) >= *class_count)
      parse_error(line_no, "label " + lf + " >= class count " + std::to_string(*class_count));
    labels.push_back(label);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const std::string& f = fields[k];
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (f.empty() || end != f.c_str() + f.size() || !std::isfinite(v))
        parse_error(line_no, "bad feature value '" + f + "'");
      values.push_back(v);
    }
  }

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(dim));
  std::copy(values.begin(), values.end(), ds.features.data());
  ds.labels = std::move(labels);
  if (class_count) {
    ds.class_count = *class_count;
  } else {
    int top = -1;
    for (const int y : ds.labels) top = std::max(top, y);
    ds.class_count = static_cast<std::size_t>(top + 1);
  }
  ds.name = std::filesystem::path(path).stem().string();
  return ds;
}

}  // namespace dsan
