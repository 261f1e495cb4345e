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
#include <optional>
#include <string>
#include <vector>

#include "dsan/matrix.hpp"

namespace dsan {

inline constexpr int kUnlabeled = -1;

struct Dataset {
  Matrix features;          // n x d
  std::vector<int> labels;  // class index or kUnlabeled per row
  std::size_t class_count = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  bool fully_labeled() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;

  // Label range and finiteness.
  void validate() const;
};

// Two interleaved half-circles of radius 1 (upper arc class 0, lower arc
// class 1, n/2 points each) with isotropic Gaussian noise, the whole cloud
// then rotated by `rotation_deg` about the origin.
Dataset gen_two_moons(std::size_t n, double noise_sd, double rotation_deg, std::uint64_t seed);

struct BlobsParams {
  std::size_t n = 0;
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> centers_shift;  // empty => no shift; else length dim
  double noise_sd = 1.0;
  double center_box = 10.0;           // centers ~ Uniform(-box, box)^dim
  std::uint64_t center_seed = 0;
  std::uint64_t sample_seed = 0;
};

// Isotropic Gaussian clusters; n / classes rows per class, remainder to the
// last class. Centers depend only on center_seed, so a source/target pair
// shares them and differs by centers_shift and sample_seed.
Dataset gen_blobs(const BlobsParams& params);

// CSV with header `label,f0,...,f{d-1}`; features written with 17
// significant digits, -1 for unlabeled rows.
void save_csv(const Dataset& ds, const std::string& path);

// When class_count is given, labels >= class_count are rejected; otherwise it
// is inferred as max label + 1.
Dataset load_csv(const std::string& path, std::optional<std::size_t> class_count = std::nullopt);

}  // namespace dsan
