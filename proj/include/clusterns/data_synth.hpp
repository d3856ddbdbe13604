// Copyright 2026 The ClusterNS Authors.
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

#ifndef CLUSTERNS_DATA_SYNTH_HPP_
#define CLUSTERNS_DATA_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "clusterns/embedding.hpp"
#include "clusterns/evaluation.hpp"

namespace clusterns {

struct MixtureSpec {
  std::size_t num_classes = 4;
  std::size_t dim = 16;
  std::size_t samples_per_class = 64;
  double intra_concentration = 0.1;  // per-coordinate noise std
  double min_inter_cosine_gap = 0.8; // class directions keep cos <= 1 - gap
  std::uint64_t seed = 7;

  void validate(const std::string& prefix = "mixture") const;
};

// Feature vectors with integer class labels.
struct LabeledDataset {
  std::size_t dim = 0;
  std::vector<Vector> features;
  std::vector<int> labels;

  std::size_t size() const { return features.size(); }
  std::size_t num_classes() const;
  bool operator==(const LabeledDataset&) const = default;
};

// Draws num_classes unit directions (each redrawn up to 1000 times until it
// respects the separation bound against the earlier ones), then emits
// samples_per_class points normalize(direction + noise * N(0, I)) per class,
// class-major. Throws GenerationError when separation cannot be reached.
LabeledDataset generate(const MixtureSpec& spec);

// Class directions drawn by generate() for this mixture.
std::vector<Vector> class_directions(const MixtureSpec& spec);

// Line format:
//   clusterns-dataset v1 dim=<d>
//   <label>\t<c1>\t...\t<cd>
// with shortest round-trip decimal coordinates.
void write_dataset(std::ostream& out, const LabeledDataset& data);
LabeledDataset read_dataset(std::istream& in);

void write_dataset(const std::filesystem::path& path, const LabeledDataset& data);
LabeledDataset read_dataset(const std::filesystem::path& path);

// `count` random pairs of distinct samples with a graded gold score
// 2.5 * (1 + cos(a, b)) in [0, 5], computed on the raw features.
ScoredPairSet synthesize_pairs(const LabeledDataset& data, std::size_t count,
                               std::uint64_t seed);

// Line format:
//   clusterns-pairs v1 dim=<d>
//   <gold>\t<a1>\t...\t<ad>\t<b1>\t...\t<bd>
void write_pairs(std::ostream& out, const ScoredPairSet& pairs);
ScoredPairSet read_pairs(std::istream& in);

void write_pairs(const std::filesystem::path& path, const ScoredPairSet& pairs);
ScoredPairSet read_pairs(const std::filesystem::path& path);

}  // namespace clusterns

#endif  // CLUSTERNS_DATA_SYNTH_HPP_
