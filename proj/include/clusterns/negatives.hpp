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

#ifndef CLUSTERNS_NEGATIVES_HPP_
#define CLUSTERNS_NEGATIVES_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "clusterns/clustering.hpp"
#include "clusterns/embedding.hpp"

namespace clusterns {

// Which centroid serves as each anchor's hard negative.
enum class NegativeMode {
  kStandard,  // second-nearest centroid
  kHarder,    // nearest centroid (the anchor's own cluster)
  kRandom,    // seeded uniform pick among centroids other than the nearest
};

std::string to_string(NegativeMode mode);
NegativeMode negative_mode_from_string(const std::string& name);

// Square boolean matrix over batch indices.
class PairMask {
 public:
  PairMask() = default;
  explicit PairMask(std::size_t n) : n_(n), bits_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool value) { bits_[i * n_ + j] = value ? 1 : 0; }

  std::size_t count() const;
  std::size_t row_count(std::size_t i) const;

  bool operator==(const PairMask&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<unsigned char> bits_;
};

struct NegativeAnnotation {
  std::vector<std::size_t> nearest_centroid_index;
  std::vector<std::size_t> hard_negative_index;
  // Snapshot copies of the chosen centroids; the losses treat them as
  // constants.
  std::vector<Vector> hard_negatives;
  // (i, j) is set iff i != j and both sit in the same cluster.
  PairMask false_negative_mask;
};

// Requires K >= 2 (InsufficientClustersError otherwise). Ties in the
// second-nearest search go to the lowest centroid index. `seed` is only
// consumed by NegativeMode::kRandom.
NegativeAnnotation annotate(const EmbeddingBatch& batch,
                            const CentroidSet& centroids,
                            const ClusterAssignment& assignment,
                            NegativeMode mode = NegativeMode::kStandard,
                            std::uint64_t seed = 0);

// Fraction of set pairs whose two samples share a ground-truth label.
// An empty mask is vacuously precise (1.0).
double false_negative_precision(const PairMask& mask,
                                const std::vector<int>& labels);

}  // namespace clusterns

#endif  // CLUSTERNS_NEGATIVES_HPP_
