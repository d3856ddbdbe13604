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

#ifndef CLUSTERNS_EVALUATION_HPP_
#define CLUSTERNS_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "clusterns/embedding.hpp"

namespace clusterns {

struct ScoredPair {
  Vector a;
  Vector b;
  double gold = 0.0;
};

struct ScoredPairSet {
  std::vector<ScoredPair> pairs;

  // Pairs whose gold score is strictly above `threshold`, as vector pairs for
  // alignment().
  std::vector<std::pair<Vector, Vector>> positive_pairs(double threshold) const;
};

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman correlation of two score lists (Pearson on average ranks).
// Throws DegenerateRankError if either list is constant or shorter than 2.
double spearman(std::span<const double> predicted, std::span<const double> gold);

// Spearman between per-pair cosine and gold score.
double spearman(const ScoredPairSet& pairs);

// Mean squared distance between unit-norm positive pairs; in [0, 4].
double alignment(const std::vector<std::pair<Vector, Vector>>& pairs);

// log of the mean of exp(-2 ||a - b||^2) over distinct unordered pairs.
double uniformity(const std::vector<Vector>& embeddings);

// Adjusted mutual information (natural log, arithmetic-mean normalization,
// expected MI under the hypergeometric permutation model).
double ami(const std::vector<int>& predicted, const std::vector<int>& truth);

// Best accuracy over one-to-one mappings of predicted labels onto true
// labels, found with the Hungarian method on the padded contingency matrix.
double clustering_accuracy(const std::vector<int>& predicted,
                           const std::vector<int>& truth);

// Minimum-cost perfect matching on a square cost matrix. Returns, for each
// row, the matched column.
std::vector<std::size_t> hungarian_min_cost(const Matrix& cost);

// Lloyd iterations on the unit sphere (cosine assignment, renormalized
// means) with k-means++ seeding; the best of `restarts` runs by total
// similarity wins. Used to cluster evaluation embeddings.
std::vector<int> spherical_kmeans(const std::vector<Vector>& unit_vectors,
                                  std::size_t k, std::uint64_t seed,
                                  int restarts = 5, int max_iterations = 100);

}  // namespace clusterns

#endif  // CLUSTERNS_EVALUATION_HPP_
