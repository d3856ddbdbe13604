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

#ifndef CLUSTERNS_CLUSTERING_HPP_
#define CLUSTERNS_CLUSTERING_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "clusterns/embedding.hpp"

namespace clusterns {

enum class InitMode { kLocal, kGlobal };

std::string to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& name);

// How each further seed centroid is chosen during initialization.
enum class SeedingRule {
  // Least similar to the previously chosen centroid only. Can bounce between
  // the two mutually least similar regions and leave others unseeded.
  kFarthestFromLast,
  // Least similar to its closest already-chosen centroid (farthest-first).
  kFarthestFromSelected,
};

std::string to_string(SeedingRule rule);
SeedingRule seeding_rule_from_string(const std::string& name);

struct ClusterConfig {
  std::size_t k = 16;
  double gamma = 0.1;        // centroid momentum, in [0, 1]
  double sigma = 0.4;        // mean in-batch similarity that opens clustering
  long warmup_cap = 50;      // step at which initialization is forced
  InitMode init_mode = InitMode::kLocal;
  SeedingRule seeding = SeedingRule::kFarthestFromSelected;

  // Throws ConfigError naming the offending field under `prefix`.
  void validate(const std::string& prefix = "cluster") const;
};

// K unit-norm centroids; the clustering state carried between steps.
class CentroidSet {
 public:
  CentroidSet() = default;
  explicit CentroidSet(std::vector<Vector> centroids, long initialized_at = 0);

  // Adopts rows that are already unit norm without renormalizing them.
  static CentroidSet from_unit_rows(std::vector<Vector> rows,
                                    long initialized_at);

  std::size_t k() const { return centroids_.size(); }
  std::size_t dim() const { return centroids_.empty() ? 0 : centroids_[0].size(); }
  bool initialized() const { return !centroids_.empty(); }
  long step_initialized_at() const { return step_initialized_at_; }
  void set_step_initialized_at(long step) { step_initialized_at_ = step; }

  const std::vector<Vector>& centroids() const { return centroids_; }
  const Vector& operator[](std::size_t i) const { return centroids_[i]; }

 private:
  std::vector<Vector> centroids_;
  long step_initialized_at_ = 0;
};

struct ClusterAssignment {
  std::vector<std::size_t> assigned_cluster;              // length N
  std::vector<std::vector<std::size_t>> cluster_members;  // length K
  std::vector<std::size_t> cluster_sizes;                 // length K
};

// True once the mean off-diagonal anchor similarity has fallen to sigma, or
// once `step` reaches the warm-up cap.
bool should_initialize(const EmbeddingBatch& batch, const ClusterConfig& config,
                       long step);

// Heuristic seeding: the first centroid is a seeded-random anchor, each later
// one is the unselected anchor least similar to the already chosen
// centroid(s) per `rule` (lowest index on ties). Throws
// InsufficientSamplesError when fewer than k anchors are given.
CentroidSet initialize_centroids(
    const std::vector<Vector>& unit_anchors, std::size_t k, std::uint64_t seed,
    SeedingRule rule = SeedingRule::kFarthestFromSelected);
CentroidSet initialize_centroids(
    const EmbeddingBatch& batch, std::size_t k, std::uint64_t seed,
    SeedingRule rule = SeedingRule::kFarthestFromSelected);

// Indices chosen by initialize_centroids, in selection order.
std::vector<std::size_t> select_initial_indices(
    const std::vector<Vector>& unit_anchors, std::size_t k, std::uint64_t seed,
    SeedingRule rule = SeedingRule::kFarthestFromSelected);

// Nearest centroid by cosine, lowest index on ties.
ClusterAssignment assign(const std::vector<Vector>& unit_samples,
                         const CentroidSet& centroids);
ClusterAssignment assign(const EmbeddingBatch& batch,
                         const CentroidSet& centroids);

// c_i <- normalize((1 - gamma) c_i + gamma * mean(members of C_i)) for every
// non-empty cluster; empty clusters keep their centroid.
CentroidSet momentum_update(const CentroidSet& centroids,
                            const ClusterAssignment& assignment,
                            const EmbeddingBatch& batch, double gamma);
CentroidSet momentum_update(const CentroidSet& centroids,
                            const ClusterAssignment& assignment,
                            const std::vector<Vector>& unit_samples,
                            double gamma);

// Fraction of samples whose cluster has at least two members.
double false_negative_rate(const ClusterAssignment& assignment);

// Text snapshot:
//   clusterns-centroids v1 k=<K> dim=<d> step=<s>
//   <c_1 coordinates, tab separated>
//   ...
// An uninitialized set is written with k=0.
void write_centroids(std::ostream& out, const CentroidSet& centroids);
CentroidSet read_centroids(std::istream& in);

}  // namespace clusterns

#endif  // CLUSTERNS_CLUSTERING_HPP_
