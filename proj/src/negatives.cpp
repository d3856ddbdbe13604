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

#include "clusterns/negatives.hpp"

#include <random>

#include "clusterns/errors.hpp"

namespace clusterns {

std::string to_string(NegativeMode mode) {
  switch (mode) {
    case NegativeMode::kStandard: return "standard";
    case NegativeMode::kHarder: return "harder";
    case NegativeMode::kRandom: return "random";
  }
  return "standard";
}

NegativeMode negative_mode_from_string(const std::string& name) {
  if (name == "standard") return NegativeMode::kStandard;
  if (name == "harder") return NegativeMode::kHarder;
  if (name == "random") return NegativeMode::kRandom;
  throw ConfigError("unknown negative mode '" + name +
                        "' (expected standard|harder|random)",
                    "negative_mode");
}

std::size_t PairMask::count() const {
  std::size_t c = 0;
  for (unsigned char b : bits_) c += b;
  return c;
}

std::size_t PairMask::row_count(std::size_t i) const {
  std::size_t c = 0;
  for (std::size_t j = 0; j < n_; ++j) c += bits_[i * n_ + j];
  return c;
}

NegativeAnnotation annotate(const EmbeddingBatch& batch,
                            const CentroidSet& centroids,
                            const ClusterAssignment& assignment,
                            NegativeMode mode, std::uint64_t seed) {
  const std::size_t k = centroids.k();
  const std::size_t n = batch.size();
  if (k < 2) {
    throw InsufficientClustersError("hard negatives need at least 2 centroids");
  }
  if (assignment.assigned_cluster.size() != n) {
    throw ShapeError("assignment does not match batch size");
  }

  NegativeAnnotation out;
  out.nearest_centroid_index = assignment.assigned_cluster;
  out.hard_negative_index.resize(n);
  out.hard_negatives.resize(n);
  std::mt19937_64 rng(seed);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t nearest = out.nearest_centroid_index[i];
    std::size_t chosen = nearest;
    switch (mode) {
      case NegativeMode::kStandard: {
        bool found = false;
        double best = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
          if (c == nearest) continue;
          const double sim = dot(batch.anchors()[i], centroids[c]);
          if (!found || sim > best) {
            best = sim;
            chosen = c;
            found = true;
          }
        }
        break;
      }
      case NegativeMode::kHarder:
        break;
      case NegativeMode::kRandom: {
        const std::size_t r = std::uniform_int_distribution<std::size_t>(0, k - 2)(rng);
        chosen = r >= nearest ? r + 1 : r;
        break;
      }
    }
    out.hard_negative_index[i] = chosen;
    out.hard_negatives[i] = centroids[chosen];
  }

  out.false_negative_mask = PairMask(n);
  for (const auto& members : assignment.cluster_members) {
    for (std::size_t a : members) {
      for (std::size_t b : members) {
        if (a != b) out.false_negative_mask.set(a, b, true);
      }
    }
  }
  return out;
}

double false_negative_precision(const PairMask& mask,
                                const std::vector<int>& labels) {
  if (labels.size() != mask.size()) {
    throw ShapeError("label count does not match mask size");
  }
  std::size_t flagged = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    for (std::size_t j = 0; j < mask.size(); ++j) {
      if (!mask(i, j)) continue;
      ++flagged;
      if (labels[i] == labels[j]) ++correct;
    }
  }
  if (flagged == 0) return 1.0;
  return static_cast<double>(correct) / static_cast<double>(flagged);
}

}  // namespace clusterns
