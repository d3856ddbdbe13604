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

#ifndef CLUSTERNS_TESTS_TEST_SUPPORT_HPP_
#define CLUSTERNS_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "clusterns/embedding.hpp"
#include "clusterns/negatives.hpp"

namespace clusterns::testing {

inline Vector random_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

inline Vector random_unit(std::size_t dim, std::mt19937_64& rng) {
  return normalize(random_vector(dim, rng));
}

inline std::vector<Vector> random_units(std::size_t n, std::size_t dim,
                                        std::mt19937_64& rng) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_unit(dim, rng));
  return out;
}

// Raw (non-unit) anchors, with positives as perturbed copies so the
// positive similarities sit well above the in-batch ones.
inline EmbeddingBatch random_batch(std::size_t n, std::size_t dim, std::mt19937_64& rng,
                                   double noise = 0.3) {
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::vector<Vector> anchors, positives;
  for (std::size_t i = 0; i < n; ++i) {
    Vector a = random_vector(dim, rng);
    Vector p = a;
    const Vector e = random_vector(dim, rng);
    for (std::size_t k = 0; k < dim; ++k) p[k] += noise * e[k];
    const double s = scale(rng);
    for (double& x : a) x *= s;
    anchors.push_back(std::move(a));
    positives.push_back(std::move(p));
  }
  return EmbeddingBatch::from_raw(std::move(anchors), std::move(positives));
}

// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
inline std::vector<Vector> random_rotation(std::size_t dim, std::mt19937_64& rng) {
  std::vector<Vector> basis;
  while (basis.size() < dim) {
    Vector v = random_vector(dim, rng);
    for (const Vector& b : basis) {
      const double d = dot(v, b);
      for (std::size_t k = 0; k < dim; ++k) v[k] -= d * b[k];
    }
    basis.push_back(normalize(v));
  }
  return basis;
}

inline Vector rotate(const std::vector<Vector>& rotation, const Vector& v) {
  Vector out(v.size(), 0.0);
  for (std::size_t r = 0; r < rotation.size(); ++r) out[r] = dot(rotation[r], v);
  return out;
}

// Annotation built from explicit cluster labels and hard-negative vectors.
inline NegativeAnnotation annotation_from_labels(const std::vector<int>& labels,
                                                 std::vector<Vector> hard_negatives) {
  NegativeAnnotation a;
  const std::size_t n = labels.size();
  a.false_negative_mask = PairMask(n);
  for (std::size_t i = 0; i < n; ++i) {
    a.nearest_centroid_index.push_back(static_cast<std::size_t>(labels[i]));
    a.hard_negative_index.push_back(static_cast<std::size_t>(labels[i]) + 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && labels[i] == labels[j]) a.false_negative_mask.set(i, j, true);
    }
  }
  a.hard_negatives = std::move(hard_negatives);
  return a;
}

inline NegativeAnnotation random_annotation(std::size_t n, std::size_t dim, int k,
                                            std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> labels(n);
  for (int& l : labels) l = pick(rng);
  return annotation_from_labels(labels, random_units(n, dim, rng));
}

// Largest |a - b| / max(|a|, |b|) over two gradient lists, ignoring entries
// whose absolute difference is within `abs_floor`.
inline double max_relative_error(const std::vector<Vector>& a, const std::vector<Vector>& b,
                                 double abs_floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      const double diff = std::abs(a[i][k] - b[i][k]);
      if (diff <= abs_floor) continue;
      worst = std::max(worst, diff / std::max(std::abs(a[i][k]), std::abs(b[i][k])));
    }
  }
  return worst;
}

}  // namespace clusterns::testing

#endif  // CLUSTERNS_TESTS_TEST_SUPPORT_HPP_
