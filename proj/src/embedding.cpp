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

#include "clusterns/embedding.hpp"

#include <cmath>
#include <string>

#include "clusterns/errors.hpp"

namespace clusterns {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vector normalize(std::span<const double> v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw NormalizationError("cannot normalize a vector with norm " +
                             std::to_string(n));
  }
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine: dimension mismatch " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
  return dot(normalize(a), normalize(b));
}

Matrix pairwise_similarity(const std::vector<Vector>& a,
                           const std::vector<Vector>& b) {
  std::size_t dim = 0;
  if (!a.empty()) dim = a[0].size();
  else if (!b.empty()) dim = b[0].size();
  for (const auto* list : {&a, &b}) {
    for (const Vector& v : *list) {
      if (v.size() != dim) {
        throw ShapeError("pairwise_similarity: expected dimension " +
                         std::to_string(dim) + ", got " +
                         std::to_string(v.size()));
      }
    }
  }
  Matrix sim(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) sim(i, j) = dot(a[i], b[j]);
  }
  return sim;
}

EmbeddingBatch EmbeddingBatch::from_raw(std::vector<Vector> anchors,
                                        std::vector<Vector> positives) {
  if (anchors.size() != positives.size()) {
    throw ShapeError("batch has " + std::to_string(anchors.size()) +
                     " anchors but " + std::to_string(positives.size()) +
                     " positives");
  }
  if (anchors.size() < 2) {
    throw BatchTooSmallError("batch needs at least 2 samples, got " +
                             std::to_string(anchors.size()));
  }
  const std::size_t dim = anchors[0].size();
  if (dim < 2) throw ShapeError("embedding dimension must be at least 2");

  EmbeddingBatch batch;
  auto ingest = [dim](const std::vector<Vector>& raw, std::vector<Vector>& unit,
                      std::vector<double>& norms) {
    unit.reserve(raw.size());
    norms.reserve(raw.size());
    for (const Vector& v : raw) {
      if (v.size() != dim) {
        throw ShapeError("batch rows must all have dimension " +
                         std::to_string(dim));
      }
      if (!all_finite(v)) throw NormalizationError("non-finite embedding");
      norms.push_back(norm(v));
      unit.push_back(normalize(v));
    }
  };
  ingest(anchors, batch.anchors_, batch.anchor_norms_);
  ingest(positives, batch.positives_, batch.positive_norms_);
  batch.raw_anchors_ = std::move(anchors);
  batch.raw_positives_ = std::move(positives);
  return batch;
}

double mean_offdiagonal_similarity(const std::vector<Vector>& unit_vectors) {
  const std::size_t n = unit_vectors.size();
  if (n < 2) return 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += dot(unit_vectors[i], unit_vectors[j]);
    }
  }
  return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

Vector project_through_normalization(std::span<const double> grad_unit,
                                     std::span<const double> unit,
                                     double raw_norm) {
  const double radial = dot(grad_unit, unit);
  Vector out(grad_unit.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = (grad_unit[k] - radial * unit[k]) / raw_norm;
  }
  return out;
}

}  // namespace clusterns
