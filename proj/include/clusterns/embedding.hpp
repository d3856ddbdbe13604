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

#ifndef CLUSTERNS_EMBEDDING_HPP_
#define CLUSTERNS_EMBEDDING_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace clusterns {

using Vector = std::vector<double>;

// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
double squared_distance(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> v);

// Returns v / ||v||. Throws NormalizationError on a zero or non-finite norm.
Vector normalize(std::span<const double> v);

// Cosine similarity. Both inputs are normalized first, so the result is the
// dot product of unit vectors. Throws NormalizationError on zero input and
// ShapeError on a length mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

// Entry (i, j) is the dot product of a[i] and b[j]. Inputs must already be
// unit norm; this is the kernel shared by the losses and by clustering.
Matrix pairwise_similarity(const std::vector<Vector>& a,
                           const std::vector<Vector>& b);

// N anchor/positive pairs. Holds both the raw encoder outputs and their
// unit-norm projections; the losses differentiate through the projection,
// so their gradients are with respect to the raw vectors.
class EmbeddingBatch {
 public:
  // Validates N >= 2, dimension >= 2, matching shapes, finite non-zero rows.
  static EmbeddingBatch from_raw(std::vector<Vector> anchors,
                                 std::vector<Vector> positives);

  std::size_t size() const { return anchors_.size(); }
  std::size_t dim() const { return anchors_.empty() ? 0 : anchors_[0].size(); }

  const std::vector<Vector>& anchors() const { return anchors_; }
  const std::vector<Vector>& positives() const { return positives_; }
  const std::vector<Vector>& raw_anchors() const { return raw_anchors_; }
  const std::vector<Vector>& raw_positives() const { return raw_positives_; }
  const std::vector<double>& anchor_norms() const { return anchor_norms_; }
  const std::vector<double>& positive_norms() const { return positive_norms_; }

 private:
  std::vector<Vector> raw_anchors_;
  std::vector<Vector> raw_positives_;
  std::vector<Vector> anchors_;
  std::vector<Vector> positives_;
  std::vector<double> anchor_norms_;
  std::vector<double> positive_norms_;
};

// Mean of a[i].b[j] over i != j for unit-norm rows of a single list.
double mean_offdiagonal_similarity(const std::vector<Vector>& unit_vectors);

// Maps a gradient taken with respect to the unit vector u = v/||v|| back to a
// gradient with respect to v: (g - (g.u) u) / ||v||.
Vector project_through_normalization(std::span<const double> grad_unit,
                                     std::span<const double> unit,
                                     double raw_norm);

}  // namespace clusterns

#endif  // CLUSTERNS_EMBEDDING_HPP_
