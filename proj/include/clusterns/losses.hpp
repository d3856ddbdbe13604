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

#ifndef CLUSTERNS_LOSSES_HPP_
#define CLUSTERNS_LOSSES_HPP_

#include <string>
#include <vector>

#include "clusterns/embedding.hpp"
#include "clusterns/negatives.hpp"

namespace clusterns {

struct LossConfig {
  double tau = 0.05;         // softmax temperature
  double mu = 1.0;           // hard-negative weight
  double lambda_bml = 0.01;  // weight of the bidirectional margin loss
  double alpha = 0.1;        // Delta must stay <= -alpha
  double beta = 0.5;         // Delta must stay >= -beta
  bool use_hard_negatives = true;
  bool use_bml = true;
  NegativeMode negative_mode = NegativeMode::kStandard;

  void validate(const std::string& prefix = "loss") const;
};

// Loss values and the gradient of `total` with respect to the raw
// (pre-normalization) anchor and positive vectors of the batch.
struct LossBreakdown {
  double l_cl = 0.0;
  double l_bml = 0.0;
  double total = 0.0;
  std::vector<Vector> grad_anchors;
  std::vector<Vector> grad_positives;
};

// Mean over anchors of -log softmax of the positive among all in-batch
// positives, at temperature tau.
LossBreakdown infonce(const EmbeddingBatch& batch, const LossConfig& config);

// InfoNCE whose denominator also carries mu * exp(cos(x_i, h_j) / tau) for
// every hard negative h_j in the batch. Hard negatives receive no gradient.
LossBreakdown infonce_hard(const EmbeddingBatch& batch,
                           const NegativeAnnotation& annotation,
                           const LossConfig& config);

// Per-anchor margin penalty ReLU(delta + alpha) + ReLU(-delta - beta); zero
// exactly on [-beta, -alpha].
double bml_margin(double delta, double alpha, double beta);

// Delta_i = mean cos(x_i, false negatives of i) - cos(x_i, x_i^+); the loss
// averages bml_margin over anchors that have at least one false negative.
LossBreakdown bml(const EmbeddingBatch& batch,
                  const NegativeAnnotation& annotation,
                  const LossConfig& config);

// Per-anchor Delta values; anchors without false negatives are NaN.
std::vector<double> bml_deltas(const EmbeddingBatch& batch,
                               const PairMask& false_negatives);

// l_cl + lambda * l_bml with the component switches of `config`. The
// annotation may be null only when both switches are off.
LossBreakdown total_loss(const EmbeddingBatch& batch,
                         const NegativeAnnotation* annotation,
                         const LossConfig& config);

struct BatchGradient {
  std::vector<Vector> anchors;
  std::vector<Vector> positives;
};

// Central-difference estimate of d total_loss / d raw coordinate, holding
// the annotation fixed. epsilon must lie in [1e-7, 1e-4].
BatchGradient finite_difference_gradient(const EmbeddingBatch& batch,
                                         const NegativeAnnotation* annotation,
                                         const LossConfig& config,
                                         double epsilon);

}  // namespace clusterns

#endif  // CLUSTERNS_LOSSES_HPP_
