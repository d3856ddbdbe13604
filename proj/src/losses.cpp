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

#include "clusterns/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "clusterns/errors.hpp"

namespace clusterns {

void LossConfig::validate(const std::string& prefix) const {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError("must be positive", prefix + ".tau");
  }
  if (!(mu >= 0.0)) throw ConfigError("must be non-negative", prefix + ".mu");
  if (!(lambda_bml >= 0.0)) {
    throw ConfigError("must be non-negative", prefix + ".lambda_bml");
  }
  if (!(alpha >= 0.0)) throw ConfigError("must be non-negative", prefix + ".alpha");
  if (!(beta > alpha)) throw ConfigError("must exceed alpha", prefix + ".beta");
}

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError("temperature must be positive", "loss.tau");
  }
}

std::vector<Vector> zeros(std::size_t n, std::size_t dim) {
  return std::vector<Vector>(n, Vector(dim, 0.0));
}

// Converts gradients with respect to the unit vectors into gradients with
// respect to the raw vectors.
void finish_gradients(const EmbeddingBatch& batch, LossBreakdown& out) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.grad_anchors[i] = project_through_normalization(
        out.grad_anchors[i], batch.anchors()[i], batch.anchor_norms()[i]);
    out.grad_positives[i] = project_through_normalization(
        out.grad_positives[i], batch.positives()[i], batch.positive_norms()[i]);
  }
}

// Shared InfoNCE kernel. Hard-negative terms are only formed when mu > 0, so
// mu == 0 reproduces plain InfoNCE bit for bit.
LossBreakdown contrastive(const EmbeddingBatch& batch,
                          const std::vector<Vector>* hard_negatives, double mu,
                          double tau) {
  check_tau(tau);
  const std::size_t n = batch.size();
  const std::size_t dim = batch.dim();
  const bool with_hard = hard_negatives != nullptr && mu > 0.0;
  if (with_hard && hard_negatives->size() != n) {
    throw ShapeError("annotation does not match batch size");
  }
  const auto& a = batch.anchors();
  const auto& p = batch.positives();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossBreakdown out;
  out.grad_anchors = zeros(n, dim);
  out.grad_positives = zeros(n, dim);

  std::vector<double> pos_logits(n);
  std::vector<double> hard_logits(with_hard ? n : 0);
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      pos_logits[j] = dot(a[i], p[j]) / tau;
      max_logit = std::max(max_logit, pos_logits[j]);
    }
    if (with_hard) {
      for (std::size_t j = 0; j < n; ++j) {
        hard_logits[j] = dot(a[i], (*hard_negatives)[j]) / tau;
        max_logit = std::max(max_logit, hard_logits[j]);
      }
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      pos_logits[j] = std::exp(pos_logits[j] - max_logit);
      z += pos_logits[j];
    }
    if (with_hard) {
      for (std::size_t j = 0; j < n; ++j) {
        hard_logits[j] = mu * std::exp(hard_logits[j] - max_logit);
        z += hard_logits[j];
      }
    }
    const double own = dot(a[i], p[i]) / tau;
    loss_sum += -own + max_logit + std::log(z);

    // dL_i/da_i = (sum_j P_ij p_j + sum_j Q_ij h_j - p_i) / tau
    // dL_i/dp_j = (P_ij - [i == j]) a_i / tau
    Vector& ga = out.grad_anchors[i];
    const double scale = inv_n / tau;
    for (std::size_t j = 0; j < n; ++j) {
      const double weight = pos_logits[j] / z - (i == j ? 1.0 : 0.0);
      for (std::size_t d = 0; d < dim; ++d) {
        ga[d] += scale * weight * p[j][d];
        out.grad_positives[j][d] += scale * weight * a[i][d];
      }
    }
    if (with_hard) {
      for (std::size_t j = 0; j < n; ++j) {
        const double weight = hard_logits[j] / z;
        for (std::size_t d = 0; d < dim; ++d) {
          ga[d] += scale * weight * (*hard_negatives)[j][d];
        }
      }
    }
  }
  out.l_cl = loss_sum * inv_n;
  out.total = out.l_cl;
  finish_gradients(batch, out);
  return out;
}

}  // namespace

LossBreakdown infonce(const EmbeddingBatch& batch, const LossConfig& config) {
  return contrastive(batch, nullptr, 0.0, config.tau);
}

LossBreakdown infonce_hard(const EmbeddingBatch& batch,
                           const NegativeAnnotation& annotation,
                           const LossConfig& config) {
  return contrastive(batch, &annotation.hard_negatives, config.mu, config.tau);
}

double bml_margin(double delta, double alpha, double beta) {
  return std::max(delta + alpha, 0.0) + std::max(-delta - beta, 0.0);
}

std::vector<double> bml_deltas(const EmbeddingBatch& batch,
                               const PairMask& false_negatives) {
  const std::size_t n = batch.size();
  if (false_negatives.size() != n) {
    throw ShapeError("false-negative mask does not match batch size");
  }
  const auto& a = batch.anchors();
  std::vector<double> deltas(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!false_negatives(i, j)) continue;
      sum += dot(a[i], a[j]);
      ++count;
    }
    if (count == 0) continue;
    deltas[i] = sum / static_cast<double>(count) - dot(a[i], batch.positives()[i]);
  }
  return deltas;
}

LossBreakdown bml(const EmbeddingBatch& batch,
                  const NegativeAnnotation& annotation,
                  const LossConfig& config) {
  const std::size_t n = batch.size();
  const std::size_t dim = batch.dim();
  const auto& mask = annotation.false_negative_mask;
  const std::vector<double> deltas = bml_deltas(batch, mask);
  const auto& a = batch.anchors();
  const auto& p = batch.positives();

  LossBreakdown out;
  out.grad_anchors = zeros(n, dim);
  out.grad_positives = zeros(n, dim);

  std::size_t active = 0;
  for (double d : deltas) active += std::isnan(d) ? 0 : 1;
  if (active == 0) {
    finish_gradients(batch, out);
    return out;
  }
  const double inv_active = 1.0 / static_cast<double>(active);

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = deltas[i];
    if (std::isnan(delta)) continue;
    sum += bml_margin(delta, config.alpha, config.beta);
    // Slope of the margin in delta: +1 above -alpha, -1 below -beta.
    double slope = 0.0;
    if (delta + config.alpha > 0.0) slope = 1.0;
    else if (-delta - config.beta > 0.0) slope = -1.0;
    if (slope == 0.0) continue;

    const double w = slope * inv_active;
    const double inv_count = 1.0 / static_cast<double>(mask.row_count(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask(i, j)) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        out.grad_anchors[i][d] += w * inv_count * a[j][d];
        out.grad_anchors[j][d] += w * inv_count * a[i][d];
      }
    }
    for (std::size_t d = 0; d < dim; ++d) {
      out.grad_anchors[i][d] -= w * p[i][d];
      out.grad_positives[i][d] -= w * a[i][d];
    }
  }
  out.l_bml = sum * inv_active;
  out.total = out.l_bml;
  finish_gradients(batch, out);
  return out;
}

LossBreakdown total_loss(const EmbeddingBatch& batch,
                         const NegativeAnnotation* annotation,
                         const LossConfig& config) {
  config.validate();
  if ((config.use_hard_negatives || config.use_bml) && annotation == nullptr) {
    throw ConfigError("hard negatives or BML requested without an annotation",
                      "loss");
  }
  LossBreakdown out = config.use_hard_negatives
                          ? infonce_hard(batch, *annotation, config)
                          : infonce(batch, config);
  out.l_bml = 0.0;
  out.total = out.l_cl;
  if (config.use_bml) {
    const LossBreakdown margin = bml(batch, *annotation, config);
    out.l_bml = margin.l_bml;
    out.total = out.l_cl + config.lambda_bml * margin.l_bml;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t d = 0; d < batch.dim(); ++d) {
        out.grad_anchors[i][d] += config.lambda_bml * margin.grad_anchors[i][d];
        out.grad_positives[i][d] += config.lambda_bml * margin.grad_positives[i][d];
      }
    }
  }
  return out;
}

BatchGradient finite_difference_gradient(const EmbeddingBatch& batch,
                                         const NegativeAnnotation* annotation,
                                         const LossConfig& config,
                                         double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-4)) {
    throw ConfigError("finite-difference step must lie in [1e-7, 1e-4]", "epsilon");
  }
  const std::size_t n = batch.size();
  const std::size_t dim = batch.dim();
  auto evaluate = [&](const std::vector<Vector>& anchors,
                      const std::vector<Vector>& positives) {
    return total_loss(EmbeddingBatch::from_raw(anchors, positives), annotation,
                      config)
        .total;
  };

  BatchGradient grad{zeros(n, dim), zeros(n, dim)};
  std::vector<Vector> anchors = batch.raw_anchors();
  std::vector<Vector> positives = batch.raw_positives();
  for (int which = 0; which < 2; ++which) {
    std::vector<Vector>& target = which == 0 ? anchors : positives;
    std::vector<Vector>& result = which == 0 ? grad.anchors : grad.positives;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double original = target[i][d];
        target[i][d] = original + epsilon;
        const double up = evaluate(anchors, positives);
        target[i][d] = original - epsilon;
        const double down = evaluate(anchors, positives);
        target[i][d] = original;
        result[i][d] = (up - down) / (2.0 * epsilon);
      }
    }
  }
  return grad;
}

}  // namespace clusterns
