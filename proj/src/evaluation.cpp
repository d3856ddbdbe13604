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

#include "clusterns/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "clusterns/errors.hpp"

namespace clusterns {

std::vector<std::pair<Vector, Vector>> ScoredPairSet::positive_pairs(
    double threshold) const {
  std::vector<std::pair<Vector, Vector>> out;
  for (const ScoredPair& p : pairs) {
    if (p.gold > threshold) out.emplace_back(p.a, p.b);
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return values[x] < values[y];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> predicted, std::span<const double> gold) {
  if (predicted.size() != gold.size()) {
    throw ShapeError("spearman: score lists differ in length");
  }
  if (predicted.size() < 2) {
    throw DegenerateRankError("spearman needs at least 2 pairs");
  }
  const std::vector<double> rx = average_ranks(predicted);
  const std::vector<double> ry = average_ranks(gold);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateRankError("spearman is undefined for constant scores");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(const ScoredPairSet& pairs) {
  std::vector<double> predicted;
  std::vector<double> gold;
  for (const ScoredPair& p : pairs.pairs) {
    predicted.push_back(cosine(p.a, p.b));
    gold.push_back(p.gold);
  }
  return spearman(predicted, gold);
}

double alignment(const std::vector<std::pair<Vector, Vector>>& pairs) {
  if (pairs.empty()) throw EmptyInputError("alignment needs at least one pair");
  double sum = 0.0;
  for (const auto& [a, b] : pairs) sum += squared_distance(a, b);
  return sum / static_cast<double>(pairs.size());
}

double uniformity(const std::vector<Vector>& embeddings) {
  const std::size_t n = embeddings.size();
  if (n < 2) throw EmptyInputError("uniformity needs at least two vectors");
  // Every exponent is <= 0 and the largest is reached by the closest pair, so
  // factor it out before summing.
  std::vector<double> exponents;
  exponents.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      exponents.push_back(-2.0 * squared_distance(embeddings[i], embeddings[j]));
    }
  }
  const double top = *std::max_element(exponents.begin(), exponents.end());
  double sum = 0.0;
  for (double e : exponents) sum += std::exp(e - top);
  return top + std::log(sum / static_cast<double>(exponents.size()));
}

namespace {

std::vector<std::size_t> dense_labels(const std::vector<int>& labels,
                                      std::size_t* count) {
  std::map<int, std::size_t> index;
  for (int l : labels) index.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [label, idx] : index) idx = next++;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(index[l]);
  *count = next;
  return out;
}

Matrix contingency(const std::vector<std::size_t>& rows, std::size_t n_rows,
                   const std::vector<std::size_t>& cols, std::size_t n_cols) {
  Matrix table(n_rows, n_cols);
  for (std::size_t i = 0; i < rows.size(); ++i) table(rows[i], cols[i]) += 1.0;
  return table;
}

double entropy(const std::vector<double>& counts, double total) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= (c / total) * std::log(c / total);
  }
  return h;
}

// Expected mutual information of two partitions with the given marginals
// under random permutation (hypergeometric cell counts).
double expected_mutual_information(const std::vector<double>& a,
                                   const std::vector<double>& b, double n) {
  const double lg_n = std::lgamma(n + 1.0);
  double emi = 0.0;
  for (double ai : a) {
    for (double bj : b) {
      const double lo = std::max(1.0, ai + bj - n);
      const double hi = std::min(ai, bj);
      const double fixed = std::lgamma(ai + 1.0) + std::lgamma(bj + 1.0) +
                           std::lgamma(n - ai + 1.0) + std::lgamma(n - bj + 1.0) -
                           lg_n;
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double log_p = fixed - std::lgamma(nij + 1.0) -
                             std::lgamma(ai - nij + 1.0) -
                             std::lgamma(bj - nij + 1.0) -
                             std::lgamma(n - ai - bj + nij + 1.0);
        emi += (nij / n) * std::log(n * nij / (ai * bj)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

}  // namespace

double ami(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("ami: label lists differ in length");
  }
  if (truth.empty()) throw EmptyInputError("ami needs at least one element");
  std::size_t n_pred = 0, n_true = 0;
  const auto p = dense_labels(predicted, &n_pred);
  const auto t = dense_labels(truth, &n_true);
  // Two single-cluster partitions agree perfectly.
  if (n_pred == 1 && n_true == 1) return 1.0;

  const Matrix table = contingency(t, n_true, p, n_pred);
  const double n = static_cast<double>(truth.size());
  std::vector<double> row_sums(n_true, 0.0), col_sums(n_pred, 0.0);
  for (std::size_t i = 0; i < n_true; ++i) {
    for (std::size_t j = 0; j < n_pred; ++j) {
      row_sums[i] += table(i, j);
      col_sums[j] += table(i, j);
    }
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < n_true; ++i) {
    for (std::size_t j = 0; j < n_pred; ++j) {
      const double nij = table(i, j);
      if (nij > 0.0) {
        mi += (nij / n) * std::log(n * nij / (row_sums[i] * col_sums[j]));
      }
    }
  }
  const double emi = expected_mutual_information(row_sums, col_sums, n);
  const double h_true = entropy(row_sums, n);
  const double h_pred = entropy(col_sums, n);
  double denominator = 0.5 * (h_true + h_pred) - emi;
  const double eps = std::numeric_limits<double>::epsilon();
  denominator = denominator < 0.0 ? std::min(denominator, -eps)
                                  : std::max(denominator, eps);
  return (mi - emi) / denominator;
}

std::vector<std::size_t> hungarian_min_cost(const Matrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) throw ShapeError("hungarian: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); way[] records augmenting paths.
  // Index 0 is a sentinel column, so everything is shifted by one.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    match_col[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const std::size_t row0 = match_col[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double cur = cost(row0 - 1, col - 1) - u[row0] - v[col];
        if (cur < minv[col]) {
          minv[col] = cur;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match_col[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (match_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match_col[col0] = match_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t col = 1; col <= n; ++col) {
    if (match_col[col] != 0) assignment[match_col[col] - 1] = col - 1;
  }
  return assignment;
}

double clustering_accuracy(const std::vector<int>& predicted,
                           const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("clustering_accuracy: label lists differ in length");
  }
  if (truth.empty()) throw EmptyInputError("clustering_accuracy needs elements");
  std::size_t n_pred = 0, n_true = 0;
  const auto p = dense_labels(predicted, &n_pred);
  const auto t = dense_labels(truth, &n_true);
  const std::size_t size = std::max(n_pred, n_true);
  const Matrix counts = contingency(p, size, t, size);
  // Maximize matched counts = minimize their negation.
  Matrix cost(size, size);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) cost(i, j) = -counts(i, j);
  }
  const auto match = hungarian_min_cost(cost);
  double correct = 0.0;
  for (std::size_t i = 0; i < size; ++i) correct += counts(i, match[i]);
  return correct / static_cast<double>(truth.size());
}

namespace {

struct KMeansRun {
  std::vector<int> labels;
  double objective = -std::numeric_limits<double>::infinity();
};

KMeansRun kmeans_once(const std::vector<Vector>& x, std::size_t k,
                      std::mt19937_64& rng, int max_iterations) {
  const std::size_t n = x.size();
  const std::size_t dim = x[0].size();
  std::vector<Vector> centers;
  centers.push_back(x[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> gap(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::max(0.0, 1.0 - dot(x[i], centers.back()));
      gap[i] = std::min(gap[i], d * d);
      total += gap[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick + 1 < n; ++pick) {
        r -= gap[pick];
        if (r <= 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    }
    centers.push_back(x[pick]);
  }

  KMeansRun run;
  run.labels.assign(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_sim = dot(x[i], centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double s = dot(x[i], centers[c]);
        if (s > best_sim) {
          best_sim = s;
          best = static_cast<int>(c);
        }
      }
      objective += best_sim;
      if (run.labels[i] != best) {
        run.labels[i] = best;
        changed = true;
      }
    }
    run.objective = objective;
    if (!changed) break;
    std::vector<Vector> sums(k, Vector(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) sums[run.labels[i]][d] += x[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (norm(sums[c]) > 0.0) centers[c] = normalize(sums[c]);
    }
  }
  return run;
}

}  // namespace

std::vector<int> spherical_kmeans(const std::vector<Vector>& unit_vectors,
                                  std::size_t k, std::uint64_t seed,
                                  int restarts, int max_iterations) {
  if (unit_vectors.size() < k || k == 0) {
    throw InsufficientSamplesError("k-means needs at least k points");
  }
  std::mt19937_64 rng(seed);
  KMeansRun best;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    KMeansRun run = kmeans_once(unit_vectors, k, rng, max_iterations);
    if (run.objective > best.objective) best = std::move(run);
  }
  return best.labels;
}

}  // namespace clusterns
