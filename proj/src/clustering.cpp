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

#include "clusterns/clustering.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "clusterns/errors.hpp"
#include "clusterns/text_io.hpp"

namespace clusterns {

std::string to_string(InitMode mode) {
  return mode == InitMode::kGlobal ? "global" : "local";
}

InitMode init_mode_from_string(const std::string& name) {
  if (name == "local") return InitMode::kLocal;
  if (name == "global") return InitMode::kGlobal;
  throw ConfigError("unknown init mode '" + name + "' (expected local|global)",
                    "init_mode");
}

std::string to_string(SeedingRule rule) {
  return rule == SeedingRule::kFarthestFromLast ? "farthest_from_last"
                                                : "farthest_from_selected";
}

SeedingRule seeding_rule_from_string(const std::string& name) {
  if (name == "farthest_from_last") return SeedingRule::kFarthestFromLast;
  if (name == "farthest_from_selected") return SeedingRule::kFarthestFromSelected;
  throw ConfigError("unknown seeding rule '" + name +
                        "' (expected farthest_from_last|farthest_from_selected)",
                    "seeding");
}

void ClusterConfig::validate(const std::string& prefix) const {
  if (k < 2) throw ConfigError("must be at least 2", prefix + ".k");
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("must lie in [0, 1]", prefix + ".gamma");
  }
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw ConfigError("must lie in (0, 1)", prefix + ".sigma");
  }
  if (warmup_cap < 1) throw ConfigError("must be at least 1", prefix + ".warmup_cap");
}

CentroidSet::CentroidSet(std::vector<Vector> centroids, long initialized_at)
    : centroids_(std::move(centroids)), step_initialized_at_(initialized_at) {
  for (Vector& c : centroids_) c = normalize(c);
}

CentroidSet CentroidSet::from_unit_rows(std::vector<Vector> rows,
                                        long initialized_at) {
  CentroidSet set;
  set.centroids_ = std::move(rows);
  set.step_initialized_at_ = initialized_at;
  return set;
}

bool should_initialize(const EmbeddingBatch& batch, const ClusterConfig& config,
                       long step) {
  if (step >= config.warmup_cap) return true;
  return mean_offdiagonal_similarity(batch.anchors()) <= config.sigma;
}

std::vector<std::size_t> select_initial_indices(
    const std::vector<Vector>& unit_anchors, std::size_t k, std::uint64_t seed,
    SeedingRule rule) {
  const std::size_t n = unit_anchors.size();
  if (n < k) {
    throw InsufficientSamplesError("need at least " + std::to_string(k) +
                                   " samples to seed centroids, got " +
                                   std::to_string(n));
  }
  std::vector<std::size_t> picked;
  if (k == 0) return picked;
  std::vector<bool> taken(n, false);
  std::mt19937_64 rng(seed);
  std::size_t last = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  picked.push_back(last);
  taken[last] = true;
  // closest[i]: similarity of anchor i to the centroid(s) that matter under
  // the rule (the last one, or the most similar chosen one).
  std::vector<double> closest(n, -std::numeric_limits<double>::infinity());
  while (picked.size() < k) {
    std::size_t best = n;
    double best_sim = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double sim = dot(unit_anchors[i], unit_anchors[last]);
      closest[i] = rule == SeedingRule::kFarthestFromLast
                       ? sim
                       : std::max(closest[i], sim);
      if (closest[i] < best_sim) {
        best_sim = closest[i];
        best = i;
      }
    }
    last = best;
    picked.push_back(last);
    taken[last] = true;
  }
  return picked;
}

CentroidSet initialize_centroids(const std::vector<Vector>& unit_anchors,
                                 std::size_t k, std::uint64_t seed,
                                 SeedingRule rule) {
  std::vector<Vector> centroids;
  for (std::size_t idx : select_initial_indices(unit_anchors, k, seed, rule)) {
    centroids.push_back(unit_anchors[idx]);
  }
  return CentroidSet(std::move(centroids));
}

CentroidSet initialize_centroids(const EmbeddingBatch& batch, std::size_t k,
                                 std::uint64_t seed, SeedingRule rule) {
  return initialize_centroids(batch.anchors(), k, seed, rule);
}

ClusterAssignment assign(const std::vector<Vector>& unit_samples,
                         const CentroidSet& centroids) {
  const std::size_t k = centroids.k();
  ClusterAssignment out;
  out.assigned_cluster.resize(unit_samples.size());
  out.cluster_members.resize(k);
  out.cluster_sizes.assign(k, 0);
  if (k == 0) return out;
  for (std::size_t i = 0; i < unit_samples.size(); ++i) {
    if (unit_samples[i].size() != centroids.dim()) {
      throw ShapeError("sample dimension does not match centroid dimension");
    }
    std::size_t best = 0;
    double best_sim = dot(unit_samples[i], centroids[0]);
    for (std::size_t j = 1; j < k; ++j) {
      const double sim = dot(unit_samples[i], centroids[j]);
      if (sim > best_sim) {
        best_sim = sim;
        best = j;
      }
    }
    out.assigned_cluster[i] = best;
    out.cluster_members[best].push_back(i);
    ++out.cluster_sizes[best];
  }
  return out;
}

ClusterAssignment assign(const EmbeddingBatch& batch,
                         const CentroidSet& centroids) {
  return assign(batch.anchors(), centroids);
}

CentroidSet momentum_update(const CentroidSet& centroids,
                            const ClusterAssignment& assignment,
                            const std::vector<Vector>& unit_samples,
                            double gamma) {
  if (gamma == 0.0) return centroids;
  std::vector<Vector> updated = centroids.centroids();
  const std::size_t dim = centroids.dim();
  for (std::size_t c = 0; c < updated.size(); ++c) {
    const auto& members = assignment.cluster_members[c];
    if (members.empty()) continue;
    Vector mean(dim, 0.0);
    for (std::size_t idx : members) {
      for (std::size_t d = 0; d < dim; ++d) mean[d] += unit_samples[idx][d];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (std::size_t d = 0; d < dim; ++d) {
      updated[c][d] = (1.0 - gamma) * updated[c][d] + gamma * (mean[d] * inv);
    }
    // A cluster whose mean exactly cancels the old centroid has no direction
    // left; keep the previous centroid in that case.
    if (norm(updated[c]) == 0.0) updated[c] = centroids[c];
  }
  return CentroidSet(std::move(updated), centroids.step_initialized_at());
}

CentroidSet momentum_update(const CentroidSet& centroids,
                            const ClusterAssignment& assignment,
                            const EmbeddingBatch& batch, double gamma) {
  return momentum_update(centroids, assignment, batch.anchors(), gamma);
}

double false_negative_rate(const ClusterAssignment& assignment) {
  const std::size_t n = assignment.assigned_cluster.size();
  if (n == 0) return 0.0;
  std::size_t in_shared = 0;
  for (std::size_t size : assignment.cluster_sizes) {
    if (size >= 2) in_shared += size;
  }
  return static_cast<double>(in_shared) / static_cast<double>(n);
}

void write_centroids(std::ostream& out, const CentroidSet& centroids) {
  out << "clusterns-centroids v1 k=" << centroids.k()
      << " dim=" << centroids.dim()
      << " step=" << centroids.step_initialized_at() << '\n';
  for (const Vector& c : centroids.centroids()) {
    for (std::size_t d = 0; d < c.size(); ++d) {
      if (d) out << '\t';
      out << text::format_double(c[d]);
    }
    out << '\n';
  }
}

CentroidSet read_centroids(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInputError("empty centroid snapshot");
  if (line.rfind("clusterns-centroids v1", 0) != 0) {
    throw ParseError(1, "expected 'clusterns-centroids v1' header");
  }
  const auto k_field = text::header_field(line, "k");
  const auto dim_field = text::header_field(line, "dim");
  const auto step_field = text::header_field(line, "step");
  auto int_or = [](std::optional<std::string_view> field, long long fallback) {
    return field ? text::parse_int(*field).value_or(-1) : fallback;
  };
  const long long k = int_or(k_field, -1);
  const long long dim = int_or(dim_field, -1);
  const long long step = int_or(step_field, 0);
  if (k < 0 || dim < 0 || step < 0) throw ParseError(1, "malformed centroid header");
  std::vector<Vector> rows;
  for (long long r = 0; r < k; ++r) {
    const std::size_t line_no = static_cast<std::size_t>(r) + 2;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing centroid row");
    const auto fields = text::split(line, '\t');
    if (static_cast<long long>(fields.size()) != dim) {
      throw ParseError(line_no, "expected " + std::to_string(dim) + " coordinates");
    }
    Vector row;
    for (auto f : fields) {
      const auto v = text::parse_double(f);
      if (!v) throw ParseError(line_no, "non-numeric coordinate '" + std::string(f) + "'");
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  // Stored rows are already unit norm; renormalizing could perturb the last
  // bit and break exact resumption.
  return CentroidSet::from_unit_rows(std::move(rows), static_cast<long>(step));
}

}  // namespace clusterns
