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

// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "clusterns/app.hpp"
#include "clusterns/clustering.hpp"
#include "clusterns/errors.hpp"
#include "clusterns/evaluation.hpp"
#include "clusterns/losses.hpp"
#include "clusterns/negatives.hpp"
#include "clusterns/training.hpp"
#include "test_support.hpp"

namespace clusterns {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

MixtureSpec standard_mixture(std::size_t classes = 4) {
  MixtureSpec s;
  s.num_classes = classes;
  s.dim = 16;
  s.samples_per_class = 64;
  s.intra_concentration = 0.1;
  return s;
}

// --- losses -----------------------------------------------------------------

Outcome gradient_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  struct Case {
    const char* name;
    bool hard, margin;
    double lambda;
  };
  const Case cases[] = {{"infonce", false, false, 0.0},
                        {"infonce_hard", true, false, 0.0},
                        {"bml", false, true, 1.0},
                        {"total", true, true, 0.1}};
  double worst = 0.0, largest_diff = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto batch = testing::random_batch(16, 8, rng, 0.8);
    const auto ann = testing::random_annotation(16, 8, 4, rng);
    for (const Case& c : cases) {
      LossConfig cfg;
      cfg.lambda_bml = c.lambda;
      cfg.use_hard_negatives = c.hard;
      cfg.use_bml = c.margin;
      const auto analytic = total_loss(batch, &ann, cfg);
      const auto numeric = finite_difference_gradient(batch, &ann, cfg, 1e-5);
      worst = std::max({worst, testing::max_relative_error(analytic.grad_anchors, numeric.anchors, 1e-7),
                        testing::max_relative_error(analytic.grad_positives, numeric.positives, 1e-7)});
      for (std::size_t i = 0; i < 16; ++i) {
        for (std::size_t k = 0; k < 8; ++k) {
          largest_diff = std::max({largest_diff, std::abs(analytic.grad_anchors[i][k] - numeric.anchors[i][k]),
                                   std::abs(analytic.grad_positives[i][k] - numeric.positives[i][k])});
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-4 && elapsed < 5.0,
          fmt("max relative error %.2e (limit 1e-4)", worst) +
              fmt(", max absolute difference %.1e", largest_diff) + fmt(", %.2f s (limit 5 s)", elapsed)};
}

Outcome degeneration_identity() {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto batch = testing::random_batch(16, 8, rng);
    const auto ann = testing::random_annotation(16, 8, 4, rng);
    LossConfig cfg;
    cfg.mu = 0.0;
    worst = std::max(worst, std::abs(infonce_hard(batch, ann, cfg).l_cl - infonce(batch, cfg).l_cl));
  }
  return {worst <= 1e-12, fmt("max |difference| %.2e over 100 batches (limit 1e-12)", worst)};
}

Outcome margin_interval() {
  int grids = 0, violations = 0;
  for (double alpha : {0.0, 0.05, 0.1, 0.15, 0.2, 0.25}) {
    for (double beta : {0.3, 0.4, 0.5, 0.6}) {
      if (!(beta > alpha)) continue;
      ++grids;
      const long lo = std::lround(-beta * 1000), hi = std::lround(-alpha * 1000);
      for (long k = -2000; k <= 2000; ++k) {
        const double m = bml_margin(static_cast<double>(k) / 1000.0, alpha, beta);
        const bool inside = k >= lo && k <= hi;
        if (inside ? m != 0.0 : !(m > 0.0)) ++violations;
      }
    }
  }
  return {violations == 0, std::to_string(grids) + " (alpha, beta) pairs, " +
                               std::to_string(violations) + " grid violations on [-2, 2]"};
}

// --- clustering -------------------------------------------------------------

Outcome clustering_oracle() {
  std::mt19937_64 rng(1004);
  std::uniform_int_distribution<int> coord(-2, 2);
  int batches = 0, mismatches = 0;
  for (std::size_t n = 1; n <= 64; n += 3) {
    for (std::size_t k = 1; k <= 16; ++k) {
      auto draw = [&](std::size_t count) {
        std::vector<Vector> out;
        while (out.size() < count) {
          Vector v(3);
          for (double& x : v) x = coord(rng);
          if (norm(v) > 0) out.push_back(normalize(v));
        }
        return out;
      };
      const auto x = draw(n);
      const auto c = draw(k);
      const auto got = assign(x, CentroidSet::from_unit_rows(c, 1));
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
          if (dot(x[i], c[j]) > dot(x[i], c[best])) best = j;
        }
        mismatches += got.assigned_cluster[i] != best;
      }
      ++batches;
    }
  }
  // Momentum fixtures.
  double err = 0.0;
  {
    const CentroidSet c({{1, 0, 0}, {-1, 0, 0}});
    const std::vector<Vector> x = {{0, 1, 0}, {0, 0, 1}};
    const auto u = momentum_update(c, ClusterAssignment{{0, 0}, {{0, 1}, {}}, {2, 0}}, x, 0.5);
    const double r6 = std::sqrt(6.0);
    err = std::max({err, std::abs(u[0][0] - 2 / r6), std::abs(u[0][1] - 1 / r6),
                    std::abs(u[0][2] - 1 / r6)});
  }
  {
    const CentroidSet c({{0, 0, 1}, {0, 0, -1}});
    const std::vector<Vector> x = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const auto u = momentum_update(c, ClusterAssignment{{0, 0, 0}, {{0, 1, 2}, {}}, {3, 0}}, x, 0.25);
    const double r = std::sqrt(102.0);
    err = std::max({err, std::abs(u[0][0] - 1 / r), std::abs(u[0][1] - 1 / r),
                    std::abs(u[0][2] - 10 / r)});
  }
  return {mismatches == 0 && err <= 1e-12,
          std::to_string(batches) + " batches, " + std::to_string(mismatches) +
              " assignment mismatches; momentum fixture error " + fmt("%.1e (limit 1e-12)", err)};
}

Outcome clustering_quality() {
  int runs = 0, passed = 0;
  double worst = 1.0;
  for (double gamma : {5e-4, 1e-3}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      MixtureSpec spec = standard_mixture();
      spec.seed = seed;
      const auto data = generate(spec);
      std::mt19937_64 rng(seed);
      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      auto batch = [&](int step) {
        std::vector<Vector> out;
        for (int i = 0; i < 64; ++i) out.push_back(data.features[order[(step * 64 + i) % order.size()]]);
        return out;
      };
      CentroidSet c = initialize_centroids(batch(0), 4, seed);
      for (int step = 1; step <= 50; ++step) {
        const auto x = batch(step);
        c = momentum_update(c, assign(x, c), x, gamma);
      }
      const auto a = assign(data.features, c);
      const double score = ami(std::vector<int>(a.assigned_cluster.begin(), a.assigned_cluster.end()),
                               data.labels);
      worst = std::min(worst, score);
      ++runs;
      passed += score >= 0.9;
    }
  }
  return {passed == runs, std::to_string(passed) + "/" + std::to_string(runs) +
                              " runs reach AMI >= 0.9 within 50 steps; worst " + fmt("%.4f", worst)};
}

// --- metrics ----------------------------------------------------------------

std::vector<double> rank_oracle(const std::vector<double>& v) {
  std::vector<double> r;
  for (double x : v) {
    const auto less = std::count_if(v.begin(), v.end(), [&](double y) { return y < x; });
    const auto equal = std::count(v.begin(), v.end(), x);
    r.push_back(1.0 + static_cast<double>(less) + 0.5 * static_cast<double>(equal - 1));
  }
  return r;
}

double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Outcome metric_oracles() {
  std::mt19937_64 rng(1006);
  int failures = 0;
  for (int k = 2; k <= 5; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> p(30), t(30);
      for (auto& x : p) x = pick(rng);
      for (auto& x : t) x = pick(rng);
      for (int c = 0; c < k; ++c) p[c] = t[c + k] = c;
      std::vector<int> perm(k);
      std::iota(perm.begin(), perm.end(), 0);
      int best = 0;
      do {
        int hits = 0;
        for (std::size_t i = 0; i < t.size(); ++i) hits += perm[p[i]] == t[i];
        best = std::max(best, hits);
      } while (std::next_permutation(perm.begin(), perm.end()));
      failures += clustering_accuracy(p, t) != static_cast<double>(best) / t.size();

      std::vector<int> shuffled(k);
      std::iota(shuffled.begin(), shuffled.end(), 100);
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      std::vector<int> relabeled;
      for (int x : t) relabeled.push_back(shuffled[x]);
      failures += std::abs(ami(relabeled, t) - 1.0) > 1e-12;
    }
  }
  double uniformity_err = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = testing::random_units(20, 5, rng);
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = i + 1; j < x.size(); ++j) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < 5; ++c) d2 += (x[i][c] - x[j][c]) * (x[i][c] - x[j][c]);
        sum += std::exp(-2.0 * d2);
        ++count;
      }
    }
    uniformity_err = std::max(uniformity_err, std::abs(uniformity(x) - std::log(sum / count)));
  }
  double spearman_err = 0.0;
  std::uniform_int_distribution<int> coarse(0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(25), b(25);
    for (auto& x : a) x = coarse(rng);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = a[i] + coarse(rng);
    spearman_err = std::max(spearman_err,
                            std::abs(spearman(a, b) - pearson_oracle(rank_oracle(a), rank_oracle(b))));
  }
  const bool ok = failures == 0 && uniformity_err <= 1e-12 && spearman_err <= 1e-12;
  return {ok, std::to_string(failures) + " accuracy/AMI mismatches; uniformity error " +
                  fmt("%.1e", uniformity_err) + ", spearman error " + fmt("%.1e", spearman_err)};
}

// --- training dynamics ------------------------------------------------------

Outcome similarity_dynamics() {
  const auto start = Clock::now();
  const auto data = generate(standard_mixture());
  const auto result = train(data, TrainConfig());
  int post = 0, hard_above_inbatch = 0, pos_above_hard = 0;
  for (const auto& row : result.telemetry) {
    if (!row.mean_hard_neg_sim) continue;
    ++post;
    hard_above_inbatch += *row.mean_hard_neg_sim > row.mean_inbatch_neg_sim;
    pos_above_hard += row.mean_pos_sim > *row.mean_hard_neg_sim;
  }
  const double elapsed = seconds_since(start);
  const double f1 = post ? static_cast<double>(hard_above_inbatch) / post : 0.0;
  const double f2 = post ? static_cast<double>(pos_above_hard) / post : 0.0;
  return {post > 0 && f1 >= 0.9 && f2 >= 0.95 && elapsed < 60.0,
          fmt("hard > in-batch on %.1f%% of ", 100 * f1) + std::to_string(post) +
              " rows (need 90%)" + fmt(", positive > hard on %.1f%% (need 95%)", 100 * f2) +
              fmt(", %.2f s", elapsed)};
}

Outcome similarity_ordering() {
  const auto data = generate(standard_mixture());
  const TrainConfig cfg;
  const auto result = train(data, cfg);
  std::vector<Vector> features;
  for (auto i : result.last_batch_indices) features.push_back(data.features[i]);
  const auto encoded = encode(result.encoder, features, 0xacce55);
  const auto& batch = encoded.embeddings;
  const auto ann = annotate(batch, result.centroids, assign(batch, result.centroids));
  const auto row = measure_batch(batch, &result.centroids, &ann);
  if (!row.mean_hard_neg_sim || !row.mean_false_neg_sim) {
    return {false, "final batch has no false-negative pairs"};
  }
  const double hard = *row.mean_hard_neg_sim, fn = *row.mean_false_neg_sim, pos = row.mean_pos_sim;
  return {hard <= fn + 1e-6 && fn <= pos + 1e-6,
          fmt("hard %.4f", hard) + fmt(" <= false %.4f", fn) + fmt(" <= positive %.4f", pos)};
}

Outcome false_negative_hypothesis() {
  const auto data = generate(standard_mixture(8));
  double worst = 1.0, sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    const auto result = train(data, cfg);
    const auto mask_of = [&] {
      const auto e = embed(result.encoder, data.features);
      const auto a = assign(e, result.centroids);
      PairMask m(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.size(); ++j) {
          if (i != j && a.assigned_cluster[i] == a.assigned_cluster[j]) m.set(i, j, true);
        }
      }
      return m;
    };
    const double p = false_negative_precision(mask_of(), data.labels);
    worst = std::min(worst, p);
    sum += p;
  }
  return {worst >= 0.8, fmt("precision over 5 seeds: min %.3f", worst) +
                            fmt(", mean %.3f (need >= 0.8)", sum / 5)};
}

struct AblationRuns {
  std::vector<app::Metrics> metrics;  // every evaluated checkpoint
  double full_ami = 0.0;
  double baseline_ami = 0.0;
};

const AblationRuns& ablation_runs() {
  static const AblationRuns runs = [] {
    AblationRuns out;
    const auto data = generate(standard_mixture());
    const app::EvalConfig eval;
    const auto untrained = Encoder::random(data.dim, 8, 0.1, 77);
    out.metrics.push_back(app::evaluate(untrained, CentroidSet(), data, nullptr, eval));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      TrainConfig full;
      full.seed = seed;
      TrainConfig base = full;
      base.loss.mu = 0.0;
      base.loss.lambda_bml = 0.0;
      base.loss.use_hard_negatives = false;
      base.loss.use_bml = false;
      const auto rf = train(data, full);
      const auto rb = train(data, base);
      out.metrics.push_back(app::evaluate(rf.encoder, rf.centroids, data, nullptr, eval));
      out.full_ami += out.metrics.back().ami / 5.0;
      out.metrics.push_back(app::evaluate(rb.encoder, rb.centroids, data, nullptr, eval));
      out.baseline_ami += out.metrics.back().ami / 5.0;
    }
    return out;
  }();
  return runs;
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("clusterns_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_standard_config(const fs::path& dir) {
  const auto path = dir / "config.json";
  std::ofstream out(path);
  out << R"({"mixture": {"num_classes": 4, "dim": 16, "samples_per_class": 64}})";
  return path.string();
}

Outcome ablation_direction() {
  const auto& runs = ablation_runs();
  const bool direction = runs.full_ami >= runs.baseline_ami;

  const auto dir = scratch_dir("sigma");
  app::CommandArgs args;
  args.config_path = write_standard_config(dir);
  args.out_dir = dir / "sweep";
  args.sweep_kind = "sigma";
  args.seeds = {1};
  std::ostringstream err;
  const int code = app::cmd_sweep(args, err);
  std::ifstream report(args.out_dir / "sigma_report.csv");
  std::string line;
  std::vector<std::string> sigmas;
  std::getline(report, line);
  while (std::getline(report, line)) sigmas.push_back(line.substr(0, line.find(',')));
  const bool sweep_ok = code == app::kExitOk &&
                        sigmas == std::vector<std::string>{"0.2", "0.4", "0.6"};
  fs::remove_all(dir);
  return {direction && sweep_ok,
          fmt("mean AMI full %.4f", runs.full_ami) + fmt(" vs baseline %.4f", runs.baseline_ami) +
              "; sigma report rows " + std::to_string(sigmas.size()) + (sweep_ok ? " (ok)" : " (bad)")};
}

Outcome determinism() {
  const auto dir = scratch_dir("determinism");
  const auto config = write_standard_config(dir);
  std::ostringstream err;
  std::string digests[2];
  for (int r = 0; r < 2; ++r) {
    app::CommandArgs args;
    args.config_path = config;
    args.out_dir = dir / ("run" + std::to_string(r));
    if (app::cmd_train(args, err) != app::kExitOk) {
      fs::remove_all(dir);
      return {false, "train failed: " + err.str()};
    }
    digests[r] = app::file_digest(args.out_dir / "telemetry.csv");
  }
  fs::remove_all(dir);
  return {digests[0] == digests[1], "telemetry sha256 " + digests[0].substr(0, 16) +
                                        (digests[0] == digests[1] ? " == " : " != ") +
                                        digests[1].substr(0, 16)};
}

Outcome metric_ranges() {
  const auto& runs = ablation_runs();
  int bad = 0;
  double bridge = 0.0;
  for (const auto& m : runs.metrics) {
    bad += !(m.uniformity <= 0.0) || !(m.alignment >= 0.0 && m.alignment <= 4.0);
    bridge = std::max(bridge, std::abs(m.alignment - (2.0 - 2.0 * m.mean_positive_cosine)));
  }
  return {bad == 0 && bridge <= 1e-9,
          std::to_string(runs.metrics.size()) + " checkpoints, " + std::to_string(bad) +
              " out of range; alignment identity error " + fmt("%.1e (limit 1e-9)", bridge)};
}

}  // namespace
}  // namespace clusterns

int main() {
  using namespace clusterns;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 gradient oracle", gradient_oracle},
      {"AC2 hard-negative weight zero equals InfoNCE", degeneration_identity},
      {"AC3 margin zero exactly inside the interval", margin_interval},
      {"AC4 assignment and momentum oracle", clustering_oracle},
      {"AC5 clustering quality", clustering_quality},
      {"AC6 metric oracles", metric_oracles},
      {"AC7 similarity dynamics", similarity_dynamics},
      {"AC8 hard <= false <= positive ordering", similarity_ordering},
      {"AC9 false-negative precision", false_negative_hypothesis},
      {"AC10 ablation direction and sigma report", ablation_direction},
      {"AC11 determinism", determinism},
      {"AC12 alignment and uniformity ranges", metric_ranges},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
