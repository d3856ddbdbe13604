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

#include "clusterns/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "clusterns/errors.hpp"
#include "clusterns/text_io.hpp"

namespace clusterns {

namespace {

// Salts for the per-purpose seed streams derived from TrainConfig::seed.
enum SeedStream : std::uint64_t {
  kEncoderInit = 1,
  kShuffle = 2,
  kDropout = 3,
  kCentroidInit = 4,
  kRandomNegatives = 5,
};

Vector linear_map(const Matrix& weight, const Vector& bias, const Vector& input) {
  Vector out = bias;
  out.resize(weight.cols(), 0.0);
  for (std::size_t r = 0; r < weight.rows(); ++r) {
    const double x = input[r];
    if (x == 0.0) continue;
    const auto row = weight.row(r);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += x * row[c];
  }
  return out;
}

Vector dropout(const Vector& input, double rate, std::mt19937_64& rng) {
  if (rate == 0.0) return input;
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Vector out(input.size());
  for (std::size_t k = 0; k < input.size(); ++k) {
    out[k] = keep(rng) ? input[k] * scale : 0.0;
  }
  return out;
}

void check_input_dim(const Encoder& encoder, const std::vector<Vector>& features) {
  for (const Vector& f : features) {
    if (f.size() != encoder.input_dim()) {
      throw ShapeError("feature dimension " + std::to_string(f.size()) +
                       " does not match encoder input dimension " +
                       std::to_string(encoder.input_dim()));
    }
  }
}

void write_optional(std::ostream& out, const std::optional<double>& value) {
  out << ',';
  if (value) out << text::format_double(*value);
}

}  // namespace

Encoder Encoder::random(std::size_t input_dim, std::size_t output_dim,
                        double dropout_rate, std::uint64_t seed,
                        double bias_scale) {
  Encoder enc;
  enc.weight = Matrix(input_dim, output_dim);
  enc.bias.assign(output_dim, 0.0);
  enc.dropout_rate = dropout_rate;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(input_dim)));
  for (double& w : enc.weight.data()) w = normal(rng);
  if (bias_scale != 0.0) {
    std::normal_distribution<double> unit(0.0, 1.0);
    for (double& b : enc.bias) b = unit(rng);
    enc.bias = normalize(enc.bias);
    for (double& b : enc.bias) b *= bias_scale;
  }
  return enc;
}

EncodedBatch encode(const Encoder& encoder, const std::vector<Vector>& features,
                    std::uint64_t dropout_seed) {
  check_input_dim(encoder, features);
  std::mt19937_64 rng(dropout_seed);
  std::vector<Vector> anchor_inputs, positive_inputs, anchors, positives;
  for (const Vector& f : features) {
    anchor_inputs.push_back(dropout(f, encoder.dropout_rate, rng));
    positive_inputs.push_back(dropout(f, encoder.dropout_rate, rng));
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    anchors.push_back(linear_map(encoder.weight, encoder.bias, anchor_inputs[i]));
    positives.push_back(linear_map(encoder.weight, encoder.bias, positive_inputs[i]));
  }
  return EncodedBatch{EmbeddingBatch::from_raw(std::move(anchors), std::move(positives)),
                      std::move(anchor_inputs), std::move(positive_inputs)};
}

std::vector<Vector> embed(const Encoder& encoder, const std::vector<Vector>& features) {
  check_input_dim(encoder, features);
  std::vector<Vector> out;
  out.reserve(features.size());
  for (const Vector& f : features) out.push_back(normalize(linear_map(encoder.weight, encoder.bias, f)));
  return out;
}

EncoderGradient encoder_gradient(const EncodedBatch& encoded,
                                 const LossBreakdown& loss) {
  const std::size_t in = encoded.anchor_inputs.empty() ? 0 : encoded.anchor_inputs[0].size();
  const std::size_t out = encoded.embeddings.dim();
  EncoderGradient grad{Matrix(in, out), Vector(out, 0.0)};
  auto accumulate = [&](const std::vector<Vector>& inputs,
                        const std::vector<Vector>& grads) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (std::size_t c = 0; c < out; ++c) grad.bias[c] += grads[i][c];
      for (std::size_t r = 0; r < in; ++r) {
        const double x = inputs[i][r];
        if (x == 0.0) continue;
        auto row = grad.weight.row(r);
        for (std::size_t c = 0; c < out; ++c) row[c] += x * grads[i][c];
      }
    }
  };
  accumulate(encoded.anchor_inputs, loss.grad_anchors);
  accumulate(encoded.positive_inputs, loss.grad_positives);
  return grad;
}

Encoder sgd_step(const Encoder& encoder, const EncoderGradient& grad,
                 double learning_rate, long step) {
  if (grad.bias.size() != encoder.bias.size()) {
    throw ShapeError("bias gradient does not match encoder bias");
  }
  if (!all_finite(grad.bias)) throw DivergenceError(step, "non-finite gradient");
  Encoder next = sgd_step(encoder, grad.weight, learning_rate, step);
  for (std::size_t k = 0; k < next.bias.size(); ++k) {
    next.bias[k] -= learning_rate * grad.bias[k];
  }
  if (!all_finite(next.bias)) throw DivergenceError(step, "update produced non-finite bias");
  return next;
}

Encoder sgd_step(const Encoder& encoder, const Matrix& grad, double learning_rate,
                 long step) {
  if (grad.rows() != encoder.weight.rows() || grad.cols() != encoder.weight.cols()) {
    throw ShapeError("gradient shape does not match encoder weight");
  }
  if (!all_finite(grad.data())) throw DivergenceError(step, "non-finite gradient");
  Encoder next = encoder;
  auto& w = next.weight.data();
  const auto& g = grad.data();
  for (std::size_t k = 0; k < w.size(); ++k) w[k] -= learning_rate * g[k];
  if (!all_finite(w)) throw DivergenceError(step, "update produced non-finite weights");
  return next;
}

void TrainConfig::validate(const std::string& prefix) const {
  if (steps < 1) throw ConfigError("must be at least 1", prefix + ".steps");
  if (batch_size < 2) throw ConfigError("must be at least 2", prefix + ".batch_size");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("must be positive", prefix + ".learning_rate");
  }
  if (output_dim < 2) throw ConfigError("must be at least 2", prefix + ".output_dim");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("must lie in [0, 1)", prefix + ".dropout_rate");
  }
  if (!(init_bias_scale >= 0.0) || !std::isfinite(init_bias_scale)) {
    throw ConfigError("must be non-negative", prefix + ".init_bias_scale");
  }
  if (telemetry_every < 1) {
    throw ConfigError("must be at least 1", prefix + ".telemetry_every");
  }
  cluster.validate(prefix + ".cluster");
  loss.validate(prefix + ".loss");
  if (clustering_enabled() && cluster.init_mode == InitMode::kLocal &&
      cluster.k > batch_size) {
    throw ConfigError("cannot exceed batch_size for local initialization",
                      prefix + ".cluster.k");
  }
}

const char* const kTelemetryHeader =
    "step,mean_pos_sim,mean_inbatch_neg_sim,mean_hard_neg_sim,"
    "mean_sample_centroid_sim,mean_inter_centroid_sim,mean_false_neg_sim,"
    "false_negative_rate,l_cl,l_bml,total";

void write_telemetry_header(std::ostream& out) { out << kTelemetryHeader << '\n'; }

void write_telemetry_row(std::ostream& out, const TelemetryRow& row) {
  out << row.step << ',' << text::format_double(row.mean_pos_sim) << ','
      << text::format_double(row.mean_inbatch_neg_sim);
  write_optional(out, row.mean_hard_neg_sim);
  write_optional(out, row.mean_sample_centroid_sim);
  write_optional(out, row.mean_inter_centroid_sim);
  write_optional(out, row.mean_false_neg_sim);
  write_optional(out, row.false_negative_rate);
  out << ',' << text::format_double(row.l_cl) << ',' << text::format_double(row.l_bml)
      << ',' << text::format_double(row.total) << '\n';
}

TelemetryRow measure_batch(const EmbeddingBatch& batch,
                           const CentroidSet* centroids,
                           const NegativeAnnotation* annotation) {
  const std::size_t n = batch.size();
  const auto& a = batch.anchors();
  const auto& p = batch.positives();
  TelemetryRow row;
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double s = dot(a[i], p[j]);
      if (i == j) pos += s;
      else neg += s;
    }
  }
  row.mean_pos_sim = pos / static_cast<double>(n);
  row.mean_inbatch_neg_sim = neg / static_cast<double>(n * (n - 1));
  if (centroids == nullptr || annotation == nullptr) return row;

  double hard = 0.0, nearest = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    hard += dot(a[i], annotation->hard_negatives[i]);
    nearest += dot(a[i], (*centroids)[annotation->nearest_centroid_index[i]]);
  }
  row.mean_hard_neg_sim = hard / static_cast<double>(n);
  row.mean_sample_centroid_sim = nearest / static_cast<double>(n);

  const std::size_t k = centroids->k();
  double inter = 0.0;
  for (std::size_t x = 0; x < k; ++x) {
    for (std::size_t y = x + 1; y < k; ++y) inter += dot((*centroids)[x], (*centroids)[y]);
  }
  row.mean_inter_centroid_sim = inter / (0.5 * static_cast<double>(k * (k - 1)));

  const PairMask& mask = annotation->false_negative_mask;
  double fn_sum = 0.0;
  std::size_t fn_pairs = 0, with_fn = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask(i, j)) continue;
      fn_sum += dot(a[i], a[j]);
      ++fn_pairs;
      any = true;
    }
    with_fn += any ? 1 : 0;
  }
  if (fn_pairs > 0) row.mean_false_neg_sim = fn_sum / static_cast<double>(fn_pairs);
  row.false_negative_rate = static_cast<double>(with_fn) / static_cast<double>(n);
  return row;
}

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const Encoder& enc = checkpoint.encoder;
  out << "clusterns-checkpoint v1 step=" << checkpoint.step
      << " input_dim=" << enc.input_dim() << " output_dim=" << enc.output_dim()
      << " dropout=" << text::format_double(enc.dropout_rate) << '\n';
  for (std::size_t r = 0; r < enc.input_dim(); ++r) {
    for (std::size_t c = 0; c < enc.output_dim(); ++c) {
      if (c) out << '\t';
      out << text::format_double(enc.weight(r, c));
    }
    out << '\n';
  }
  for (std::size_t c = 0; c < enc.output_dim(); ++c) {
    if (c) out << '\t';
    out << text::format_double(enc.bias[c]);
  }
  out << '\n';
  write_centroids(out, checkpoint.centroids);
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInputError("empty checkpoint");
  if (line.rfind("clusterns-checkpoint v1", 0) != 0) {
    throw ParseError(1, "expected 'clusterns-checkpoint v1' header");
  }
  auto int_field = [&](std::string_view key) {
    const auto f = text::header_field(line, key);
    const auto v = f ? text::parse_int(*f) : std::nullopt;
    if (!v || *v < 0) throw ParseError(1, "missing or invalid " + std::string(key));
    return *v;
  };
  Checkpoint ck;
  ck.step = static_cast<long>(int_field("step"));
  const auto in_dim = static_cast<std::size_t>(int_field("input_dim"));
  const auto out_dim = static_cast<std::size_t>(int_field("output_dim"));
  const auto rate_field = text::header_field(line, "dropout");
  const auto rate = rate_field ? text::parse_double(*rate_field) : std::nullopt;
  if (!rate) throw ParseError(1, "missing or invalid dropout");
  ck.encoder.weight = Matrix(in_dim, out_dim);
  ck.encoder.dropout_rate = *rate;
  for (std::size_t r = 0; r < in_dim; ++r) {
    const std::size_t line_no = r + 2;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing weight row");
    const auto fields = text::split(line, '\t');
    if (fields.size() != out_dim) throw ParseError(line_no, "wrong weight row width");
    for (std::size_t c = 0; c < out_dim; ++c) {
      const auto v = text::parse_double(fields[c]);
      if (!v) throw ParseError(line_no, "non-numeric weight");
      ck.encoder.weight(r, c) = *v;
    }
  }
  {
    const std::size_t line_no = in_dim + 2;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing bias row");
    const auto fields = text::split(line, '\t');
    if (fields.size() != out_dim) throw ParseError(line_no, "wrong bias row width");
    ck.encoder.bias.resize(out_dim);
    for (std::size_t c = 0; c < out_dim; ++c) {
      const auto v = text::parse_double(fields[c]);
      if (!v) throw ParseError(line_no, "non-numeric bias");
      ck.encoder.bias[c] = *v;
    }
  }
  ck.centroids = read_centroids(in);
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, checkpoint);
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

std::vector<std::size_t> batch_indices(std::size_t dataset_size,
                                       std::size_t batch_size,
                                       std::uint64_t seed, long step) {
  const std::size_t per_epoch = dataset_size / batch_size;
  if (per_epoch == 0) {
    throw ConfigError("dataset smaller than batch size", "train.batch_size");
  }
  const auto offset = static_cast<std::size_t>(step - 1);
  const std::size_t epoch = offset / per_epoch;
  const std::size_t slot = offset % per_epoch;
  std::vector<std::size_t> order(dataset_size);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, kShuffle, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return {order.begin() + static_cast<std::ptrdiff_t>(slot * batch_size),
          order.begin() + static_cast<std::ptrdiff_t>((slot + 1) * batch_size)};
}

TrainResult train(const LabeledDataset& dataset, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  if (dataset.size() < config.batch_size) {
    throw ConfigError("dataset has fewer samples than batch_size", "train.batch_size");
  }
  TrainResult result;
  long first_step = 1;
  if (options.resume) {
    result.encoder = options.resume->encoder;
    result.centroids = options.resume->centroids;
    first_step = options.resume->step + 1;
  } else {
    result.encoder = Encoder::random(dataset.dim, config.output_dim,
                                     config.dropout_rate,
                                     mix_seed(config.seed, kEncoderInit),
                                     config.init_bias_scale);
  }
  if (result.encoder.input_dim() != dataset.dim) {
    throw ShapeError("encoder input dimension does not match dataset");
  }

  for (long t = first_step; t <= config.steps; ++t) {
    const auto indices = batch_indices(dataset.size(), config.batch_size, config.seed, t);
    std::vector<Vector> features;
    features.reserve(indices.size());
    for (std::size_t idx : indices) features.push_back(dataset.features[idx]);
    const EncodedBatch encoded = [&] {
      try {
        return encode(result.encoder, features, mix_seed(config.seed, kDropout, t));
      } catch (const NormalizationError& e) {
        throw DivergenceError(t, std::string("encoder output degenerated: ") + e.what());
      }
    }();
    const EmbeddingBatch& batch = encoded.embeddings;

    std::optional<NegativeAnnotation> annotation;
    CentroidSet& centroids = result.centroids;
    if (config.clustering_enabled()) {
      if (!centroids.initialized()) {
        if (should_initialize(batch, config.cluster, t)) {
          const std::uint64_t init_seed = mix_seed(config.seed, kCentroidInit, t);
          centroids = config.cluster.init_mode == InitMode::kGlobal
                          ? initialize_centroids(embed(result.encoder, dataset.features),
                                                 config.cluster.k, init_seed,
                                                 config.cluster.seeding)
                          : initialize_centroids(batch, config.cluster.k, init_seed,
                                                 config.cluster.seeding);
          centroids.set_step_initialized_at(t);
        }
      } else if (t > centroids.step_initialized_at()) {
        const ClusterAssignment before = assign(batch, centroids);
        centroids = momentum_update(centroids, before, batch, config.cluster.gamma);
        const ClusterAssignment after = assign(batch, centroids);
        annotation = annotate(batch, centroids, after, config.loss.negative_mode,
                              mix_seed(config.seed, kRandomNegatives, t));
      }
    }

    LossConfig effective = config.loss;
    if (!annotation) {
      effective.use_hard_negatives = false;
      effective.use_bml = false;
    }
    const LossBreakdown loss =
        total_loss(batch, annotation ? &*annotation : nullptr, effective);
    if (!std::isfinite(loss.total)) throw DivergenceError(t, "non-finite loss");

    if (t % config.telemetry_every == 0 || t == config.steps) {
      TelemetryRow row = measure_batch(batch, annotation ? &centroids : nullptr,
                                       annotation ? &*annotation : nullptr);
      row.step = t;
      row.l_cl = loss.l_cl;
      row.l_bml = loss.l_bml;
      row.total = loss.total;
      if (options.on_telemetry) options.on_telemetry(row);
      result.telemetry.push_back(row);
    }

    result.encoder = sgd_step(result.encoder, encoder_gradient(encoded, loss),
                              config.learning_rate, t);
    result.steps_completed = t;
    if (t == config.steps) {
      result.last_annotation = std::move(annotation);
      result.last_batch = batch;
      result.last_batch_indices = indices;
    }
  }
  return result;
}

}  // namespace clusterns
