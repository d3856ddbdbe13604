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

#ifndef CLUSTERNS_TRAINING_HPP_
#define CLUSTERNS_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clusterns/clustering.hpp"
#include "clusterns/data_synth.hpp"
#include "clusterns/embedding.hpp"
#include "clusterns/losses.hpp"
#include "clusterns/negatives.hpp"

namespace clusterns {

// Affine toy encoder: embedding = weight^T * dropout(features) + bias.
// A large shared bias makes every embedding point the same way, which is how
// the toy reproduces the high initial similarity of pretrained encoders.
struct Encoder {
  Matrix weight;  // input_dim x output_dim
  Vector bias;    // output_dim
  double dropout_rate = 0.0;

  std::size_t input_dim() const { return weight.rows(); }
  std::size_t output_dim() const { return weight.cols(); }

  // Gaussian weights with standard deviation 1/sqrt(input_dim); the bias is
  // a random direction of length `bias_scale` (zero by default).
  static Encoder random(std::size_t input_dim, std::size_t output_dim,
                        double dropout_rate, std::uint64_t seed,
                        double bias_scale = 0.0);
};

struct EncoderGradient {
  Matrix weight;
  Vector bias;
};

// Two dropout views of a mini-batch, plus the masked inputs that produced
// them (needed to backpropagate into the weights).
struct EncodedBatch {
  EmbeddingBatch embeddings;
  std::vector<Vector> anchor_inputs;
  std::vector<Vector> positive_inputs;
};

// Anchors and positives use independent inverted-dropout masks derived from
// `dropout_seed`.
EncodedBatch encode(const Encoder& encoder, const std::vector<Vector>& features,
                    std::uint64_t dropout_seed);

// Deterministic unit-norm embeddings without dropout.
std::vector<Vector> embed(const Encoder& encoder, const std::vector<Vector>& features);

// d loss / d (weight, bias) by the chain rule through encode().
EncoderGradient encoder_gradient(const EncodedBatch& encoded,
                                 const LossBreakdown& loss);

// theta <- theta - learning_rate * grad. Throws DivergenceError (tagged with
// `step`) on a non-finite gradient and ShapeError on a shape mismatch.
Encoder sgd_step(const Encoder& encoder, const EncoderGradient& grad,
                 double learning_rate, long step = 0);
// Weight-only update; the bias is left unchanged.
Encoder sgd_step(const Encoder& encoder, const Matrix& grad_weight,
                 double learning_rate, long step = 0);

struct TrainConfig {
  long steps = 600;
  std::size_t batch_size = 64;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
  std::size_t output_dim = 8;
  double dropout_rate = 0.1;
  double init_bias_scale = 0.0;
  long telemetry_every = 1;
  ClusterConfig cluster;
  LossConfig loss;

  void validate(const std::string& prefix = "train") const;

  // Clustering only runs when some loss component consumes it.
  bool clustering_enabled() const {
    return loss.use_hard_negatives || loss.use_bml;
  }
};

// One telemetry record. Centroid-derived fields are empty before the
// centroids exist (and when the mask holds no pairs, for the false-negative
// similarity).
struct TelemetryRow {
  long step = 0;
  double mean_pos_sim = 0.0;
  double mean_inbatch_neg_sim = 0.0;
  std::optional<double> mean_hard_neg_sim;
  std::optional<double> mean_sample_centroid_sim;
  std::optional<double> mean_inter_centroid_sim;
  std::optional<double> mean_false_neg_sim;
  std::optional<double> false_negative_rate;
  double l_cl = 0.0;
  double l_bml = 0.0;
  double total = 0.0;
};

extern const char* const kTelemetryHeader;

void write_telemetry_header(std::ostream& out);
void write_telemetry_row(std::ostream& out, const TelemetryRow& row);

// Similarity summaries for one annotated (or not yet annotated) batch.
TelemetryRow measure_batch(const EmbeddingBatch& batch,
                           const CentroidSet* centroids,
                           const NegativeAnnotation* annotation);

struct Checkpoint {
  Encoder encoder;
  CentroidSet centroids;
  long step = 0;  // last completed step
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

struct TrainOptions {
  // Continue from this state instead of a fresh encoder.
  std::optional<Checkpoint> resume;
  // Called for every telemetry row as it is produced.
  std::function<void(const TelemetryRow&)> on_telemetry;
};

struct TrainResult {
  Encoder encoder;
  CentroidSet centroids;
  std::vector<TelemetryRow> telemetry;
  long steps_completed = 0;
  // Annotation and batch of the final step, for end-of-run diagnostics.
  std::optional<NegativeAnnotation> last_annotation;
  std::optional<EmbeddingBatch> last_batch;
  std::vector<std::size_t> last_batch_indices;
};

// Training with in-batch clustering. Per step t: encode the mini-batch; if
// the centroids are not yet initialized and the trigger fires, seed them
// (that step still trains on plain InfoNCE); on later steps assign, apply the
// momentum update, re-assign against the updated centroids, annotate hard
// and false negatives, and train on the combined objective. One SGD step per
// iteration. Deterministic for a fixed config.
TrainResult train(const LabeledDataset& dataset, const TrainConfig& config,
                  const TrainOptions& options = {});

// Indices of the mini-batch used at 1-based `step`: seeded shuffles per
// epoch, without replacement, dropping the ragged tail.
std::vector<std::size_t> batch_indices(std::size_t dataset_size,
                                       std::size_t batch_size,
                                       std::uint64_t seed, long step);

}  // namespace clusterns

#endif  // CLUSTERNS_TRAINING_HPP_
