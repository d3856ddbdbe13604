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

#ifndef CLUSTERNS_APP_HPP_
#define CLUSTERNS_APP_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "clusterns/data_synth.hpp"
#include "clusterns/evaluation.hpp"
#include "clusterns/training.hpp"

namespace clusterns::app {

using Json = nlohmann::ordered_json;

extern const char* const kVersion;

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitIo = 4;

struct EvalConfig {
  std::uint64_t seed = 11;           // k-means seeding and dropout views
  int kmeans_restarts = 5;
  double positive_threshold = 4.0;   // gold score above which a pair is positive
};

// Everything a command needs; mirrors the JSON config file section by section.
struct RunConfig {
  std::optional<MixtureSpec> mixture;
  std::size_t num_pairs = 0;  // scored pairs written next to a generated dataset
  std::string dataset;        // dataset file; empty means "generate from mixture"
  TrainConfig train;
  EvalConfig eval;
};

// Parses a config document. Unknown keys, wrong types and missing required
// fields raise ConfigError carrying the dotted field path.
RunConfig parse_config(const Json& doc);
// Full snapshot with every default made explicit; parse_config(to_json(c))
// reproduces c.
Json to_json(const RunConfig& config);

// Applies "a.b.c=value" to the document. The value is read as JSON when it
// parses as such, otherwise as a string.
void apply_override(Json& doc, std::string_view assignment);

Json read_json_file(const std::filesystem::path& path);

// SHA-256 of a file's bytes as lowercase hex.
std::string file_digest(const std::filesystem::path& path);

// Writes `doc` to `path` through a temporary file and a rename.
void write_json_atomic(const std::filesystem::path& path, const Json& doc);

struct Metrics {
  std::size_t num_samples = 0;
  std::size_t num_classes = 0;
  double alignment = 0.0;
  double mean_positive_cosine = 0.0;
  double uniformity = 0.0;
  double ami = 0.0;
  double clustering_accuracy = 0.0;
  std::optional<double> false_negative_precision;  // needs centroids
  std::optional<double> spearman;                  // needs scored pairs
  std::optional<double> pair_alignment;            // needs positive scored pairs
};

// Metric battery for an encoder on a labeled dataset. Alignment uses two
// dropout views of every sample; uniformity, AMI and accuracy use the
// deterministic embeddings, clustered with spherical k-means into as many
// clusters as there are classes. False-negative precision counts same-cluster
// pairs under the given centroids over the whole dataset.
Metrics evaluate(const Encoder& encoder, const CentroidSet& centroids,
                 const LabeledDataset& dataset, const ScoredPairSet* pairs,
                 const EvalConfig& config);

// key=value lines; absent metrics read "not evaluated".
void write_report_text(std::ostream& out, const Metrics& metrics);
// Two-line CSV; absent metrics are empty cells.
void write_report_csv(std::ostream& out, const Metrics& metrics);

struct CommandArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir;
  std::vector<std::string> overrides;
  // train
  std::string resume;
  // eval
  std::string checkpoint;
  std::string dataset;
  std::string pairs;
  // sweep
  std::string sweep_kind = "all";  // ablation | sigma | all
  std::vector<std::uint64_t> seeds;
};

// Each command writes its artifacts and a manifest.json into out_dir and
// returns a process exit code; diagnostics go to `err`.
int cmd_generate(const CommandArgs& args, std::ostream& err);
int cmd_train(const CommandArgs& args, std::ostream& err);
int cmd_eval(const CommandArgs& args, std::ostream& err);
int cmd_sweep(const CommandArgs& args, std::ostream& err);

// One ablation variant: a named set of loss switches.
struct Variant {
  std::string name;
  bool use_hard_negatives;
  bool use_bml;
  NegativeMode mode;
};
const std::vector<Variant>& ablation_variants();
TrainConfig apply_variant(TrainConfig config, const Variant& variant);

// Command-line entry point.
int run(int argc, char** argv);

}  // namespace clusterns::app

#endif  // CLUSTERNS_APP_HPP_
