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

#include <ostream>

#include "clusterns/app.hpp"
#include "clusterns/errors.hpp"
#include "clusterns/text_io.hpp"

namespace clusterns::app {
namespace {

constexpr std::uint64_t kViewSalt = 0x5eed0f;

void put_text(std::ostream& out, const char* key, const std::optional<double>& v) {
  out << key << '=' << (v ? text::format_double(*v) : std::string("not evaluated")) << '\n';
}

}  // namespace

Metrics evaluate(const Encoder& encoder, const CentroidSet& centroids,
                 const LabeledDataset& dataset, const ScoredPairSet* pairs,
                 const EvalConfig& config) {
  if (dataset.dim != encoder.input_dim()) {
    throw ShapeError("dataset dim " + std::to_string(dataset.dim) +
                     " does not match encoder input dim " +
                     std::to_string(encoder.input_dim()));
  }
  Metrics m;
  m.num_samples = dataset.size();
  m.num_classes = dataset.num_classes();

  const auto views = encode(encoder, dataset.features, mix_seed(config.seed, kViewSalt));
  const auto& anchors = views.embeddings.anchors();
  const auto& positives = views.embeddings.positives();
  std::vector<std::pair<Vector, Vector>> view_pairs;
  view_pairs.reserve(anchors.size());
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    view_pairs.emplace_back(anchors[i], positives[i]);
    cos_sum += dot(anchors[i], positives[i]);
  }
  m.alignment = alignment(view_pairs);
  m.mean_positive_cosine = cos_sum / static_cast<double>(anchors.size());

  const auto embedded = embed(encoder, dataset.features);
  m.uniformity = uniformity(embedded);
  const auto predicted =
      spherical_kmeans(embedded, m.num_classes, config.seed, config.kmeans_restarts);
  m.ami = ami(predicted, dataset.labels);
  m.clustering_accuracy = clustering_accuracy(predicted, dataset.labels);

  if (centroids.initialized() && centroids.dim() == encoder.output_dim()) {
    const auto assignment = assign(embedded, centroids);
    PairMask mask(embedded.size());
    for (std::size_t i = 0; i < embedded.size(); ++i) {
      for (std::size_t j = 0; j < embedded.size(); ++j) {
        if (i != j && assignment.assigned_cluster[i] == assignment.assigned_cluster[j]) {
          mask.set(i, j, true);
        }
      }
    }
    m.false_negative_precision = false_negative_precision(mask, dataset.labels);
  }

  if (pairs && !pairs->pairs.empty()) {
    ScoredPairSet scored;
    scored.pairs.reserve(pairs->pairs.size());
    for (const auto& p : pairs->pairs) {
      if (p.a.size() != encoder.input_dim()) {
        throw ShapeError("scored pair dim does not match encoder input dim");
      }
      const auto e = embed(encoder, {p.a, p.b});
      scored.pairs.push_back({e[0], e[1], p.gold});
    }
    try {
      m.spearman = spearman(scored);
    } catch (const DegenerateRankError&) {
      // left as not evaluated
    }
    const auto positive = scored.positive_pairs(config.positive_threshold);
    if (!positive.empty()) m.pair_alignment = alignment(positive);
  }
  return m;
}

void write_report_text(std::ostream& out, const Metrics& m) {
  out << "num_samples=" << m.num_samples << '\n'
      << "num_classes=" << m.num_classes << '\n'
      << "alignment=" << text::format_double(m.alignment) << '\n'
      << "mean_positive_cosine=" << text::format_double(m.mean_positive_cosine) << '\n'
      << "uniformity=" << text::format_double(m.uniformity) << '\n'
      << "ami=" << text::format_double(m.ami) << '\n'
      << "clustering_accuracy=" << text::format_double(m.clustering_accuracy) << '\n';
  put_text(out, "false_negative_precision", m.false_negative_precision);
  put_text(out, "spearman", m.spearman);
  put_text(out, "pair_alignment", m.pair_alignment);
}

void write_report_csv(std::ostream& out, const Metrics& m) {
  auto opt = [](const std::optional<double>& v) {
    return v ? text::format_double(*v) : std::string();
  };
  out << "num_samples,num_classes,alignment,mean_positive_cosine,uniformity,ami,"
         "clustering_accuracy,false_negative_precision,spearman,pair_alignment\n"
      << m.num_samples << ',' << m.num_classes << ',' << text::format_double(m.alignment)
      << ',' << text::format_double(m.mean_positive_cosine) << ','
      << text::format_double(m.uniformity) << ',' << text::format_double(m.ami) << ','
      << text::format_double(m.clustering_accuracy) << ',' << opt(m.false_negative_precision)
      << ',' << opt(m.spearman) << ',' << opt(m.pair_alignment) << '\n';
}

}  // namespace clusterns::app
