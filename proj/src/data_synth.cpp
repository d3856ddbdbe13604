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

#include "clusterns/data_synth.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "clusterns/errors.hpp"
#include "clusterns/text_io.hpp"

namespace clusterns {

void MixtureSpec::validate(const std::string& prefix) const {
  if (num_classes < 2) throw ConfigError("must be at least 2", prefix + ".num_classes");
  if (dim < 2) throw ConfigError("must be at least 2", prefix + ".dim");
  if (samples_per_class < 2) {
    throw ConfigError("must be at least 2", prefix + ".samples_per_class");
  }
  if (!(intra_concentration >= 0.0)) {
    throw ConfigError("must be non-negative", prefix + ".intra_concentration");
  }
  if (!(min_inter_cosine_gap >= 0.0 && min_inter_cosine_gap <= 2.0)) {
    throw ConfigError("must lie in [0, 2]", prefix + ".min_inter_cosine_gap");
  }
}

std::size_t LabeledDataset::num_classes() const {
  return std::set<int>(labels.begin(), labels.end()).size();
}

namespace {

constexpr int kMaxDrawsPerDirection = 1000;

Vector gaussian_vector(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (double& x : v) x = normal(rng);
  return v;
}

std::vector<Vector> draw_directions(const MixtureSpec& spec, std::mt19937_64& rng) {
  const double max_cos = 1.0 - spec.min_inter_cosine_gap;
  std::vector<Vector> dirs;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxDrawsPerDirection && !placed; ++attempt) {
      Vector candidate = gaussian_vector(spec.dim, rng);
      if (norm(candidate) == 0.0) continue;
      candidate = normalize(candidate);
      placed = true;
      for (const Vector& d : dirs) {
        if (dot(candidate, d) > max_cos) {
          placed = false;
          break;
        }
      }
      if (placed) dirs.push_back(std::move(candidate));
    }
    if (!placed) {
      throw GenerationError("could not place class direction " + std::to_string(c) +
                            " with cosine <= " + text::format_double(max_cos) +
                            " after " + std::to_string(kMaxDrawsPerDirection) +
                            " draws");
    }
  }
  return dirs;
}

}  // namespace

std::vector<Vector> class_directions(const MixtureSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  return draw_directions(spec, rng);
}

LabeledDataset generate(const MixtureSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::vector<Vector> dirs = draw_directions(spec, rng);
  LabeledDataset data;
  data.dim = spec.dim;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      Vector x = dirs[c];
      if (spec.intra_concentration > 0.0) {
        const Vector noise = gaussian_vector(spec.dim, rng);
        for (std::size_t d = 0; d < spec.dim; ++d) {
          x[d] += spec.intra_concentration * noise[d];
        }
        x = normalize(x);
      }
      data.features.push_back(std::move(x));
      data.labels.push_back(static_cast<int>(c));
    }
  }
  return data;
}

void write_dataset(std::ostream& out, const LabeledDataset& data) {
  out << "clusterns-dataset v1 dim=" << data.dim << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double x : data.features[i]) out << '\t' << text::format_double(x);
    out << '\n';
  }
}

LabeledDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInputError("empty dataset file");
  if (line.rfind("clusterns-dataset v1", 0) != 0) {
    throw ParseError(1, "expected 'clusterns-dataset v1 dim=<d>' header");
  }
  const auto dim_field = text::header_field(line, "dim");
  const auto dim = dim_field ? text::parse_int(*dim_field) : std::nullopt;
  if (!dim || *dim < 2) throw ParseError(1, "missing or invalid dim in header");

  LabeledDataset data;
  data.dim = static_cast<std::size_t>(*dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != data.dim + 1) {
      throw ParseError(line_no, "expected label and " + std::to_string(data.dim) +
                                    " coordinates, got " +
                                    std::to_string(fields.size()) + " fields");
    }
    const auto label = text::parse_int(fields[0]);
    if (!label) throw ParseError(line_no, "non-integer label '" + std::string(fields[0]) + "'");
    Vector row;
    row.reserve(data.dim);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const auto v = text::parse_double(fields[f]);
      if (!v) {
        throw ParseError(line_no, "non-numeric coordinate '" + std::string(fields[f]) + "'");
      }
      row.push_back(*v);
    }
    data.labels.push_back(static_cast<int>(*label));
    data.features.push_back(std::move(row));
  }
  if (data.features.empty()) throw EmptyInputError("dataset has no records");
  return data;
}

void write_dataset(const std::filesystem::path& path, const LabeledDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_dataset(out, data);
  if (!out) throw IoError("failed writing " + path.string());
}

LabeledDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_dataset(in);
}

ScoredPairSet synthesize_pairs(const LabeledDataset& data, std::size_t count,
                               std::uint64_t seed) {
  if (data.size() < 2) throw EmptyInputError("need at least 2 samples to form pairs");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  ScoredPairSet out;
  out.pairs.reserve(count);
  while (out.pairs.size() < count) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    if (i == j) continue;
    const double gold = 2.5 * (1.0 + cosine(data.features[i], data.features[j]));
    out.pairs.push_back({data.features[i], data.features[j], gold});
  }
  return out;
}

void write_pairs(std::ostream& out, const ScoredPairSet& pairs) {
  const std::size_t dim = pairs.pairs.empty() ? 0 : pairs.pairs.front().a.size();
  out << "clusterns-pairs v1 dim=" << dim << '\n';
  for (const auto& p : pairs.pairs) {
    if (p.a.size() != dim || p.b.size() != dim) {
      throw ShapeError("pair vectors must share one dimension");
    }
    out << text::format_double(p.gold);
    for (double x : p.a) out << '\t' << text::format_double(x);
    for (double x : p.b) out << '\t' << text::format_double(x);
    out << '\n';
  }
}

ScoredPairSet read_pairs(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInputError("empty pairs file");
  if (line.rfind("clusterns-pairs v1", 0) != 0) {
    throw ParseError(1, "expected 'clusterns-pairs v1 dim=<d>' header");
  }
  const auto dim_field = text::header_field(line, "dim");
  const auto dim = dim_field ? text::parse_int(*dim_field) : std::nullopt;
  if (!dim || *dim < 1) throw ParseError(1, "missing or invalid dim in header");
  const auto d = static_cast<std::size_t>(*dim);

  ScoredPairSet out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2 * d + 1) {
      throw ParseError(line_no, "expected gold score and " + std::to_string(2 * d) +
                                    " coordinates, got " +
                                    std::to_string(fields.size()) + " fields");
    }
    std::vector<double> values;
    values.reserve(fields.size());
    for (const auto& f : fields) {
      const auto v = text::parse_double(f);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(line_no, "non-numeric value '" + std::string(f) + "'");
      }
      values.push_back(*v);
    }
    ScoredPair pair;
    pair.gold = values[0];
    pair.a.assign(values.begin() + 1, values.begin() + 1 + static_cast<std::ptrdiff_t>(d));
    pair.b.assign(values.begin() + 1 + static_cast<std::ptrdiff_t>(d), values.end());
    out.pairs.push_back(std::move(pair));
  }
  if (out.pairs.empty()) throw EmptyInputError("pairs file has no records");
  return out;
}

void write_pairs(const std::filesystem::path& path, const ScoredPairSet& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_pairs(out, pairs);
  if (!out) throw IoError("failed writing " + path.string());
}

ScoredPairSet read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_pairs(in);
}

}  // namespace clusterns
