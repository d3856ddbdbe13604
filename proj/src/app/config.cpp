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

#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include <openssl/evp.h>

#include "clusterns/app.hpp"
#include "clusterns/errors.hpp"

namespace clusterns::app {
namespace {

// Strict reader over one JSON object: every key must be consumed.
class Section {
 public:
  Section(const Json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError("must be an object", path_);
  }

  bool has(const char* key) const { return doc_.contains(key); }

  const Json& child(const char* key) {
    seen_.insert(key);
    return doc_.at(key);
  }

  std::string field(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!has(key)) return;
    seen_.insert(key);
    out = convert<T>(doc_.at(key), field(key));
  }

  template <typename T>
  void require(const char* key, T& out) {
    if (!has(key)) throw ConfigError("required field is missing", field(key));
    read(key, out);
  }

  // Reads an enum through its string converter, re-tagging errors with the
  // full field path.
  template <typename E, typename Parse>
  void read_enum(const char* key, E& out, Parse parse) {
    std::string name;
    read(key, name);
    if (name.empty()) return;
    try {
      out = parse(name);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), field(key));
    }
  }

  void finish() const {
    for (const auto& item : doc_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown field", field(item.key().c_str()));
    }
  }

 private:
  template <typename T>
  static T convert(const Json& v, const std::string& field) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("must be a boolean", field);
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("must be a string", field);
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("must be a number", field);
      return v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw ConfigError("must be a non-negative integer", field);
      return v.get<T>();
    } else {
      if (!v.is_number_integer()) throw ConfigError("must be an integer", field);
      return v.get<T>();
    }
  }

  const Json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

MixtureSpec parse_mixture(Section& s, std::size_t& num_pairs) {
  MixtureSpec m;
  s.require("num_classes", m.num_classes);
  s.require("dim", m.dim);
  s.require("samples_per_class", m.samples_per_class);
  s.read("intra_concentration", m.intra_concentration);
  s.read("min_inter_cosine_gap", m.min_inter_cosine_gap);
  s.read("seed", m.seed);
  s.read("pairs", num_pairs);
  s.finish();
  return m;
}

ClusterConfig parse_cluster(Section& s) {
  ClusterConfig c;
  s.read("k", c.k);
  s.read("gamma", c.gamma);
  s.read("sigma", c.sigma);
  s.read("warmup_cap", c.warmup_cap);
  s.read_enum("init_mode", c.init_mode, init_mode_from_string);
  s.read_enum("seeding", c.seeding, seeding_rule_from_string);
  s.finish();
  return c;
}

LossConfig parse_loss(Section& s) {
  LossConfig l;
  s.read("tau", l.tau);
  s.read("mu", l.mu);
  s.read("lambda_bml", l.lambda_bml);
  s.read("alpha", l.alpha);
  s.read("beta", l.beta);
  s.read("use_hard_negatives", l.use_hard_negatives);
  s.read("use_bml", l.use_bml);
  s.read_enum("negative_mode", l.negative_mode, negative_mode_from_string);
  s.finish();
  return l;
}

TrainConfig parse_train(Section& s) {
  TrainConfig t;
  s.read("steps", t.steps);
  s.read("batch_size", t.batch_size);
  s.read("learning_rate", t.learning_rate);
  s.read("seed", t.seed);
  s.read("output_dim", t.output_dim);
  s.read("dropout_rate", t.dropout_rate);
  s.read("init_bias_scale", t.init_bias_scale);
  s.read("telemetry_every", t.telemetry_every);
  if (s.has("cluster")) {
    Section c(s.child("cluster"), s.field("cluster"));
    t.cluster = parse_cluster(c);
  }
  if (s.has("loss")) {
    Section l(s.child("loss"), s.field("loss"));
    t.loss = parse_loss(l);
  }
  s.finish();
  return t;
}

EvalConfig parse_eval(Section& s) {
  EvalConfig e;
  s.read("seed", e.seed);
  s.read("kmeans_restarts", e.kmeans_restarts);
  s.read("positive_threshold", e.positive_threshold);
  s.finish();
  if (e.kmeans_restarts < 1) throw ConfigError("must be at least 1", "eval.kmeans_restarts");
  return e;
}

}  // namespace

const char* const kVersion = CLUSTERNS_VERSION;

RunConfig parse_config(const Json& doc) {
  Section root(doc, "");
  RunConfig config;
  if (root.has("mixture")) {
    Section m(root.child("mixture"), "mixture");
    config.mixture = parse_mixture(m, config.num_pairs);
    config.mixture->validate("mixture");
  }
  root.read("dataset", config.dataset);
  if (root.has("train")) {
    Section t(root.child("train"), "train");
    config.train = parse_train(t);
  }
  config.train.validate("train");
  if (root.has("eval")) {
    Section e(root.child("eval"), "eval");
    config.eval = parse_eval(e);
  }
  root.finish();
  return config;
}

Json to_json(const RunConfig& config) {
  Json doc;
  if (config.mixture) {
    const auto& m = *config.mixture;
    doc["mixture"] = {{"num_classes", m.num_classes},
                      {"dim", m.dim},
                      {"samples_per_class", m.samples_per_class},
                      {"intra_concentration", m.intra_concentration},
                      {"min_inter_cosine_gap", m.min_inter_cosine_gap},
                      {"seed", m.seed},
                      {"pairs", config.num_pairs}};
  }
  if (!config.dataset.empty()) doc["dataset"] = config.dataset;
  const auto& t = config.train;
  doc["train"] = {
      {"steps", t.steps},
      {"batch_size", t.batch_size},
      {"learning_rate", t.learning_rate},
      {"seed", t.seed},
      {"output_dim", t.output_dim},
      {"dropout_rate", t.dropout_rate},
      {"init_bias_scale", t.init_bias_scale},
      {"telemetry_every", t.telemetry_every},
      {"cluster",
       {{"k", t.cluster.k},
        {"gamma", t.cluster.gamma},
        {"sigma", t.cluster.sigma},
        {"warmup_cap", t.cluster.warmup_cap},
        {"init_mode", to_string(t.cluster.init_mode)},
        {"seeding", to_string(t.cluster.seeding)}}},
      {"loss",
       {{"tau", t.loss.tau},
        {"mu", t.loss.mu},
        {"lambda_bml", t.loss.lambda_bml},
        {"alpha", t.loss.alpha},
        {"beta", t.loss.beta},
        {"use_hard_negatives", t.loss.use_hard_negatives},
        {"use_bml", t.loss.use_bml},
        {"negative_mode", to_string(t.loss.negative_mode)}}}};
  doc["eval"] = {{"seed", config.eval.seed},
                 {"kmeans_restarts", config.eval.kmeans_restarts},
                 {"positive_threshold", config.eval.positive_threshold}};
  return doc;
}

void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value", std::string(assignment));
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));

  Json value = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("empty path component", path);
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("is not a section", path.substr(0, start - 1));
      *node = Json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), path.string());
  }
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_json_atomic(const std::filesystem::path& path, const Json& doc) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace clusterns::app
