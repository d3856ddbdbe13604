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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clusterns/app.hpp"
#include "clusterns/errors.hpp"

namespace clusterns::app {
namespace {

namespace fs = std::filesystem;

Json small_config() {
  return Json::parse(R"({
    "mixture": {"num_classes": 4, "dim": 12, "samples_per_class": 32,
                "min_inter_cosine_gap": 0.5, "seed": 5, "pairs": 60},
    "train": {"steps": 30, "batch_size": 32, "output_dim": 6,
              "cluster": {"k": 4, "warmup_cap": 5}}
  })");
}

class AppTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("clusterns_app_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_path_ = (root_ / "config.json").string();
    write_config(small_config());
  }
  void TearDown() override { fs::remove_all(root_); }

  void write_config(const Json& doc) {
    std::ofstream out(config_path_);
    out << doc.dump(2);
  }

  CommandArgs args(const std::string& sub) const {
    CommandArgs a;
    a.config_path = config_path_;
    a.out_dir = root_ / sub;
    return a;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path root_;
  std::string config_path_;
  std::ostringstream err_;
};

std::string field_of(const Json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

TEST(Config, ErrorsNameTheField) {
  Json doc = small_config();
  doc["train"]["loss"]["tau"] = -1;
  EXPECT_EQ(field_of(doc), "train.loss.tau");
  doc = small_config();
  doc["train"]["stepz"] = 3;
  EXPECT_EQ(field_of(doc), "train.stepz");
  doc = small_config();
  doc["train"]["steps"] = "many";
  EXPECT_EQ(field_of(doc), "train.steps");
  doc = small_config();
  doc["mixture"].erase("dim");
  EXPECT_EQ(field_of(doc), "mixture.dim");
  doc = small_config();
  doc["train"]["loss"]["negative_mode"] = "hardest";
  EXPECT_EQ(field_of(doc), "train.loss.negative_mode");
  EXPECT_EQ(field_of(small_config()), "");
}

TEST(Config, SnapshotRoundTrips) {
  const RunConfig c = parse_config(small_config());
  EXPECT_EQ(c.train.steps, 30);
  EXPECT_EQ(c.train.cluster.k, 4u);
  EXPECT_EQ(c.num_pairs, 60u);
  const Json snap = to_json(c);
  EXPECT_EQ(to_json(parse_config(snap)), snap);
}

TEST(Config, Overrides) {
  Json doc = small_config();
  apply_override(doc, "train.loss.tau=0.1");
  apply_override(doc, "train.loss.negative_mode=harder");
  apply_override(doc, "train.loss.use_bml=false");
  const RunConfig c = parse_config(doc);
  EXPECT_DOUBLE_EQ(c.train.loss.tau, 0.1);
  EXPECT_EQ(c.train.loss.negative_mode, NegativeMode::kHarder);
  EXPECT_FALSE(c.train.loss.use_bml);
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), ConfigError);
}

TEST(Report, AbsentMetricsAreMarked) {
  Metrics m;
  m.num_samples = 4;
  std::ostringstream text, csv;
  write_report_text(text, m);
  write_report_csv(csv, m);
  EXPECT_NE(text.str().find("spearman=not evaluated"), std::string::npos);
  EXPECT_NE(csv.str().find(",,"), std::string::npos);
}

TEST_F(AppTest, GenerateIsReproducible) {
  ASSERT_EQ(cmd_generate(args("a"), err_), kExitOk) << err_.str();
  ASSERT_EQ(cmd_generate(args("b"), err_), kExitOk) << err_.str();
  EXPECT_EQ(file_digest(root_ / "a" / "dataset.tsv"), file_digest(root_ / "b" / "dataset.tsv"));
  EXPECT_EQ(file_digest(root_ / "a" / "pairs.tsv"), file_digest(root_ / "b" / "pairs.tsv"));
  const Json m = read_json_file(root_ / "a" / "manifest.json");
  EXPECT_EQ(m["command"], "generate");
  EXPECT_EQ(m["artifacts"]["dataset"]["sha256"], file_digest(root_ / "a" / "dataset.tsv"));
  auto seeded = args("c");
  seeded.seed = 99;
  ASSERT_EQ(cmd_generate(seeded, err_), kExitOk);
  EXPECT_NE(file_digest(root_ / "a" / "dataset.tsv"), file_digest(root_ / "c" / "dataset.tsv"));
}

TEST_F(AppTest, TrainWritesArtifactsAndReproduces) {
  ASSERT_EQ(cmd_train(args("r1"), err_), kExitOk) << err_.str();
  ASSERT_EQ(cmd_train(args("r2"), err_), kExitOk) << err_.str();
  const Json a = read_json_file(root_ / "r1" / "manifest.json");
  const Json b = read_json_file(root_ / "r2" / "manifest.json");
  EXPECT_EQ(a["status"], "ok");
  EXPECT_EQ(a["steps_completed"], 30);
  EXPECT_EQ(a["config"], b["config"]);
  for (const char* key : {"telemetry", "checkpoint", "metrics_report", "dataset"}) {
    ASSERT_TRUE(a["artifacts"].contains(key)) << key;
    EXPECT_EQ(a["artifacts"][key]["sha256"], b["artifacts"][key]["sha256"]) << key;
  }
  const Json& metrics = a["metrics"];
  EXPECT_GE(metrics["alignment"].get<double>(), 0.0);
  EXPECT_LE(metrics["alignment"].get<double>(), 4.0);
  EXPECT_LE(metrics["uniformity"].get<double>(), 0.0);
  EXPECT_GE(metrics["clustering_accuracy"].get<double>(), 0.25);
  EXPECT_FALSE(metrics["false_negative_precision"].is_null());
  EXPECT_TRUE(slurp(root_ / "r1" / "telemetry.csv").starts_with(kTelemetryHeader));
}

TEST_F(AppTest, BaselineTelemetryHasEmptyCentroidCells) {
  auto a = args("base");
  a.overrides = {"train.loss.use_hard_negatives=false", "train.loss.use_bml=false"};
  ASSERT_EQ(cmd_train(a, err_), kExitOk) << err_.str();
  std::istringstream rows(slurp(root_ / "base" / "telemetry.csv"));
  std::string line;
  std::getline(rows, line);
  int count = 0;
  while (std::getline(rows, line)) {
    EXPECT_NE(line.find(",,,,,"), std::string::npos) << line;
    ++count;
  }
  EXPECT_EQ(count, 30);
  const Json m = read_json_file(root_ / "base" / "manifest.json");
  EXPECT_TRUE(m["centroids_initialized_at"].is_null());
}

TEST_F(AppTest, ResumeContinuesToSameResult) {
  ASSERT_EQ(cmd_train(args("full"), err_), kExitOk) << err_.str();
  auto first = args("first");
  first.overrides = {"train.steps=12"};
  ASSERT_EQ(cmd_train(first, err_), kExitOk) << err_.str();
  auto rest = args("rest");
  rest.resume = (root_ / "first" / "checkpoint.txt").string();
  ASSERT_EQ(cmd_train(rest, err_), kExitOk) << err_.str();
  EXPECT_EQ(file_digest(root_ / "full" / "checkpoint.txt"),
            file_digest(root_ / "rest" / "checkpoint.txt"));
}

TEST_F(AppTest, EvalReportsMetricsAndMissingPairs) {
  ASSERT_EQ(cmd_generate(args("gen"), err_), kExitOk);
  ASSERT_EQ(cmd_train(args("run"), err_), kExitOk) << err_.str();
  auto e = args("eval");
  e.checkpoint = (root_ / "run" / "checkpoint.txt").string();
  e.dataset = (root_ / "gen" / "dataset.tsv").string();
  ASSERT_EQ(cmd_eval(e, err_), kExitOk) << err_.str();
  EXPECT_NE(slurp(root_ / "eval" / "metrics.txt").find("spearman=not evaluated"), std::string::npos);
  e.out_dir = root_ / "eval_pairs";
  e.pairs = (root_ / "gen" / "pairs.tsv").string();
  ASSERT_EQ(cmd_eval(e, err_), kExitOk) << err_.str();
  const Json m = read_json_file(root_ / "eval_pairs" / "manifest.json");
  const double rho = m["metrics"]["spearman"].get<double>();
  EXPECT_GE(rho, -1.0);
  EXPECT_LE(rho, 1.0);
}

TEST_F(AppTest, TrainedEncoderClustersBetterThanRandom) {
  ASSERT_EQ(cmd_generate(args("gen"), err_), kExitOk);
  ASSERT_EQ(cmd_train(args("run"), err_), kExitOk) << err_.str();
  const auto data = read_dataset(root_ / "gen" / "dataset.tsv");
  const Checkpoint trained = read_checkpoint(root_ / "run" / "checkpoint.txt");
  const Encoder untrained = Encoder::random(data.dim, trained.encoder.output_dim(), 0.1, 123);
  const EvalConfig cfg;
  const Metrics before = evaluate(untrained, CentroidSet(), data, nullptr, cfg);
  const Metrics after = evaluate(trained.encoder, trained.centroids, data, nullptr, cfg);
  EXPECT_GE(after.ami, before.ami);
  EXPECT_FALSE(before.false_negative_precision.has_value());
}

TEST_F(AppTest, ExitCodes) {
  auto bad = args("bad");
  bad.overrides = {"train.loss.tau=0"};
  EXPECT_EQ(cmd_train(bad, err_), kExitConfig);
  EXPECT_NE(err_.str().find("train.loss.tau"), std::string::npos);

  auto missing = args("missing");
  missing.config_path = (root_ / "nope.json").string();
  EXPECT_EQ(cmd_train(missing, err_), kExitIo);

  auto no_dataset = args("no_dataset");
  no_dataset.overrides = {"dataset=\"" + (root_ / "absent.tsv").string() + "\""};
  EXPECT_EQ(cmd_train(no_dataset, err_), kExitIo);

  auto diverge = args("diverge");
  diverge.overrides = {"train.learning_rate=1e308"};
  EXPECT_EQ(cmd_train(diverge, err_), kExitDivergence);
  const Json m = read_json_file(root_ / "diverge" / "manifest.json");
  EXPECT_EQ(m["status"], "diverged");
  EXPECT_TRUE(m["error"].contains("step"));

  auto no_ck = args("no_ck");
  EXPECT_EQ(cmd_eval(no_ck, err_), kExitConfig);
}

TEST_F(AppTest, SweepEmitsEveryAblationVariant) {
  auto s = args("sweep");
  s.sweep_kind = "ablation";
  s.seeds = {1};
  s.overrides = {"train.steps=10"};
  ASSERT_EQ(cmd_sweep(s, err_), kExitOk) << err_.str();
  EXPECT_EQ(ablation_variants().size(), 6u);
  for (const auto& v : ablation_variants()) {
    EXPECT_TRUE(fs::exists(root_ / "sweep" / "ablation" / v.name / "seed-1" / "manifest.json")) << v.name;
  }
  EXPECT_TRUE(fs::exists(root_ / "sweep" / "ablation_report.csv"));
  EXPECT_FALSE(fs::exists(root_ / "sweep" / "sigma_report.csv"));
  s.sweep_kind = "bogus";
  EXPECT_EQ(cmd_sweep(s, err_), kExitConfig);
}

TEST_F(AppTest, CommandLineParsing) {
  const std::string out = (root_ / "cli").string();
  std::vector<std::string> argv_s = {"clusterns", "generate", "--config", config_path_, "--out", out};
  std::vector<char*> argv;
  for (auto& s : argv_s) argv.push_back(s.data());
  EXPECT_EQ(run(static_cast<int>(argv.size()), argv.data()), kExitOk);
  EXPECT_TRUE(fs::exists(root_ / "cli" / "dataset.tsv"));
  std::vector<std::string> bad_s = {"clusterns", "train", "--bogus"};
  std::vector<char*> bad;
  for (auto& s : bad_s) bad.push_back(s.data());
  EXPECT_EQ(run(static_cast<int>(bad.size()), bad.data()), kExitConfig);
}

}  // namespace
}  // namespace clusterns::app
