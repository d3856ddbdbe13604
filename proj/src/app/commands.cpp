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

#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "clusterns/app.hpp"
#include "clusterns/errors.hpp"
#include "clusterns/text_io.hpp"

namespace clusterns::app {
namespace fs = std::filesystem;
namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Maps library exceptions onto the exit-code contract.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "diverged at step " << e.step() << ": " << e.what() << '\n';
    return kExitDivergence;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    err << "parse error at line " << e.line() << ": " << e.what() << '\n';
    return kExitIo;
  } catch (const EmptyInputError& e) {
    err << "empty input: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Reads the config file (or an empty document), then applies --set
// overrides and the seed targets, and parses the result.
RunConfig load_config(const CommandArgs& args, const std::vector<std::string>& seed_keys) {
  Json doc = args.config_path.empty() ? Json::object() : read_json_file(args.config_path);
  for (const auto& o : args.overrides) apply_override(doc, o);
  if (args.seed) {
    for (const auto& key : seed_keys) {
      if (key.rfind("mixture.", 0) == 0 && !doc.contains("mixture")) continue;
      apply_override(doc, key + "=" + std::to_string(*args.seed));
    }
  }
  auto config = parse_config(doc);
  if (!config.dataset.empty()) config.dataset = fs::absolute(config.dataset).string();
  return config;
}

Json artifact(const fs::path& dir, const std::string& name) {
  return {{"path", name}, {"sha256", file_digest(dir / name)}};
}

Json input(const fs::path& path) {
  return {{"path", fs::absolute(path).string()}, {"sha256", file_digest(path)}};
}

Json manifest_base(const std::string& command, const RunConfig& config,
                   std::uint64_t seed, const std::string& started) {
  Json m;
  m["tool"] = "clusterns";
  m["version"] = kVersion;
  m["command"] = command;
  m["status"] = "ok";
  m["seed"] = seed;
  m["started_at"] = started;
  m["finished_at"] = "";
  m["config"] = to_json(config);
  m["inputs"] = Json::object();
  m["artifacts"] = Json::object();
  return m;
}

Json metrics_json(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  return {{"alignment", m.alignment},
          {"mean_positive_cosine", m.mean_positive_cosine},
          {"uniformity", m.uniformity},
          {"ami", m.ami},
          {"clustering_accuracy", m.clustering_accuracy},
          {"false_negative_precision", opt(m.false_negative_precision)},
          {"spearman", opt(m.spearman)},
          {"pair_alignment", opt(m.pair_alignment)}};
}

void write_reports(const fs::path& dir, const Metrics& metrics, Json& manifest) {
  {
    std::ofstream out(dir / "metrics.txt", std::ios::binary);
    write_report_text(out, metrics);
    if (!out) throw IoError("failed writing metrics.txt");
  }
  {
    std::ofstream out(dir / "metrics.csv", std::ios::binary);
    write_report_csv(out, metrics);
    if (!out) throw IoError("failed writing metrics.csv");
  }
  manifest["artifacts"]["metrics_report"] = artifact(dir, "metrics.txt");
  manifest["artifacts"]["metrics_csv"] = artifact(dir, "metrics.csv");
  manifest["metrics"] = metrics_json(metrics);
}

// Dataset named by the config, or generated from its mixture section (and
// then saved into the run directory).
LabeledDataset obtain_dataset(const RunConfig& config, const fs::path& dir, Json& manifest) {
  if (!config.dataset.empty()) {
    auto data = read_dataset(fs::path(config.dataset));
    manifest["inputs"]["dataset"] = input(config.dataset);
    return data;
  }
  if (!config.mixture) {
    throw ConfigError("either a dataset path or a mixture section is required", "dataset");
  }
  auto data = generate(*config.mixture);
  write_dataset(dir / "dataset.tsv", data);
  manifest["artifacts"]["dataset"] = artifact(dir, "dataset.tsv");
  return data;
}

struct RunOutcome {
  bool diverged = false;
  std::optional<Metrics> metrics;
  long init_step = -1;
};

// One training run into `dir`: telemetry, checkpoint, metrics, manifest.
RunOutcome train_run(const RunConfig& config, const LabeledDataset& dataset,
                     const std::optional<Checkpoint>& resume, const fs::path& dir,
                     Json manifest) {
  ensure_dir(dir);
  std::ofstream telemetry(dir / "telemetry.csv", std::ios::binary);
  if (!telemetry) throw IoError("cannot open " + (dir / "telemetry.csv").string());
  write_telemetry_header(telemetry);

  TrainOptions options;
  options.resume = resume;
  options.on_telemetry = [&](const TelemetryRow& row) { write_telemetry_row(telemetry, row); };

  RunOutcome outcome;
  std::optional<TrainResult> result;
  try {
    result = train(dataset, config.train, options);
  } catch (const DivergenceError& e) {
    telemetry.close();
    manifest["status"] = "diverged";
    manifest["error"] = {{"step", e.step()}, {"message", e.what()}};
    manifest["artifacts"]["telemetry"] = artifact(dir, "telemetry.csv");
    manifest["finished_at"] = utc_now();
    write_json_atomic(dir / "manifest.json", manifest);
    outcome.diverged = true;
    return outcome;
  }
  telemetry.close();
  if (!telemetry) throw IoError("failed writing telemetry.csv");
  manifest["artifacts"]["telemetry"] = artifact(dir, "telemetry.csv");

  const Checkpoint checkpoint{result->encoder, result->centroids, result->steps_completed};
  write_checkpoint(dir / "checkpoint.txt", checkpoint);
  manifest["artifacts"]["checkpoint"] = artifact(dir, "checkpoint.txt");
  outcome.init_step = result->centroids.initialized()
                          ? result->centroids.step_initialized_at()
                          : -1;
  manifest["centroids_initialized_at"] =
      outcome.init_step >= 0 ? Json(outcome.init_step) : Json(nullptr);
  manifest["steps_completed"] = result->steps_completed;

  const auto metrics =
      evaluate(result->encoder, result->centroids, dataset, nullptr, config.eval);
  write_reports(dir, metrics, manifest);
  outcome.metrics = metrics;

  manifest["finished_at"] = utc_now();
  write_json_atomic(dir / "manifest.json", manifest);
  return outcome;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? text::format_double(*v) : std::string();
}

}  // namespace

const std::vector<Variant>& ablation_variants() {
  static const std::vector<Variant> variants = {
      {"full", true, true, NegativeMode::kStandard},
      {"no_false_negative", true, false, NegativeMode::kStandard},
      {"no_hard_negative", false, true, NegativeMode::kStandard},
      {"harder_negative", true, true, NegativeMode::kHarder},
      {"random_clusters", true, true, NegativeMode::kRandom},
      {"baseline", false, false, NegativeMode::kStandard},
  };
  return variants;
}

TrainConfig apply_variant(TrainConfig config, const Variant& variant) {
  config.loss.use_hard_negatives = variant.use_hard_negatives;
  config.loss.use_bml = variant.use_bml;
  config.loss.negative_mode = variant.mode;
  if (!variant.use_hard_negatives) config.loss.mu = 0.0;
  if (!variant.use_bml) config.loss.lambda_bml = 0.0;
  return config;
}

int cmd_generate(const CommandArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = utc_now();
    const auto config = load_config(args, {"mixture.seed"});
    if (!config.mixture) throw ConfigError("required section is missing", "mixture");
    ensure_dir(args.out_dir);
    auto manifest = manifest_base("generate", config, config.mixture->seed, started);
    const auto data = generate(*config.mixture);
    write_dataset(args.out_dir / "dataset.tsv", data);
    manifest["artifacts"]["dataset"] = artifact(args.out_dir, "dataset.tsv");
    manifest["rows"] = data.size();
    if (config.num_pairs > 0) {
      const auto pairs = synthesize_pairs(data, config.num_pairs,
                                          mix_seed(config.mixture->seed, 0x9a125));
      write_pairs(args.out_dir / "pairs.tsv", pairs);
      manifest["artifacts"]["pairs"] = artifact(args.out_dir, "pairs.tsv");
    }
    manifest["finished_at"] = utc_now();
    write_json_atomic(args.out_dir / "manifest.json", manifest);
    return kExitOk;
  });
}

int cmd_train(const CommandArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = utc_now();
    const auto config = load_config(args, {"train.seed"});
    ensure_dir(args.out_dir);
    auto manifest = manifest_base("train", config, config.train.seed, started);
    const auto dataset = obtain_dataset(config, args.out_dir, manifest);
    std::optional<Checkpoint> resume;
    if (!args.resume.empty()) {
      resume = read_checkpoint(fs::path(args.resume));
      manifest["inputs"]["resume"] = input(args.resume);
    }
    const auto outcome = train_run(config, dataset, resume, args.out_dir, manifest);
    if (outcome.diverged) {
      err << "training diverged; see " << (args.out_dir / "manifest.json").string() << '\n';
      return kExitDivergence;
    }
    return kExitOk;
  });
}

int cmd_eval(const CommandArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = utc_now();
    auto config = load_config(args, {"eval.seed"});
    if (!args.dataset.empty()) config.dataset = fs::absolute(args.dataset).string();
    if (args.checkpoint.empty()) throw ConfigError("a checkpoint is required", "checkpoint");
    ensure_dir(args.out_dir);
    auto manifest = manifest_base("eval", config, config.eval.seed, started);
    const auto checkpoint = read_checkpoint(fs::path(args.checkpoint));
    manifest["inputs"]["checkpoint"] = input(args.checkpoint);
    const auto dataset = obtain_dataset(config, args.out_dir, manifest);
    std::optional<ScoredPairSet> pairs;
    if (!args.pairs.empty()) {
      pairs = read_pairs(fs::path(args.pairs));
      manifest["inputs"]["pairs"] = input(args.pairs);
    }
    const auto metrics = evaluate(checkpoint.encoder, checkpoint.centroids, dataset,
                                  pairs ? &*pairs : nullptr, config.eval);
    write_reports(args.out_dir, metrics, manifest);
    manifest["finished_at"] = utc_now();
    write_json_atomic(args.out_dir / "manifest.json", manifest);
    return kExitOk;
  });
}

int cmd_sweep(const CommandArgs& args, std::ostream& err) {
  return guarded(err, [&] {
    const auto started = utc_now();
    if (args.sweep_kind != "ablation" && args.sweep_kind != "sigma" &&
        args.sweep_kind != "all") {
      throw ConfigError("must be ablation, sigma or all", "kind");
    }
    const auto config = load_config(args, {"train.seed"});
    ensure_dir(args.out_dir);
    auto manifest = manifest_base("sweep", config, config.train.seed, started);
    const auto dataset = obtain_dataset(config, args.out_dir, manifest);
    const std::vector<std::uint64_t> seeds =
        args.seeds.empty() ? std::vector<std::uint64_t>{config.train.seed} : args.seeds;
    manifest["seeds"] = seeds;
    manifest["runs"] = Json::array();
    bool any_diverged = false;

    auto run_one = [&](const RunConfig& run_config, const fs::path& rel) {
      auto run_manifest =
          manifest_base("train", run_config, run_config.train.seed, utc_now());
      run_manifest["inputs"] = manifest["inputs"];
      if (manifest["artifacts"].contains("dataset")) {
        run_manifest["inputs"]["dataset"] = input(args.out_dir / "dataset.tsv");
      }
      const auto outcome =
          train_run(run_config, dataset, std::nullopt, args.out_dir / rel, run_manifest);
      any_diverged = any_diverged || outcome.diverged;
      manifest["runs"].push_back(rel.string());
      return outcome;
    };

    if (args.sweep_kind != "sigma") {
      std::ofstream report(args.out_dir / "ablation_report.csv", std::ios::binary);
      report << "variant,seed,use_hard_negatives,use_bml,negative_mode,status,ami,"
                "clustering_accuracy,alignment,uniformity,false_negative_precision\n";
      std::ofstream summary(args.out_dir / "ablation_summary.csv", std::ios::binary);
      summary << "variant,runs,mean_ami,mean_clustering_accuracy,mean_alignment,"
                 "mean_uniformity\n";
      for (const auto& variant : ablation_variants()) {
        double ami_sum = 0, acc_sum = 0, align_sum = 0, uni_sum = 0;
        int ok = 0;
        for (auto seed : seeds) {
          RunConfig run_config = config;
          run_config.train = apply_variant(config.train, variant);
          run_config.train.seed = seed;
          const auto outcome = run_one(
              run_config, fs::path("ablation") / variant.name / ("seed-" + std::to_string(seed)));
          report << variant.name << ',' << seed << ',' << variant.use_hard_negatives << ','
                 << variant.use_bml << ',' << to_string(variant.mode) << ','
                 << (outcome.diverged ? "diverged" : "ok");
          if (outcome.metrics) {
            const auto& m = *outcome.metrics;
            report << ',' << text::format_double(m.ami) << ','
                   << text::format_double(m.clustering_accuracy) << ','
                   << text::format_double(m.alignment) << ','
                   << text::format_double(m.uniformity) << ','
                   << opt_cell(m.false_negative_precision) << '\n';
            ami_sum += m.ami;
            acc_sum += m.clustering_accuracy;
            align_sum += m.alignment;
            uni_sum += m.uniformity;
            ++ok;
          } else {
            report << ",,,,,\n";
          }
        }
        summary << variant.name << ',' << ok;
        if (ok > 0) {
          summary << ',' << text::format_double(ami_sum / ok) << ','
                  << text::format_double(acc_sum / ok) << ','
                  << text::format_double(align_sum / ok) << ','
                  << text::format_double(uni_sum / ok) << '\n';
        } else {
          summary << ",,,,\n";
        }
      }
      if (!report || !summary) throw IoError("failed writing ablation reports");
      report.close();
      summary.close();
      manifest["artifacts"]["ablation_report"] = artifact(args.out_dir, "ablation_report.csv");
      manifest["artifacts"]["ablation_summary"] = artifact(args.out_dir, "ablation_summary.csv");
    }

    if (args.sweep_kind != "ablation") {
      std::ofstream report(args.out_dir / "sigma_report.csv", std::ios::binary);
      report << "sigma,seed,status,centroids_initialized_at,ami,clustering_accuracy,"
                "alignment,uniformity,false_negative_precision\n";
      for (double sigma : {0.2, 0.4, 0.6}) {
        for (auto seed : seeds) {
          RunConfig run_config = config;
          run_config.train.cluster.sigma = sigma;
          run_config.train.seed = seed;
          const auto outcome = run_one(run_config, fs::path("sigma") /
                                                       ("sigma-" + text::format_double(sigma)) /
                                                       ("seed-" + std::to_string(seed)));
          report << text::format_double(sigma) << ',' << seed << ','
                 << (outcome.diverged ? "diverged" : "ok") << ',';
          if (outcome.init_step >= 0) report << outcome.init_step;
          if (outcome.metrics) {
            const auto& m = *outcome.metrics;
            report << ',' << text::format_double(m.ami) << ','
                   << text::format_double(m.clustering_accuracy) << ','
                   << text::format_double(m.alignment) << ','
                   << text::format_double(m.uniformity) << ','
                   << opt_cell(m.false_negative_precision) << '\n';
          } else {
            report << ",,,,,\n";
          }
        }
      }
      if (!report) throw IoError("failed writing sigma report");
      report.close();
      manifest["artifacts"]["sigma_report"] = artifact(args.out_dir, "sigma_report.csv");
    }

    manifest["status"] = any_diverged ? "diverged" : "ok";
    manifest["finished_at"] = utc_now();
    write_json_atomic(args.out_dir / "manifest.json", manifest);
    return any_diverged ? kExitDivergence : kExitOk;
  });
}

int run(int argc, char** argv) {
  CLI::App cli{"ClusterNS desk-scale toolkit: synthetic data, clustering-aided "
               "contrastive training, evaluation and sweeps"};
  cli.set_version_flag("--version", std::string(kVersion));
  cli.require_subcommand(1);

  CommandArgs args;
  std::string out_dir;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "JSON config file");
    sub->add_option("--seed", seed, "Seed override");
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--set", args.overrides, "Override a config field: section.key=value");
  };

  auto* gen = cli.add_subcommand("generate", "Write a synthetic labeled dataset");
  add_common(gen);
  auto* tr = cli.add_subcommand("train", "Train an encoder and write telemetry");
  add_common(tr);
  tr->add_option("--resume", args.resume, "Continue from a checkpoint");
  auto* ev = cli.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  add_common(ev);
  ev->add_option("--checkpoint", args.checkpoint, "Checkpoint file")->required();
  ev->add_option("--dataset", args.dataset, "Dataset file (default: from config)");
  ev->add_option("--pairs", args.pairs, "Scored pair file for Spearman");
  auto* sw = cli.add_subcommand("sweep", "Run the ablation variants and the sigma sweep");
  add_common(sw);
  sw->add_option("--kind", args.sweep_kind, "ablation, sigma or all")
      ->check(CLI::IsMember({"ablation", "sigma", "all"}));
  sw->add_option("--seeds", args.seeds, "Training seeds")->delimiter(',');

  try {
    cli.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kExitConfig;
  }

  args.out_dir = out_dir;
  for (auto* sub : {gen, tr, ev, sw}) {
    if (sub->parsed() && sub->count("--seed") > 0) args.seed = seed;
  }
  if (gen->parsed()) return cmd_generate(args, std::cerr);
  if (tr->parsed()) return cmd_train(args, std::cerr);
  if (ev->parsed()) return cmd_eval(args, std::cerr);
  return cmd_sweep(args, std::cerr);
}

}  // namespace clusterns::app
