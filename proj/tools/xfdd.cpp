// xfdd: train, explain and run explainable fault detection/diagnosis models.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xfdd/baselines.hpp"
#include "xfdd/data.hpp"
#include "xfdd/errors.hpp"
#include "xfdd/log.hpp"
#include "xfdd/lrp.hpp"
#include "xfdd/metrics.hpp"
#include "xfdd/nn.hpp"
#include "xfdd/pipeline.hpp"
#include "xfdd/report.hpp"
#include "xfdd/serialization.hpp"
#include "xfdd/synthproc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kDivergence = 4 };

// Collects written artifacts and emits manifest.json last.
class RunManifest {
 public:
  RunManifest(std::string command, fs::path out_dir)
      : command_(std::move(command)), out_dir_(std::move(out_dir)) {
    fs::create_directories(out_dir_);
  }

  void set_config(const std::string& canonical) { config_hash_ = xfdd::hex64(xfdd::fnv1a64(canonical)); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::string& role, const std::string& path) {
    inputs_[role] = {{"path", fs::path(path).filename().string()}, {"digest", xfdd::file_digest(path)}};
  }
  void write(const std::string& name, const std::string& text) {
    xfdd::write_text((out_dir_ / name).string(), text);
    outputs_.push_back(name);
  }
  // Records a file some other writer already placed in the output directory.
  void add_output(const std::string& name) { outputs_.push_back(name); }
  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void finish() {
    json outputs = json::array();
    for (const auto& name : outputs_) {
      outputs.push_back({{"file", name}, {"digest", xfdd::file_digest((out_dir_ / name).string())}});
    }
    json doc{{"tool", "xfdd"},
             {"tool_version", kToolVersion},
             {"command", command_},
             {"model_format_version", xfdd::kModelFormatVersion},
             {"modules", {{"nn-core", 1}, {"losses", 1}, {"data", 1}, {"lrp", 1}, {"pipeline", 1},
                          {"metrics", 1}, {"baselines", 1}, {"synthproc", 1}}},
             {"config_hash", config_hash_},
             {"seed", seed_},
             {"inputs", inputs_},
             {"outputs", outputs}};
    if (!extra_.empty()) doc["details"] = extra_;
    xfdd::write_text((out_dir_ / "manifest.json").string(), doc.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path out_dir_;
  std::string config_hash_;
  std::uint64_t seed_ = 0;
  json inputs_ = json::object();
  json extra_ = json::object();
  std::vector<std::string> outputs_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw xfdd::ConfigError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> class_labels(const std::vector<int>& class_fault_ids) {
  std::vector<std::string> out;
  for (int f : class_fault_ids) {
    out.push_back(f == 0 ? "normal" : f == xfdd::kAnyFault ? "fault" : "fault " + std::to_string(f));
  }
  return out;
}

void write_heatmap(RunManifest& manifest, const xfdd::ModelBundle& bundle, const xfdd::Dataset& view,
                   const xfdd::RelevanceOptions& opts) {
  const auto reports = xfdd::fault_relevance_reports(bundle, view, opts);
  if (reports.empty()) {
    xfdd::log::warn("no fault rows to build a heatmap from");
    return;
  }
  const auto heatmap = xfdd::build_heatmap(reports);
  manifest.write("heatmap.csv", xfdd::heatmap_csv(heatmap));
  manifest.write("heatmap.svg", xfdd::heatmap_svg(heatmap));
}

// Confusion matrix plus detection or per-class rate table for `view`.
void write_evaluation(RunManifest& manifest, const xfdd::ModelBundle& bundle,
                      const xfdd::Dataset& view, std::vector<xfdd::DetectionColumn> baselines) {
  const auto preds = xfdd::predict(bundle.model, view.X);
  const auto cm = xfdd::confusion_matrix(preds, view.labels, class_labels(bundle.class_fault_ids));
  manifest.write("confusion.csv", xfdd::confusion_csv(cm));
  manifest.note("test_accuracy", cm.accuracy());
  if (bundle.mode == xfdd::Mode::kDetect) {
    xfdd::DetectionColumn nn{"network", {}, view.fault_ids};
    for (int p : preds) nn.flagged.push_back(p != 0);
    baselines.insert(baselines.begin(), std::move(nn));
    manifest.write("fdr_table.csv", xfdd::fdr_table_csv(baselines));
  } else {
    manifest.write("class_rates.csv", xfdd::class_rates_csv(cm));
  }
}

std::size_t pick_components(const xfdd::Matrix& rows, std::size_t requested) {
  if (requested > 0) return requested;
  const auto probe = xfdd::fit_pca(rows, 1);
  return xfdd::components_for_variance(probe.eigenvalues, 0.9);
}

// PCA and DPCA monitors on the normal training rows, scored on the test rows.
std::vector<xfdd::DetectionColumn> linear_baselines(const xfdd::PipelineConfig& cfg,
                                                    const xfdd::Dataset& raw_train,
                                                    const xfdd::Dataset& raw_test,
                                                    const std::vector<bool>& base_mask) {
  std::vector<std::size_t> normal_rows;
  for (std::size_t r = 0; r < raw_train.rows(); ++r) {
    if (raw_train.fault_ids[r] == 0) normal_rows.push_back(r);
  }
  if (normal_rows.size() < 2) {
    xfdd::log::warn("too few normal training rows for the PCA baselines");
    return {};
  }
  const auto normal = xfdd::apply_mask(xfdd::subset_rows(raw_train, normal_rows), base_mask);
  const auto test = xfdd::apply_mask(raw_test, base_mask);
  std::vector<xfdd::DetectionColumn> out;

  const auto pca = xfdd::fit_pca(normal.X, pick_components(normal.X, cfg.pca_components));
  const auto det = xfdd::detect_pca(pca, test.X);
  const std::string tag = "PCA (" + std::to_string(pca.k) + " comp.)";
  out.push_back({tag + " T2", det.t2_flag, test.fault_ids});
  out.push_back({tag + " SPE", det.spe_flag, test.fault_ids});

  if (cfg.dpca_lag > 0) {
    try {
      const auto lagged_normal = xfdd::lag_augment(normal, cfg.dpca_lag);
      const auto lagged_test = xfdd::lag_augment(test, cfg.dpca_lag);
      const auto dpca = xfdd::fit_pca(lagged_normal.X,
                                      pick_components(lagged_normal.X, cfg.dpca_components));
      const auto ddet = xfdd::detect_pca(dpca, lagged_test.X);
      const std::string dtag = "DPCA (" + std::to_string(dpca.k) + " comp.)";
      out.push_back({dtag + " T2", ddet.t2_flag, lagged_test.fault_ids});
      out.push_back({dtag + " SPE", ddet.spe_flag, lagged_test.fault_ids});
    } catch (const xfdd::DataError& e) {
      xfdd::log::warn(std::string("DPCA baseline skipped: ") + e.what());
    }
  }
  return out;
}

struct TrainArgs {
  std::string config;
  std::string train;
  std::string test;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::vector<double> lambda_thresh;
};

int cmd_train(xfdd::Mode mode, const TrainArgs& args) {
  auto cfg = xfdd::config_from_json_string(read_file(args.config));
  cfg.mode = mode;
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;
  if (!args.lambda_thresh.empty()) cfg.lambda_schedule = args.lambda_thresh;
  cfg.validate();

  RunManifest manifest(to_string(mode), args.out);
  const std::string canonical = xfdd::config_to_json_string(cfg);
  manifest.set_config(canonical);
  manifest.set_seed(cfg.seed);
  manifest.add_input("config", args.config);
  manifest.add_input("train", args.train);
  manifest.add_input("test", args.test);

  const auto raw_train = xfdd::load_csv(args.train);
  const auto raw_test = xfdd::load_csv(args.test, raw_train.catalog);
  auto result = xfdd::run_pipeline(cfg, raw_train, raw_test);
  for (const auto& w : result.data.warnings) xfdd::log::warn(w);

  const auto& bundle = result.bundle;
  const auto& splits = result.selected_splits;
  const xfdd::RelevanceOptions opts{cfg.epsilon, cfg.lambda_schedule.front()};

  manifest.write("config.json", canonical);
  manifest.write("model.json", xfdd::to_json_string(bundle));
  manifest.write("dataset.json",
                 xfdd::dataset_manifest_json(result.data, bundle.active_mask, bundle.lag, cfg.seed,
                                             {{"train", fs::path(args.train).filename().string()},
                                              {"test", fs::path(args.test).filename().string()}}));
  manifest.write("ledger.csv", xfdd::ledger_csv(result.ledger, result.selected));
  manifest.write("loss_trace.csv", xfdd::loss_trace_csv(result.selected_trace));

  auto relevance = xfdd::overall_relevance(bundle.model, splits.val, opts);
  manifest.write("relevance.csv", xfdd::relevance_csv(relevance));
  manifest.write("relevance.json", xfdd::relevance_json(relevance));
  manifest.write("relevance_bar.svg", xfdd::relevance_bar_svg(relevance));

  std::vector<xfdd::DetectionColumn> baselines;
  if (mode == xfdd::Mode::kDetect) {
    const auto test_raw = cfg.test_onset ? xfdd::apply_onset(raw_test, *cfg.test_onset) : raw_test;
    baselines = linear_baselines(cfg, raw_train, test_raw, result.data.base_mask);
  }
  write_evaluation(manifest, bundle, splits.test, std::move(baselines));
  write_heatmap(manifest, bundle, splits.test, opts);

  const auto& sel = result.ledger[result.selected];
  manifest.note("selected", {{"network", sel.network},
                             {"architecture", sel.architecture},
                             {"lag", sel.lag},
                             {"retained", sel.retained},
                             {"val_accuracy", sel.val_accuracy}});
  manifest.finish();
  std::cout << "selected " << sel.network << " " << sel.architecture << " with "
            << sel.retained.size() << " variables, validation accuracy "
            << xfdd::format_number(sel.val_accuracy) << ", test accuracy "
            << xfdd::format_number(sel.test_accuracy) << "\n";
  return kOk;
}

xfdd::Dataset load_for_bundle(const xfdd::ModelBundle& bundle, const std::string& path) {
  const auto catalog = xfdd::VariableCatalog::from_names(bundle.variable_names);
  std::ifstream in(path);
  std::string header;
  if (!in || !std::getline(in, header)) throw xfdd::DataError("cannot read '" + path + "'");
  while (!header.empty() && (header.back() == '\r' || header.back() == ' ')) header.pop_back();
  const auto last = header.substr(header.find_last_of(',') + 1);
  xfdd::CsvOptions options;
  options.labelled = last != bundle.variable_names.back() && last != options.run_column;
  return xfdd::load_csv(path, catalog, options);
}

int cmd_explain(const std::string& model_path, const std::string& data_path, const std::string& out,
                double epsilon, double lambda, std::optional<int> cls) {
  RunManifest manifest("explain", out);
  manifest.add_input("model", model_path);
  manifest.add_input("data", data_path);
  const auto bundle = xfdd::load_bundle(model_path);
  manifest.set_seed(bundle.seed);
  manifest.set_config("explain epsilon=" + xfdd::format_number(epsilon) +
                      " lambda=" + xfdd::format_number(lambda) +
                      " class=" + (cls ? std::to_string(*cls) : std::string("all")));
  const auto view = xfdd::bundle_view(bundle, load_for_bundle(bundle, data_path));
  const xfdd::RelevanceOptions opts{epsilon, lambda};
  auto report = cls ? xfdd::average_relevance(bundle.model, view, *cls, opts)
                    : xfdd::overall_relevance(bundle.model, view, opts);
  manifest.write("relevance.csv", xfdd::relevance_csv(report));
  manifest.write("relevance.json", xfdd::relevance_json(report));
  manifest.write("relevance_bar.svg", xfdd::relevance_bar_svg(report));
  write_heatmap(manifest, bundle, view, opts);
  manifest.finish();
  return kOk;
}

int cmd_score(const std::string& model_path, const std::string& stream_path, const std::string& out,
              bool attribute, double epsilon) {
  RunManifest manifest("score", out);
  manifest.add_input("model", model_path);
  manifest.add_input("stream", stream_path);
  const auto bundle = xfdd::load_bundle(model_path);
  manifest.set_seed(bundle.seed);
  manifest.set_config(std::string("score attribute=") + (attribute ? "1" : "0") +
                      " epsilon=" + xfdd::format_number(epsilon));
  const auto raw = load_for_bundle(bundle, stream_path);

  std::vector<std::string> active;
  for (std::size_t i = 0; i < bundle.active_mask.size(); ++i) {
    if (bundle.active_mask[i]) active.push_back(bundle.variable_names[i]);
  }
  xfdd::OnlineScorer scorer(bundle, attribute, epsilon);
  std::ostringstream os;
  os << "row,run,status,class,fault_id,probability,alarm,top_variable\n";
  std::size_t alarms = 0;
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    if (r > 0 && raw.runs[r] != raw.runs[r - 1]) scorer.reset();
    const auto v = scorer.push(raw.X.row(r));
    os << r << ',' << raw.runs[r] << ',';
    if (v.status == xfdd::Verdict::Status::kBuffering) {
      os << "buffering,,,,,\n";
      continue;
    }
    alarms += v.alarm ? 1 : 0;
    os << "scored," << v.cls << ',' << v.fault_id << ',' << xfdd::format_number(v.probability) << ','
       << (v.alarm ? 1 : 0) << ',';
    if (!v.attribution.empty()) {
      const auto top = std::max_element(v.attribution.begin(), v.attribution.end());
      os << active[static_cast<std::size_t>(top - v.attribution.begin())];
    }
    os << '\n';
  }
  manifest.write("verdicts.csv", os.str());
  manifest.note("alarms", alarms);
  manifest.finish();
  return kOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path, const std::string& out,
             std::optional<std::size_t> onset, double epsilon) {
  RunManifest manifest("eval", out);
  manifest.add_input("model", model_path);
  manifest.add_input("data", data_path);
  const auto bundle = xfdd::load_bundle(model_path);
  manifest.set_seed(bundle.seed);
  manifest.set_config("eval onset=" + (onset ? std::to_string(*onset) : std::string("none")));
  auto raw = load_for_bundle(bundle, data_path);
  if (onset) raw = xfdd::apply_onset(raw, *onset);
  const auto view = xfdd::bundle_view(bundle, raw);
  write_evaluation(manifest, bundle, view, {});
  write_heatmap(manifest, bundle, view, {epsilon, 0.01});
  manifest.finish();
  return kOk;
}

int cmd_synth(const std::string& preset, const std::string& out, std::uint64_t seed) {
  RunManifest manifest("synth", out);
  manifest.set_seed(seed);
  manifest.set_config("synth preset=" + preset);
  const auto bench = xfdd::synth::make_benchmark(preset, seed);
  xfdd::write_csv((fs::path(out) / "train.csv").string(), bench.train);
  xfdd::write_csv((fs::path(out) / "test.csv").string(), bench.test);

  const auto catalog = bench.train.catalog;
  json faults = json::array();
  for (const auto& f : bench.faults) {
    std::vector<std::string> targets;
    for (auto t : f.targets) targets.push_back(catalog[t].name);
    std::vector<std::string> relevant;
    for (auto v : bench.truth.relevant.at(f.id)) relevant.push_back(catalog[v].name);
    faults.push_back({{"id", f.id},
                      {"type", xfdd::synth::to_string(f.kind)},
                      {"targets", targets},
                      {"magnitude", f.magnitude},
                      {"relevant", relevant}});
  }
  std::vector<std::string> signal;
  std::vector<std::string> noise;
  for (auto v : bench.truth.signal_variables) signal.push_back(catalog[v].name);
  for (auto v : bench.truth.noise_variables) noise.push_back(catalog[v].name);
  json truth{{"preset", preset},
             {"seed", seed},
             {"test_onset", xfdd::synth::BenchmarkLayout{}.test_onset},
             {"signal_variables", signal},
             {"noise_variables", noise},
             {"faults", faults}};
  manifest.write("ground_truth.json", truth.dump(2) + "\n");
  manifest.add_output("train.csv");
  manifest.add_output("test.csv");
  manifest.finish();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainable fault detection and diagnosis with supervised autoencoders"};
  app.require_subcommand(1);

  TrainArgs detect_args;
  TrainArgs diagnose_args;
  auto add_train = [&](const std::string& name, const std::string& help, TrainArgs& a) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", a.config, "JSON pipeline config")->required()->check(CLI::ExistingFile);
    sub->add_option("--train", a.train, "training CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--test", a.test, "test CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "output directory")->required();
    sub->add_option("--seed", a.seed, "override the config seed");
    sub->add_option("--threads", a.threads, "parallel candidates per iteration");
    sub->add_option("--lambda-thresh", a.lambda_thresh, "override the pruning threshold schedule");
    return sub;
  };
  auto* detect = add_train("detect", "train a binary detection model", detect_args);
  auto* diagnose = add_train("diagnose", "train a fault diagnosis model", diagnose_args);

  std::string model_path;
  std::string data_path;
  std::string out_dir = ".";
  double epsilon = 1e-3;
  double lambda = 0.01;
  std::optional<int> cls;
  auto* explain = app.add_subcommand("explain", "average relevance of a saved model on a dataset");
  explain->add_option("--model", model_path, "model.json")->required()->check(CLI::ExistingFile);
  explain->add_option("--data", data_path, "CSV")->required()->check(CLI::ExistingFile);
  explain->add_option("--out", out_dir, "output directory");
  explain->add_option("--epsilon", epsilon, "LRP stabilizer");
  explain->add_option("--lambda-thresh", lambda, "pruning threshold shown in the report");
  explain->add_option("--class", cls, "class index; default combines all classes");

  bool attribute = false;
  std::string stream_path;
  auto* score = app.add_subcommand("score", "replay rows through a saved model");
  score->add_option("--model", model_path, "model.json")->required()->check(CLI::ExistingFile);
  score->add_option("--stream", stream_path, "CSV of raw rows")->required()->check(CLI::ExistingFile);
  score->add_option("--out", out_dir, "output directory");
  score->add_flag("--attribute", attribute, "attach relevance to alarms");
  score->add_option("--epsilon", epsilon, "LRP stabilizer");

  std::optional<std::size_t> onset;
  auto* eval = app.add_subcommand("eval", "confusion matrix and detection rates of a saved model");
  eval->add_option("--model", model_path, "model.json")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data_path, "labelled CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out_dir, "output directory");
  eval->add_option("--onset", onset, "relabel rows before this index of each run as normal");
  eval->add_option("--epsilon", epsilon, "LRP stabilizer");

  std::string preset = "default";
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "write the synthetic benchmark");
  synth->add_option("--preset", preset, "default or small");
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--seed", synth_seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help();
    app.exit(e);
    return kConfig;
  }

  try {
    if (*detect) return cmd_train(xfdd::Mode::kDetect, detect_args);
    if (*diagnose) return cmd_train(xfdd::Mode::kDiagnose, diagnose_args);
    if (*explain) return cmd_explain(model_path, data_path, out_dir, epsilon, lambda, cls);
    if (*score) return cmd_score(model_path, stream_path, out_dir, attribute, epsilon);
    if (*eval) return cmd_eval(model_path, data_path, out_dir, onset, epsilon);
    if (*synth) return cmd_synth(preset, out_dir, synth_seed);
  } catch (const xfdd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const xfdd::DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return kDivergence;
  } catch (const xfdd::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
