// Command line front end: the training-phase commands (synth, train,
// calibrate) and the deployment-phase commands (detect, eval) over
// persisted artifacts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cansig/cansig.hpp"

namespace fs = std::filesystem;
using namespace cansig;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string data;
  std::string models_dir;
  std::string thresholds;
  std::string out;
  std::string format = "canonical_csv";
  std::optional<uint64_t> seed;
  std::vector<double> fpr_budgets;
  int stride = 0;
  int jobs = -1;
};

RunConfig load_config(const CommonOpts& opts) {
  RunConfig cfg = RunConfig::load(opts.config_path);
  if (opts.seed) cfg.seed = static_cast<uint32_t>(*opts.seed);
  if (opts.jobs >= 0) cfg.jobs = opts.jobs;
  return cfg;
}

std::vector<SignalRecord> load_records(const std::string& path, LogFormat format,
                                       const RunConfig& cfg,
                                       const SignalCatalog* catalog) {
  if (format == LogFormat::canonical_csv) {
    const int file_m = canonical_signal_count(path);
    if (file_m != cfg.m) {
      throw ArtifactMismatch(path + " carries m=" + std::to_string(file_m) +
                             ", config expects m=" + std::to_string(cfg.m));
    }
  }
  ParseReport report;
  auto records = read_log(path, format, &report, catalog);
  if (report.malformed > 0) {
    std::cerr << path << ": skipped " << report.malformed << " malformed row(s)\n";
    for (const auto& [line, what] : report.issues) {
      std::cerr << "  line " << line << ": " << what << '\n';
    }
  }
  if (records.empty()) throw EmptyStream(path + ": no records");
  return records;
}

int cmd_synth(const CommonOpts& opts, const std::string& scenario_path) {
  std::ifstream in(scenario_path);
  if (!in) throw ConfigError("cannot open scenario " + scenario_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(scenario_path + ": " + e.what());
  }
  Scenario scenario;
  try {
    scenario = Scenario::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(scenario_path + ": " + e.what());
  }
  if (opts.seed) scenario.traffic.seed = *opts.seed;
  const auto result = run_synth(scenario, opts.out);
  std::cout << "wrote " << result.train_csv << " and " << result.test_csvs.size()
            << " test trace(s) under " << opts.out << '\n';
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  const RunConfig cfg = load_config(opts);
  const LogFormat format = log_format_from_string(opts.format);

  // resuming into a populated artifact directory must stay consistent
  if (fs::exists(fs::path(opts.models_dir) / "catalog.json")) {
    const auto existing =
        catalog_from_json(read_json_file(opts.models_dir + "/catalog.json"));
    if (existing.signal_count != cfg.m) {
      throw ArtifactMismatch("models dir holds artifacts for m=" +
                             std::to_string(existing.signal_count) +
                             ", config expects m=" + std::to_string(cfg.m));
    }
  }

  auto records = load_records(opts.data, format, cfg, nullptr);
  const auto splits = split(records, cfg.train_fraction, 1.0 - cfg.train_fraction, 0.0);

  Artifacts art = fit_preprocessing(splits.train, cfg);
  const auto inverse_perm = art.order.inverse();
  const auto train_views =
      collect_views(splits.train, cfg, art.scaler, inverse_perm, cfg.train_stride);
  const auto val_views = splits.validation.empty()
                             ? ViewBatches{}
                             : collect_views(splits.validation, cfg, art.scaler,
                                             inverse_perm, cfg.train_stride);
  if (train_views.windows() == 0) {
    throw InsufficientData("training data yields no full windows; need more than " +
                           std::to_string(cfg.queue_depth()) + " records");
  }
  std::cout << "training " << cfg.periods.size() << " autoencoder(s) on "
            << train_views.windows() << " windows\n";
  art.models = train_models(cfg, train_views, val_views);
  for (const auto& model : art.models) {
    const auto& h = model.training_history();
    std::cout << "  period " << model.period() << ": " << h.size()
              << " epoch(s), final loss "
              << (h.empty() ? 0.0 : h.back()) << '\n';
  }
  save_artifacts(opts.models_dir, art);
  write_json_file(opts.models_dir + "/config.json", cfg.to_json());
  std::cout << "saved artifacts to " << opts.models_dir << '\n';
  return 0;
}

int cmd_calibrate(const CommonOpts& opts) {
  const RunConfig cfg = load_config(opts);
  const LogFormat format = log_format_from_string(opts.format);
  Artifacts art = load_artifacts(opts.models_dir, cfg);
  auto records = load_records(opts.data, format, cfg, &art.catalog);
  const auto splits = split(records, cfg.train_fraction, 1.0 - cfg.train_fraction, 0.0);
  const int stride = opts.stride > 0 ? opts.stride : cfg.calibrate_stride;
  const auto views = collect_views(splits.train, cfg, art.scaler,
                                   art.order.inverse(), stride);
  const ThresholdSet thresholds = calibrate_models(cfg, art.models, views);
  write_json_file(opts.thresholds, thresholds.to_json());
  std::cout << "calibrated on " << views.windows() << " windows; ensemble threshold "
            << thresholds.ensemble_threshold << '\n';
  return 0;
}

int cmd_detect(const CommonOpts& opts) {
  const RunConfig cfg = load_config(opts);
  const LogFormat format = log_format_from_string(opts.format);
  Artifacts art = load_artifacts(opts.models_dir, cfg);
  const ThresholdSet thresholds =
      ThresholdSet::from_json(read_json_file(opts.thresholds));
  auto records = load_records(opts.data, format, cfg, &art.catalog);
  const int stride = opts.stride > 0 ? opts.stride : cfg.detect_stride;

  std::ofstream out(opts.out, std::ios::binary);
  if (!out) throw DataError("cannot open " + opts.out + " for writing");
  out << "origin_step,time";
  for (size_t k = 1; k <= cfg.periods.size(); ++k) out << ",P_" << k;
  out << ",P_ens,attack\n";
  size_t rows = 0;
  // flushed per row so the file doubles as a primitive live alert feed
  detect_stream(records, cfg, art, thresholds, stride, [&](const Verdict& v) {
    out << v.origin_step << ',' << format_double(v.time);
    for (double s : v.ae_scores) out << ',' << format_double(s);
    out << ',' << format_double(v.ensemble) << ',' << (v.attack ? '1' : '0')
        << '\n';
    out.flush();
    ++rows;
  });
  std::cout << "wrote " << rows << " verdict(s) to " << opts.out << '\n';
  return 0;
}

int cmd_eval(const CommonOpts& opts) {
  const RunConfig cfg = load_config(opts);
  std::vector<double> budgets = opts.fpr_budgets;
  if (budgets.empty()) budgets = {0.001, 0.005, 0.01};

  std::vector<AttackRun> runs;
  std::vector<Verdict> clean_verdicts;
  bool has_clean = false;
  std::vector<fs::path> verdict_files;
  for (const auto& entry : fs::directory_iterator(opts.data)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("verdicts_", 0) == 0 && entry.path().extension() == ".csv") {
      verdict_files.push_back(entry.path());
    }
  }
  std::sort(verdict_files.begin(), verdict_files.end());
  for (const auto& vf : verdict_files) {
    const std::string stem = vf.stem().string().substr(9);  // after "verdicts_"
    if (stem == "clean") {
      clean_verdicts = read_verdicts_csv(vf.string()).first;
      has_clean = true;
      continue;
    }
    AttackRun run;
    run.name = stem;
    run.verdicts = read_verdicts_csv(vf.string()).first;
    const fs::path dir = vf.parent_path();
    const fs::path data_csv = dir / ("test_" + stem + ".csv");
    const fs::path events = dir / ("events_" + stem + ".json");
    if (!fs::exists(data_csv) || !fs::exists(events)) {
      throw MissingArtifacts("missing " + data_csv.string() + " or " +
                             events.string() + " next to " + vf.string());
    }
    run.records = load_records(data_csv.string(), LogFormat::canonical_csv, cfg,
                               nullptr);
    for (const auto& je : read_json_file(events.string())) {
      run.events.push_back(AttackEventTruth::from_json(je));
    }
    runs.push_back(std::move(run));
  }
  if (runs.empty() && !has_clean) {
    throw MissingArtifacts("no verdicts_*.csv found in " + opts.data);
  }

  const auto bundle =
      evaluate_runs(cfg, runs, has_clean ? &clean_verdicts : nullptr, budgets);
  write_bundle(opts.out, bundle);
  for (const auto& a : bundle.attacks) {
    std::cout << a.attack << ": ensemble AUC " << a.ensemble_auc << '\n';
  }
  if (bundle.has_clean) {
    std::cout << "clean positive rate " << bundle.clean_positive_rate << '\n';
  }
  std::cout << "report written to " << opts.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signal-level CAN intrusion detection toolkit"};
  app.require_subcommand(1);
  CommonOpts opts;
  std::string scenario_path;

  auto add_common = [&opts](CLI::App* cmd) {
    cmd->add_option("--seed", opts.seed, "Override the configured seed");
  };

  auto* synth = app.add_subcommand("synth", "Generate labeled synthetic traces");
  synth->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  synth->add_option("--out", opts.out, "Output directory")->required();
  add_common(synth);

  auto* train = app.add_subcommand("train", "Fit preprocessing and train the AEs");
  train->add_option("--config", opts.config_path, "RunConfig JSON")->required();
  train->add_option("--data", opts.data, "Clean training log")->required();
  train->add_option("--models-dir", opts.models_dir, "Artifact directory")->required();
  train->add_option("--format", opts.format, "syncan_csv or canonical_csv");
  train->add_option("--jobs", opts.jobs, "Parallel AE training threads");
  add_common(train);

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate detection thresholds");
  calibrate->add_option("--config", opts.config_path, "RunConfig JSON")->required();
  calibrate->add_option("--data", opts.data, "Clean training log")->required();
  calibrate->add_option("--models-dir", opts.models_dir, "Artifact directory")->required();
  calibrate->add_option("--thresholds", opts.thresholds, "Output thresholds JSON")->required();
  calibrate->add_option("--format", opts.format, "syncan_csv or canonical_csv");
  calibrate->add_option("--stride", opts.stride, "Calibration window stride");
  add_common(calibrate);

  auto* detect = app.add_subcommand("detect", "Stream a log through the detector");
  detect->add_option("--config", opts.config_path, "RunConfig JSON")->required();
  detect->add_option("--models-dir", opts.models_dir, "Artifact directory")->required();
  detect->add_option("--thresholds", opts.thresholds, "Thresholds JSON")->required();
  detect->add_option("--data", opts.data, "Log to score")->required();
  detect->add_option("--out", opts.out, "Verdicts CSV")->required();
  detect->add_option("--format", opts.format, "syncan_csv or canonical_csv");
  detect->add_option("--stride", opts.stride, "Scoring stride in steps");
  add_common(detect);

  auto* eval = app.add_subcommand("eval", "Score verdicts against ground truth");
  eval->add_option("--config", opts.config_path, "RunConfig JSON")->required();
  eval->add_option("--data", opts.data,
                   "Run directory with verdicts_*, test_*, events_*")->required();
  eval->add_option("--out", opts.out, "Report directory")->required();
  eval->add_option("--fpr-budget", opts.fpr_budgets, "FPR budget(s) for latency");
  add_common(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(opts, scenario_path);
    if (train->parsed()) return cmd_train(opts);
    if (calibrate->parsed()) return cmd_calibrate(opts);
    if (detect->parsed()) return cmd_detect(opts);
    if (eval->parsed()) return cmd_eval(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ArtifactError& e) {
    std::cerr << "artifact mismatch: " << e.what() << '\n';
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
