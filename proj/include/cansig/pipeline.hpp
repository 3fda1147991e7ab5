#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "cansig/attackgen.hpp"
#include "cansig/autoencoder.hpp"
#include "cansig/config.hpp"
#include "cansig/errors.hpp"
#include "cansig/ingest.hpp"
#include "cansig/metrics.hpp"
#include "cansig/order.hpp"
#include "cansig/queue.hpp"
#include "cansig/report.hpp"
#include "cansig/scaler.hpp"
#include "cansig/thresholds.hpp"

#include <json.hpp>

namespace cansig {

/// Everything the training phase persists and the deployment phase loads.
struct Artifacts {
  SignalCatalog catalog;
  MinMaxScaler scaler;
  SignalOrder order;
  std::vector<Autoencoder> models;  // aligned with RunConfig::periods
};

// --- preprocessing glue --------------------------------------------------

/// Scaled (queue row, value) pairs for one record: original signal indices
/// are scaled to [0,1] and mapped through the inverse permutation so that
/// correlated signals sit on adjacent image rows.
inline std::vector<std::pair<int, float>> to_queue_values(
    const SignalRecord& rec, const MinMaxScaler& scaler,
    const std::vector<int>& inverse_perm) {
  std::vector<std::pair<int, float>> out;
  out.reserve(rec.values.size());
  for (const auto& sv : rec.values) {
    out.emplace_back(inverse_perm[sv.index],
                     static_cast<float>(scaler.transform(sv.index, sv.value)));
  }
  return out;
}

/// Dense forward-filled signal series (scaled, original index order) for
/// correlation analysis. Sampling starts once every signal has reported and
/// strides so the series stays at a workable length.
inline Matrix<double> forward_filled_series(const std::vector<SignalRecord>& records,
                                            const MinMaxScaler& scaler, int m,
                                            int max_cols = 20000) {
  std::vector<double> current(m, 0.5);
  std::vector<bool> seen(m, false);
  std::vector<std::vector<double>> columns;
  size_t first_ready = records.size();
  int ready_count = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    for (const auto& sv : records[i].values) {
      if (!seen[sv.index]) {
        seen[sv.index] = true;
        ++ready_count;
      }
      current[sv.index] = scaler.transform(sv.index, sv.value);
    }
    if (ready_count == m) {
      first_ready = i;
      break;
    }
  }
  if (first_ready == records.size()) {
    throw DegenerateInput("not every signal reports in the training data");
  }
  const size_t usable = records.size() - first_ready;
  const size_t stride = std::max<size_t>(1, usable / static_cast<size_t>(max_cols));
  for (size_t i = first_ready; i < records.size(); ++i) {
    for (const auto& sv : records[i].values) {
      current[sv.index] = scaler.transform(sv.index, sv.value);
    }
    if ((i - first_ready) % stride == 0) columns.push_back(current);
  }
  if (columns.size() < 2) {
    throw DegenerateInput("too few samples for correlation analysis");
  }
  Matrix<double> series(m, static_cast<int>(columns.size()));
  for (size_t j = 0; j < columns.size(); ++j) {
    for (int i = 0; i < m; ++i) {
      series.at(i, static_cast<int>(j)) = columns[j][i];
    }
  }
  return series;
}

/// Per-period view batches sampled from one streaming pass over the records.
struct ViewBatches {
  std::vector<std::vector<Matrix<float>>> per_period;

  size_t windows() const {
    return per_period.empty() ? 0 : per_period.front().size();
  }
};

inline ViewBatches collect_views(const std::vector<SignalRecord>& records,
                                 const RunConfig& cfg, const MinMaxScaler& scaler,
                                 const std::vector<int>& inverse_perm, int stride) {
  ViewBatches batches;
  batches.per_period.resize(cfg.periods.size());
  DataQueue queue(cfg.m, cfg.queue_depth());
  for (const auto& rec : records) {
    queue.push(to_queue_values(rec, scaler, inverse_perm), rec.attack);
    const long long step = queue.steps() - 1;
    if (!queue.warmed_up() || step % stride != 0) continue;
    auto views = queue.sample_views(cfg.periods, cfg.w);
    for (size_t k = 0; k < views.size(); ++k) {
      batches.per_period[k].push_back(std::move(views[k].grid));
    }
  }
  return batches;
}

// --- training phase -------------------------------------------------------

/// Fit the scaler, the correlation-clustered row order, and the catalog.
inline Artifacts fit_preprocessing(const std::vector<SignalRecord>& records,
                                   const RunConfig& cfg) {
  Artifacts art;
  art.catalog = build_catalog(records, cfg.m);
  art.scaler = MinMaxScaler::fit(records, cfg.m);
  art.order = fit_order(forward_filled_series(records, art.scaler, cfg.m));
  return art;
}

/// Train one AE per sampling period, independently and in parallel.
inline std::vector<Autoencoder> train_models(const RunConfig& cfg,
                                             const ViewBatches& train_views,
                                             const ViewBatches& val_views) {
  const size_t n = cfg.periods.size();
  std::vector<Autoencoder> models;
  models.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    AeConfig ac = cfg.ae_config();
    ac.seed = cfg.seed + static_cast<uint32_t>(k);
    models.emplace_back(ac, cfg.periods[k]);
  }
  unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                               : std::min<unsigned>(
                                     static_cast<unsigned>(n),
                                     std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));

  std::vector<std::exception_ptr> errors(n);
  auto worker = [&](size_t k) {
    try {
      static const std::vector<Matrix<float>> kEmpty;
      const auto& val =
          val_views.per_period.empty() ? kEmpty : val_views.per_period[k];
      models[k].train(train_views.per_period[k], val);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (jobs <= 1) {
    for (size_t k = 0; k < n; ++k) worker(k);
  } else {
    std::vector<std::thread> threads;
    std::atomic<size_t> next{0};
    for (unsigned t = 0; t < jobs; ++t) {
      threads.emplace_back([&] {
        for (size_t k = next.fetch_add(1); k < n; k = next.fetch_add(1)) {
          worker(k);
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return models;
}

// --- calibration ----------------------------------------------------------

/// Staged threshold calibration in the equations' order: per-signal loss
/// thresholds on the pooled training losses, then violation counts with the
/// final loss thresholds, then per-signal count thresholds, then per-window
/// ensemble scores, then the scalar ensemble threshold.
inline ThresholdSet calibrate_models(const RunConfig& cfg,
                                     std::vector<Autoencoder>& models,
                                     const ViewBatches& calib_views) {
  ThresholdSet set;
  set.signal_count = cfg.m;
  set.view_width = cfg.w;
  set.percentiles = cfg.percentiles;

  const size_t n_windows = calib_views.windows();
  std::vector<std::vector<double>> ae_scores(models.size());
  for (size_t k = 0; k < models.size(); ++k) {
    auto& model = models[k];
    const auto& views = calib_views.per_period[k];
    auto ws = model.make_workspace();
    std::vector<Matrix<float>> losses;
    losses.reserve(views.size());
    for (const auto& v : views) {
      losses.push_back(reconstruction_loss(v, model.reconstruct(v, ws)));
    }
    AeThresholds t;
    t.period = model.period();
    t.loss = calibrate_loss_thresholds(losses, cfg.percentiles.loss);

    std::vector<std::vector<int>> counts;
    counts.reserve(losses.size());
    for (const auto& lm : losses) {
      counts.push_back(violation_counts(lm, t.loss));
    }
    t.violation = calibrate_time_thresholds(counts, cfg.percentiles.violation);

    auto& scores = ae_scores[k];
    scores.reserve(losses.size());
    for (const auto& lm : losses) {
      scores.push_back(score_step1(lm, t.loss, t.violation).score);
    }
    set.per_ae.push_back(std::move(t));
  }

  std::vector<double> ens(n_windows, 0.0);
  for (size_t w = 0; w < n_windows; ++w) {
    std::vector<double> per_ae(models.size());
    for (size_t k = 0; k < models.size(); ++k) per_ae[k] = ae_scores[k][w];
    ens[w] = ensemble_score(per_ae);
  }
  set.ensemble_threshold =
      calibrate_ensemble_threshold(ens, cfg.percentiles.ensemble);
  return set;
}

// --- deployment phase -------------------------------------------------------

using VerdictSink = std::function<void(const Verdict&)>;

/// Stream records through the queue, the AEs, and the threshold stages.
/// One verdict per sampled step once the queue is warmed up.
inline void detect_stream(const std::vector<SignalRecord>& records,
                          const RunConfig& cfg, const Artifacts& art,
                          const ThresholdSet& thresholds, int stride,
                          const VerdictSink& sink) {
  if (thresholds.signal_count != cfg.m || thresholds.view_width != cfg.w ||
      thresholds.per_ae.size() != cfg.periods.size()) {
    throw ArtifactMismatch("threshold set does not match the run config");
  }
  for (size_t k = 0; k < cfg.periods.size(); ++k) {
    if (thresholds.per_ae[k].period != cfg.periods[k]) {
      throw ArtifactMismatch("threshold periods do not match the run config");
    }
  }
  const auto inverse_perm = art.order.inverse();
  DataQueue queue(cfg.m, cfg.queue_depth());
  std::vector<Autoencoder::Workspace> workspaces;
  workspaces.reserve(art.models.size());
  for (const auto& model : art.models) {
    workspaces.push_back(model.make_workspace());
  }
  for (const auto& rec : records) {
    queue.push(to_queue_values(rec, art.scaler, inverse_perm), rec.attack);
    const long long step = queue.steps() - 1;
    if (!queue.warmed_up() || step % stride != 0) continue;
    const auto views = queue.sample_views(cfg.periods, cfg.w);
    Verdict v;
    v.origin_step = step;
    v.time = rec.time;
    v.ae_scores.resize(art.models.size());
    v.signal_flags.assign(cfg.m, 0);
    for (size_t k = 0; k < art.models.size(); ++k) {
      const auto reconstruction =
          art.models[k].reconstruct(views[k].grid, workspaces[k]);
      const auto loss = reconstruction_loss(views[k].grid, reconstruction);
      const auto s = score_step1(loss, thresholds.per_ae[k].loss,
                                 thresholds.per_ae[k].violation);
      v.ae_scores[k] = s.score;
      for (int i = 0; i < cfg.m; ++i) v.signal_flags[i] |= s.flags[i];
    }
    v.ensemble = ensemble_score(v.ae_scores);
    v.attack = decide(v.ensemble, thresholds.ensemble_threshold);
    sink(v);
  }
}

// --- artifact persistence ----------------------------------------------------

inline nlohmann::json catalog_to_json(const SignalCatalog& cat) {
  nlohmann::json ids = nlohmann::json::object();
  for (const auto& [id, sigs] : cat.id_to_signals) ids[id] = sigs;
  return nlohmann::json{{"m", cat.signal_count},
                        {"ids", ids},
                        {"names", cat.signal_names},
                        {"range_min", cat.range_min},
                        {"range_max", cat.range_max},
                        {"constant", cat.constant}};
}

inline SignalCatalog catalog_from_json(const nlohmann::json& j) {
  SignalCatalog cat;
  cat.signal_count = j.at("m").get<int>();
  for (const auto& [id, sigs] : j.at("ids").items()) {
    cat.id_to_signals[id] = sigs.get<std::vector<int>>();
  }
  cat.signal_names = j.at("names").get<std::vector<std::string>>();
  cat.range_min = j.at("range_min").get<std::vector<double>>();
  cat.range_max = j.at("range_max").get<std::vector<double>>();
  cat.constant = j.at("constant").get<std::vector<bool>>();
  return cat;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactMismatch(path + ": " + e.what());
  }
  return j;
}

inline std::string model_filename(int period) {
  return "model_T" + std::to_string(period) + ".bin";
}

inline void save_artifacts(const std::string& dir, const Artifacts& art) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_json_file(dir + "/catalog.json", catalog_to_json(art.catalog));
  write_json_file(dir + "/scaler.json", art.scaler.to_json());
  write_json_file(dir + "/order.json", art.order.to_json());
  for (const auto& model : art.models) {
    model.save(dir + "/" + model_filename(model.period()));
  }
}

inline Artifacts load_artifacts(const std::string& dir, const RunConfig& cfg) {
  Artifacts art;
  art.catalog = catalog_from_json(read_json_file(dir + "/catalog.json"));
  if (art.catalog.signal_count != cfg.m) {
    throw ArtifactMismatch("artifacts built for m=" +
                           std::to_string(art.catalog.signal_count) +
                           ", config says m=" + std::to_string(cfg.m));
  }
  art.scaler = MinMaxScaler::from_json(read_json_file(dir + "/scaler.json"));
  if (art.scaler.signal_count() != cfg.m) {
    throw ArtifactMismatch("scaler length does not match m");
  }
  art.order = SignalOrder::from_json(read_json_file(dir + "/order.json"));
  if (static_cast<int>(art.order.permutation.size()) != cfg.m) {
    throw ArtifactMismatch("signal order length does not match m");
  }
  const AeConfig ac = cfg.ae_config();
  for (int period : cfg.periods) {
    art.models.push_back(
        Autoencoder::load(dir + "/" + model_filename(period), ac, period));
  }
  return art;
}

// --- verdict CSV ---------------------------------------------------------

inline void write_verdicts_csv(const std::string& path,
                               const std::vector<Verdict>& verdicts, size_t n_ae) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "origin_step,time";
  for (size_t k = 1; k <= n_ae; ++k) out << ",P_" << k;
  out << ",P_ens,attack\n";
  for (const auto& v : verdicts) {
    out << v.origin_step << ',' << format_double(v.time);
    for (double s : v.ae_scores) out << ',' << format_double(s);
    out << ',' << format_double(v.ensemble) << ',' << (v.attack ? '1' : '0')
        << '\n';
  }
}

/// Returns the verdicts and the AE count implied by the header.
inline std::pair<std::vector<Verdict>, size_t> read_verdicts_csv(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty verdicts file");
  const auto header = split_csv(strip_cr(line));
  if (header.size() < 5 || header[0] != "origin_step" || header[1] != "time") {
    throw DataError(path + ": not a verdicts file");
  }
  const size_t n_ae = header.size() - 4;
  std::vector<Verdict> verdicts;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto sv = strip_cr(line);
    if (sv.empty()) continue;
    const auto cells = split_csv(sv);
    if (cells.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad row");
    }
    Verdict v;
    v.origin_step = std::stoll(std::string(cells[0]));
    v.time = parse_double(cells[1]).value_or(0.0);
    for (size_t k = 0; k < n_ae; ++k) {
      v.ae_scores.push_back(parse_double(cells[2 + k]).value_or(0.0));
    }
    v.ensemble = parse_double(cells[2 + n_ae]).value_or(0.0);
    v.attack = cells[3 + n_ae] == "1";
    verdicts.push_back(std::move(v));
  }
  return {std::move(verdicts), n_ae};
}

// --- evaluation assembly ----------------------------------------------------

/// One attack trace's inputs to the evaluation: the verdicts produced by the
/// detector, the test records (for labels and timestamps), and the ground
/// truth events.
struct AttackRun {
  std::string name;
  std::vector<Verdict> verdicts;
  std::vector<SignalRecord> records;
  std::vector<AttackEventTruth> events;
};

/// A window is malicious when any step its views cover carries an attack
/// label or intersects a ground-truth event interval (the latter is what
/// marks suppression windows, which remove records instead of relabeling).
inline std::vector<uint8_t> window_truths(const AttackRun& run, long long cover) {
  std::vector<long long> cum(run.records.size() + 1, 0);
  for (size_t i = 0; i < run.records.size(); ++i) {
    cum[i + 1] = cum[i] + (run.records[i].attack ? 1 : 0);
  }
  std::vector<uint8_t> truths(run.verdicts.size(), 0);
  for (size_t i = 0; i < run.verdicts.size(); ++i) {
    const long long origin = run.verdicts[i].origin_step;
    const long long lo = std::max<long long>(0, origin - cover + 1);
    bool truth = false;
    if (origin < static_cast<long long>(run.records.size())) {
      truth = cum[origin + 1] - cum[lo] > 0;
    }
    if (!truth) {
      for (const auto& ev : run.events) {
        if (origin >= ev.start_index && lo <= ev.end_index) {
          truth = true;
          break;
        }
      }
    }
    truths[i] = truth ? 1 : 0;
  }
  return truths;
}

/// Assemble the full evaluation bundle: per-attack ROC/AUC for each AE and
/// the ensemble, operating thresholds at each FPR budget chosen on pooled
/// benign windows, and per-event latency at those thresholds.
inline EvaluationBundle evaluate_runs(const RunConfig& cfg,
                                      const std::vector<AttackRun>& attacks,
                                      const std::vector<Verdict>* clean_verdicts,
                                      const std::vector<double>& budgets) {
  EvaluationBundle bundle;
  bundle.periods = cfg.periods;
  const long long cover = cfg.queue_depth();

  std::vector<ScoredWindow> pooled_benign;
  struct PreparedRun {
    const AttackRun* run;
    std::vector<uint8_t> truths;
  };
  std::vector<PreparedRun> prepared;
  for (const auto& run : attacks) {
    PreparedRun p{&run, window_truths(run, cover)};
    for (size_t i = 0; i < run.verdicts.size(); ++i) {
      if (!p.truths[i]) {
        pooled_benign.push_back(
            {run.verdicts[i].origin_step, run.verdicts[i].ensemble, false});
      }
    }
    prepared.push_back(std::move(p));
  }
  if (clean_verdicts) {
    for (const auto& v : *clean_verdicts) {
      pooled_benign.push_back({v.origin_step, v.ensemble, false});
    }
  }

  std::map<double, double> budget_thresholds;
  for (double b : budgets) {
    budget_thresholds[b] = threshold_at_fpr(pooled_benign, b);
  }

  for (const auto& p : prepared) {
    const auto& run = *p.run;
    AttackEvaluation eval;
    eval.attack = run.name;

    std::vector<ScoredWindow> ens_windows(run.verdicts.size());
    for (size_t i = 0; i < run.verdicts.size(); ++i) {
      ens_windows[i] = {run.verdicts[i].origin_step, run.verdicts[i].ensemble,
                        p.truths[i] != 0};
    }
    eval.ensemble_roc = roc(ens_windows);
    eval.ensemble_auc = eval.ensemble_roc.auc;

    const size_t n_ae = run.verdicts.empty() ? cfg.periods.size()
                                             : run.verdicts.front().ae_scores.size();
    for (size_t k = 0; k < n_ae; ++k) {
      std::vector<ScoredWindow> ws(run.verdicts.size());
      for (size_t i = 0; i < run.verdicts.size(); ++i) {
        ws[i] = {run.verdicts[i].origin_step, run.verdicts[i].ae_scores[k],
                 p.truths[i] != 0};
      }
      eval.per_ae_auc.push_back(roc(ws).auc);
    }

    std::vector<AttackEvent> events;
    for (const auto& ev : run.events) {
      events.push_back({ev.kind, ev.start_index, ev.end_index});
    }
    std::vector<double> step_times(run.records.size());
    for (size_t i = 0; i < run.records.size(); ++i) {
      step_times[i] = run.records[i].time;
    }
    for (const auto& [budget, thr] : budget_thresholds) {
      eval.thresholds[budget] = thr;
      eval.latency[budget] =
          event_latency(ens_windows, events, thr, cover, step_times);
    }
    bundle.attacks.push_back(std::move(eval));
  }

  if (clean_verdicts) {
    bundle.has_clean = true;
    size_t positives = 0;
    for (const auto& v : *clean_verdicts) {
      if (v.attack) ++positives;
    }
    bundle.clean_positive_rate =
        clean_verdicts->empty()
            ? 0.0
            : static_cast<double>(positives) / clean_verdicts->size();
    bundle.clean_thresholds = budget_thresholds;
  }
  return bundle;
}

inline void write_bundle(const std::string& dir, const EvaluationBundle& bundle) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  if (!bundle.attacks.empty()) {
    write_auc_csv(dir + "/auc.csv", bundle);
    write_latency_csv(dir + "/latency.csv", bundle);
    for (const auto& a : bundle.attacks) {
      write_roc_csv(dir + "/roc_" + a.attack + ".csv", a.ensemble_roc);
    }
  }
  if (bundle.has_clean) {
    write_fpr_csv(dir + "/fpr.csv", bundle);
  }
  write_report_svg(dir + "/report.svg", bundle);
}

// --- synthetic scenario generation -----------------------------------------

/// Output of one synthesized scenario: the clean training file plus one
/// labeled test file and ground-truth event list per attack.
struct SynthResult {
  std::string train_csv;
  std::vector<std::string> test_csvs;
  std::vector<std::string> event_files;
};

inline SynthResult run_synth(const Scenario& scenario, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const int m = scenario.traffic.signal_count();
  SynthResult result;

  TrafficSpec train_spec = scenario.traffic;
  train_spec.duration_steps = scenario.train_duration_steps;
  const auto train_trace = synth_normal(train_spec);
  result.train_csv = out_dir + "/train.csv";
  write_canonical(result.train_csv, strip_timing(train_trace), m);

  std::map<std::string, int> kind_counts;
  for (size_t k = 0; k < scenario.attacks.size(); ++k) {
    const auto& attack = scenario.attacks[k];
    TrafficSpec test_spec = scenario.traffic;
    test_spec.seed =
        scenario.traffic.seed ^ (0x9e3779b97f4a7c15ull * (k + 1));
    const auto base = synth_normal(test_spec);
    AttackEventTruth event;
    const auto attacked = apply_attack(base, test_spec, attack, &event);

    std::string name = attack_kind_name(attack.kind);
    const int count = ++kind_counts[name];
    if (count > 1) name += "_" + std::to_string(count);

    const std::string csv = out_dir + "/test_" + name + ".csv";
    write_canonical(csv, strip_timing(attacked), m);
    result.test_csvs.push_back(csv);

    nlohmann::json events = nlohmann::json::array();
    events.push_back(event.to_json());
    const std::string evpath = out_dir + "/events_" + name + ".json";
    write_json_file(evpath, events);
    result.event_files.push_back(evpath);
  }
  return result;
}

}  // namespace cansig
