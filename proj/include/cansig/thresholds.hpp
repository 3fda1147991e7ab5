#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cansig/errors.hpp"
#include "cansig/matrix.hpp"
#include "cansig/stats.hpp"

#include <json.hpp>

namespace cansig {

/// Confidence percentiles for the three threshold tiers: per-signal loss,
/// per-signal violation count, and the ensemble score.
struct DetectionPercentiles {
  double loss = 95.0;       // p
  double violation = 99.0;  // q_pct
  double ensemble = 99.0;   // r
};

inline constexpr size_t kMinCalibrationWindows = 100;

/// Thresholds of one autoencoder: a loss threshold and a violation-count
/// threshold per signal row.
struct AeThresholds {
  int period = 1;
  std::vector<double> loss;       // length m, >= 0
  std::vector<double> violation;  // length m, in [0, w]
};

/// Full calibrated detector state: per-AE threshold tiers plus the scalar
/// ensemble threshold.
struct ThresholdSet {
  int signal_count = 0;  // m
  int view_width = 0;    // w
  DetectionPercentiles percentiles;
  std::vector<AeThresholds> per_ae;
  double ensemble_threshold = 0.0;  // in [0, 1]

  nlohmann::json to_json() const {
    nlohmann::json ja = nlohmann::json::array();
    for (const auto& t : per_ae) {
      ja.push_back({{"period", t.period},
                    {"loss", t.loss},
                    {"violation", t.violation}});
    }
    return nlohmann::json{
        {"m", signal_count},
        {"w", view_width},
        {"percentiles",
         {{"loss", percentiles.loss},
          {"violation", percentiles.violation},
          {"ensemble", percentiles.ensemble}}},
        {"per_ae", ja},
        {"ensemble_threshold", ensemble_threshold}};
  }

  static ThresholdSet from_json(const nlohmann::json& j) {
    ThresholdSet t;
    t.signal_count = j.at("m").get<int>();
    t.view_width = j.at("w").get<int>();
    t.percentiles.loss = j.at("percentiles").at("loss").get<double>();
    t.percentiles.violation = j.at("percentiles").at("violation").get<double>();
    t.percentiles.ensemble = j.at("percentiles").at("ensemble").get<double>();
    for (const auto& ja : j.at("per_ae")) {
      AeThresholds a;
      a.period = ja.at("period").get<int>();
      a.loss = ja.at("loss").get<std::vector<double>>();
      a.violation = ja.at("violation").get<std::vector<double>>();
      if (static_cast<int>(a.loss.size()) != t.signal_count ||
          static_cast<int>(a.violation.size()) != t.signal_count) {
        throw ArtifactMismatch("thresholds: per-signal vector length mismatch");
      }
      t.per_ae.push_back(std::move(a));
    }
    t.ensemble_threshold = j.at("ensemble_threshold").get<double>();
    return t;
  }
};

/// Per-signal loss thresholds: the p-th percentile of all loss values in a
/// signal's row, pooled over every training window and every column.
inline std::vector<double> calibrate_loss_thresholds(
    const std::vector<Matrix<float>>& training_losses, double p) {
  if (training_losses.size() < kMinCalibrationWindows) {
    throw InsufficientData("loss calibration needs >= " +
                           std::to_string(kMinCalibrationWindows) +
                           " windows, got " +
                           std::to_string(training_losses.size()));
  }
  const int m = training_losses.front().rows();
  const int w = training_losses.front().cols();
  std::vector<double> thresholds(m);
  std::vector<float> pool;
  pool.reserve(training_losses.size() * static_cast<size_t>(w));
  for (int i = 0; i < m; ++i) {
    pool.clear();
    for (const auto& lm : training_losses) {
      const float* row = lm.row(i);
      pool.insert(pool.end(), row, row + w);
    }
    thresholds[i] = percentile(pool, p);
  }
  return thresholds;
}

/// Per-signal counts of columns whose loss exceeds the signal's threshold
/// (strict inequality).
inline std::vector<int> violation_counts(const Matrix<float>& loss,
                                         const std::vector<double>& loss_thresholds) {
  if (loss.rows() != static_cast<int>(loss_thresholds.size())) {
    throw ShapeMismatch("violation_counts: row count != threshold count");
  }
  std::vector<int> counts(loss.rows(), 0);
  for (int i = 0; i < loss.rows(); ++i) {
    const float* row = loss.row(i);
    const double thr = loss_thresholds[i];
    int c = 0;
    for (int j = 0; j < loss.cols(); ++j) {
      if (static_cast<double>(row[j]) > thr) ++c;
    }
    counts[i] = c;
  }
  return counts;
}

/// Per-signal violation-count thresholds: the q-th percentile of each
/// signal's violation counts across training windows (counts produced with
/// the final loss thresholds).
inline std::vector<double> calibrate_time_thresholds(
    const std::vector<std::vector<int>>& training_counts, double q_pct) {
  if (training_counts.size() < kMinCalibrationWindows) {
    throw InsufficientData("violation calibration needs >= " +
                           std::to_string(kMinCalibrationWindows) +
                           " windows, got " +
                           std::to_string(training_counts.size()));
  }
  const size_t m = training_counts.front().size();
  std::vector<double> thresholds(m);
  std::vector<int> column(training_counts.size());
  for (size_t i = 0; i < m; ++i) {
    for (size_t k = 0; k < training_counts.size(); ++k) {
      column[k] = training_counts[k][i];
    }
    thresholds[i] = percentile(column, q_pct);
  }
  return thresholds;
}

/// Step-1 scoring of one loss matrix: binary violations, per-signal counts,
/// compromised-signal flags, and the AE's anomaly score (fraction of
/// flagged signals). All comparisons are strict; ties are benign.
struct StepScore {
  Matrix<uint8_t> binary;       // B: loss above per-signal threshold
  std::vector<int> violations;  // V: per-signal count of violating columns
  std::vector<uint8_t> flags;   // S: violation count above per-signal threshold
  double score = 0.0;           // fraction of flagged signals, in {0, 1/m, ..., 1}
};

inline StepScore score_step1(const Matrix<float>& loss,
                             const std::vector<double>& loss_thresholds,
                             const std::vector<double>& violation_thresholds) {
  const int m = loss.rows();
  const int w = loss.cols();
  if (m != static_cast<int>(loss_thresholds.size()) ||
      m != static_cast<int>(violation_thresholds.size())) {
    throw ShapeMismatch("score_step1: threshold lengths != loss rows");
  }
  StepScore s;
  s.binary = Matrix<uint8_t>(m, w, 0);
  s.violations.assign(m, 0);
  s.flags.assign(m, 0);
  int flagged = 0;
  for (int i = 0; i < m; ++i) {
    const float* row = loss.row(i);
    uint8_t* brow = s.binary.row(i);
    const double thr = loss_thresholds[i];
    int count = 0;
    for (int j = 0; j < w; ++j) {
      if (static_cast<double>(row[j]) > thr) {
        brow[j] = 1;
        ++count;
      }
    }
    s.violations[i] = count;
    if (static_cast<double>(count) > violation_thresholds[i]) {
      s.flags[i] = 1;
      ++flagged;
    }
  }
  s.score = static_cast<double>(flagged) / static_cast<double>(m);
  return s;
}

/// Arithmetic mean of the per-AE anomaly scores.
inline double ensemble_score(const std::vector<double>& scores) {
  if (scores.empty()) throw EmptyScores("ensemble of zero scores");
  double s = 0.0;
  for (double v : scores) s += v;
  return s / static_cast<double>(scores.size());
}

/// The r-th percentile of training-time ensemble scores.
inline double calibrate_ensemble_threshold(const std::vector<double>& training_scores,
                                           double r) {
  if (training_scores.size() < kMinCalibrationWindows) {
    throw InsufficientData("ensemble calibration needs >= " +
                           std::to_string(kMinCalibrationWindows) +
                           " scores, got " +
                           std::to_string(training_scores.size()));
  }
  return percentile(training_scores, r);
}

/// Attack iff the ensemble score strictly exceeds the threshold.
inline bool decide(double ensemble, double threshold) {
  return ensemble > threshold;
}

/// Ensemble outcome for one window.
struct Verdict {
  long long origin_step = 0;
  double time = 0.0;
  std::vector<double> ae_scores;        // P_1..P_n
  double ensemble = 0.0;                // P_ens
  std::vector<uint8_t> signal_flags;    // OR of per-AE flags, diagnostics only
  bool attack = false;
};

}  // namespace cansig
