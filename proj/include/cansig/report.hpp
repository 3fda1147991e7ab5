#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cansig/csv.hpp"
#include "cansig/errors.hpp"
#include "cansig/metrics.hpp"

namespace cansig {

/// Evaluation results of one attack trace.
struct AttackEvaluation {
  std::string attack;
  std::vector<double> per_ae_auc;  // one per sampling period
  double ensemble_auc = 0.0;
  RocCurve ensemble_roc;
  // per FPR budget: operating threshold and latency summary
  std::map<double, double> thresholds;
  std::map<double, LatencySummary> latency;
};

struct EvaluationBundle {
  std::vector<int> periods;
  std::vector<AttackEvaluation> attacks;
  // benign-only positive rate at the calibrated ensemble threshold, when a
  // clean trace was evaluated
  bool has_clean = false;
  double clean_positive_rate = 0.0;
  std::map<double, double> clean_thresholds;  // budget -> threshold
};

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

}  // namespace detail

inline void write_auc_csv(const std::string& path, const EvaluationBundle& bundle) {
  auto out = detail::open_out(path);
  out << "attack";
  for (int p : bundle.periods) out << ",auc_T" << p;
  out << ",auc_ensemble\n";
  for (const auto& a : bundle.attacks) {
    out << a.attack;
    for (double auc : a.per_ae_auc) out << ',' << format_double(auc);
    out << ',' << format_double(a.ensemble_auc) << '\n';
  }
}

inline void write_roc_csv(const std::string& path, const RocCurve& curve) {
  auto out = detail::open_out(path);
  out << "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    out << format_double(p.threshold) << ',' << format_double(p.fpr) << ','
        << format_double(p.tpr) << '\n';
  }
}

inline void write_latency_csv(const std::string& path,
                              const EvaluationBundle& bundle) {
  auto out = detail::open_out(path);
  out << "attack,fpr_budget,threshold,mean_latency_steps,mean_latency_s,detected,missed\n";
  for (const auto& a : bundle.attacks) {
    for (const auto& [budget, summary] : a.latency) {
      out << a.attack << ',' << format_double(budget) << ','
          << format_double(a.thresholds.at(budget)) << ','
          << format_double(summary.mean_latency_steps) << ','
          << format_double(summary.mean_latency_seconds) << ','
          << (summary.events.size() - summary.missed) << ',' << summary.missed
          << '\n';
    }
  }
}

inline void write_fpr_csv(const std::string& path, const EvaluationBundle& bundle) {
  auto out = detail::open_out(path);
  out << "metric,value\n";
  out << "positive_rate," << format_double(bundle.clean_positive_rate) << '\n';
  for (const auto& [budget, thr] : bundle.clean_thresholds) {
    out << "threshold_at_" << format_double(budget) << ',' << format_double(thr)
        << '\n';
  }
}

/// Minimal standalone SVG: one ROC polyline per attack plus the chance
/// diagonal. No external tooling needed to view the report.
inline void write_report_svg(const std::string& path,
                             const EvaluationBundle& bundle) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  const int size = 520, margin = 50;
  const int plot = size - 2 * margin;
  auto sx = [&](double fpr) { return margin + fpr * plot; };
  auto sy = [&](double tpr) { return size - margin - tpr * plot; };

  auto out = detail::open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
      << "\" height=\"" << size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1)
      << "\" y2=\"" << sy(0) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(0)
      << "\" y2=\"" << sy(1) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1)
      << "\" y2=\"" << sy(1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4\"/>\n";
  out << "<text x=\"" << size / 2 << "\" y=\"" << size - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">false positive rate</text>\n";
  out << "<text x=\"14\" y=\"" << size / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 "
      << size / 2 << ")\">true positive rate</text>\n";
  int ci = 0;
  for (const auto& a : bundle.attacks) {
    const char* color = kColors[ci % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : a.ensemble_roc.points) {
      out << sx(p.fpr) << ',' << sy(p.tpr) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << size - margin - 150 << "\" y=\""
        << margin + 16 * ci + 10 << "\" font-size=\"12\" fill=\"" << color
        << "\">" << a.attack << " (AUC " << format_double(a.ensemble_auc)
        << ")</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace cansig
