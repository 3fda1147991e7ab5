#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cansig/errors.hpp"

namespace cansig {

/// One scored detection window. Truth comes from ground-truth labels only.
struct ScoredWindow {
  long long origin_step = 0;
  double score = 0.0;  // P_ens (or a single AE's score when evaluating it)
  bool truth = false;
};

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // sorted by fpr, (0,0) .. (1,1)
  double auc = 0.0;
};

/// Threshold sweep over the distinct scores, strict-> decision rule,
/// trapezoid AUC. Requires both classes present.
inline RocCurve roc(const std::vector<ScoredWindow>& windows) {
  size_t pos = 0, neg = 0;
  for (const auto& w : windows) {
    (w.truth ? pos : neg)++;
  }
  if (pos == 0 || neg == 0) {
    throw SingleClass("roc: need both classes, got " + std::to_string(pos) +
                      " positive / " + std::to_string(neg) + " negative");
  }
  std::vector<ScoredWindow> sorted = windows;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredWindow& a, const ScoredWindow& b) {
              return a.score > b.score;
            });

  RocCurve curve;
  curve.points.push_back({sorted.front().score, 0.0, 0.0});
  size_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    const double s = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == s) {
      (sorted[i].truth ? tp : fp)++;
      ++i;
    }
    // decision rule "score > threshold"; any threshold in [next, s) yields
    // this operating point, and below the minimum score everything is flagged
    const double next = i < sorted.size() ? sorted[i].score : s - 1.0;
    curve.points.push_back({next, static_cast<double>(fp) / neg,
                            static_cast<double>(tp) / pos});
  }
  double auc = 0.0;
  for (size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  curve.auc = auc;
  return curve;
}

/// Most sensitive operating point within an FPR budget: the smallest
/// observed benign score whose strict-> false-positive rate stays within
/// the budget.
inline double threshold_at_fpr(const std::vector<ScoredWindow>& windows,
                               double budget) {
  if (budget <= 0.0 || budget > 1.0) {
    throw ConfigError("fpr budget must be in (0, 1]");
  }
  std::vector<double> benign;
  for (const auto& w : windows) {
    if (!w.truth) benign.push_back(w.score);
  }
  if (benign.empty()) {
    throw Unattainable("no benign windows to calibrate an FPR threshold");
  }
  std::sort(benign.begin(), benign.end());
  const size_t n = benign.size();
  // candidates ascending; fpr(v) = #(scores > v) / n is non-increasing in v
  for (size_t i = 0; i < n; ++i) {
    if (i > 0 && benign[i] == benign[i - 1]) continue;
    size_t above = n - (std::upper_bound(benign.begin(), benign.end(), benign[i]) -
                        benign.begin());
    if (static_cast<double>(above) / static_cast<double>(n) <= budget) {
      return benign[i];
    }
  }
  return benign.back();
}

/// Ground-truth attack event, in detector step indices.
struct AttackEvent {
  std::string kind;
  long long start_step = 0;
  long long end_step = 0;  // inclusive
};

struct EventLatency {
  AttackEvent event;
  bool missed = true;
  long long latency_steps = 0;
  double latency_seconds = 0.0;
};

struct LatencySummary {
  std::vector<EventLatency> events;
  size_t missed = 0;
  double mean_latency_steps = 0.0;   // over detected events only
  double mean_latency_seconds = 0.0;
};

/// Per-event detection delay: the gap between the event's first attack step
/// and the origin of the first window that both covers part of the event
/// and scores above the threshold. Windows cover the last `cover_steps`
/// steps up to their origin. Missed events are excluded from the mean but
/// always counted.
inline LatencySummary event_latency(const std::vector<ScoredWindow>& windows,
                                    const std::vector<AttackEvent>& events,
                                    double threshold, long long cover_steps,
                                    const std::vector<double>& step_times) {
  std::vector<ScoredWindow> sorted = windows;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredWindow& a, const ScoredWindow& b) {
              return a.origin_step < b.origin_step;
            });
  LatencySummary summary;
  double sum_steps = 0.0, sum_seconds = 0.0;
  size_t detected = 0;
  for (const auto& ev : events) {
    EventLatency el;
    el.event = ev;
    for (const auto& w : sorted) {
      if (w.score <= threshold) continue;
      const long long cover_lo = w.origin_step - cover_steps + 1;
      if (w.origin_step < ev.start_step) continue;
      if (cover_lo > ev.end_step) break;  // windows are sorted; no later hit covers
      el.missed = false;
      el.latency_steps = w.origin_step - ev.start_step;
      if (ev.start_step < static_cast<long long>(step_times.size()) &&
          w.origin_step < static_cast<long long>(step_times.size())) {
        el.latency_seconds =
            step_times[w.origin_step] - step_times[ev.start_step];
      }
      break;
    }
    if (el.missed) {
      ++summary.missed;
    } else {
      sum_steps += static_cast<double>(el.latency_steps);
      sum_seconds += el.latency_seconds;
      ++detected;
    }
    summary.events.push_back(std::move(el));
  }
  if (detected > 0) {
    summary.mean_latency_steps = sum_steps / static_cast<double>(detected);
    summary.mean_latency_seconds = sum_seconds / static_cast<double>(detected);
  }
  return summary;
}

}  // namespace cansig
