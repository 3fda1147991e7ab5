#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cansig/errors.hpp"
#include "cansig/record.hpp"

#include <json.hpp>

namespace cansig {

/// Per-signal min/max scaler onto [0, 1], clamped. Constant signals map to
/// 0.5 at transform time.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> mins, std::vector<double> maxs)
      : min_(std::move(mins)), max_(std::move(maxs)) {}

  static MinMaxScaler fit(const std::vector<SignalRecord>& records, int m) {
    std::vector<double> mins(m, std::numeric_limits<double>::infinity());
    std::vector<double> maxs(m, -std::numeric_limits<double>::infinity());
    std::vector<bool> seen(m, false);
    for (const auto& rec : records) {
      for (const auto& sv : rec.values) {
        mins[sv.index] = std::min(mins[sv.index], sv.value);
        maxs[sv.index] = std::max(maxs[sv.index], sv.value);
        seen[sv.index] = true;
      }
    }
    for (int i = 0; i < m; ++i) {
      if (!seen[i]) {
        throw UnseenSignal("signal s" + std::to_string(i) +
                           " has no observation in the training data");
      }
    }
    return MinMaxScaler(std::move(mins), std::move(maxs));
  }

  int signal_count() const { return static_cast<int>(min_.size()); }

  double transform(int index, double v) const {
    const double lo = min_[index];
    const double hi = max_[index];
    if (!(hi > lo)) return 0.5;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  }

  double inverse(int index, double scaled) const {
    const double lo = min_[index];
    const double hi = max_[index];
    if (!(hi > lo)) return lo;
    return lo + scaled * (hi - lo);
  }

  const std::vector<double>& mins() const { return min_; }
  const std::vector<double>& maxs() const { return max_; }

  nlohmann::json to_json() const {
    return nlohmann::json{{"min", min_}, {"max", max_}};
  }

  static MinMaxScaler from_json(const nlohmann::json& j) {
    MinMaxScaler s;
    s.min_ = j.at("min").get<std::vector<double>>();
    s.max_ = j.at("max").get<std::vector<double>>();
    if (s.min_.size() != s.max_.size()) {
      throw ArtifactMismatch("scaler: min/max length mismatch");
    }
    return s;
  }

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

}  // namespace cansig
