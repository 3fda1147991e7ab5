#pragma once

#include <map>
#include <string>
#include <vector>

namespace cansig {

/// One observed value of a tracked signal inside a message.
struct SignalValue {
  int index;     // global signal index in [0, m)
  double value;  // raw (unscaled) decoded value
};

/// One timestamped decoded CAN message.
struct SignalRecord {
  double time = 0.0;  // seconds
  std::string msg_id;
  std::vector<SignalValue> values;
  bool attack = false;
};

/// The signal universe of one deployment: which message carries which
/// global signal indices, plus per-signal value ranges from training data.
struct SignalCatalog {
  int signal_count = 0;  // m
  std::map<std::string, std::vector<int>> id_to_signals;
  std::vector<std::string> signal_names;
  std::vector<double> range_min;
  std::vector<double> range_max;
  std::vector<bool> constant;  // flagged when min == max in training data
};

}  // namespace cansig
