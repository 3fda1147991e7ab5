#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cansig/errors.hpp"
#include "cansig/record.hpp"

#include <json.hpp>

namespace cansig {

/// Per-signal value process on the synthetic grid.
struct SignalGen {
  enum class Kind { sine, random_walk, correlated };
  Kind kind = Kind::sine;
  std::string name;
  // sine
  double freq = 0.01;  // cycles per grid step
  double phase = 0.0;
  // random walk
  double step = 0.01;
  // correlated
  int source = -1;  // global signal index of the driving signal
  double gain = 1.0;
  double noise = 0.0;
};

struct TrafficId {
  std::string msg_id;
  int period_steps = 1;
  std::vector<int> signal_indices;  // global, in declaration order
};

/// Synthetic traffic description: which ids emit at which periods, and how
/// each signal evolves. Deterministic under the seed.
struct TrafficSpec {
  std::vector<TrafficId> ids;
  std::vector<SignalGen> generators;  // indexed by global signal index
  long long duration_steps = 0;
  double steps_per_second = 100.0;
  uint64_t seed = 1;

  int signal_count() const { return static_cast<int>(generators.size()); }
};

struct AttackSpec {
  enum class Kind { flooding, suppress, plateau, continuous, playback };
  Kind kind = Kind::plateau;
  std::string target_id;
  long long start_step = 0;
  long long duration_steps = 0;
  // flooding: target's total rate becomes rate_multiplier x nominal
  double rate_multiplier = 10.0;
  // plateau: fixed broadcast value; NaN freezes at the value observed at start
  double plateau_value = std::numeric_limits<double>::quiet_NaN();
  // continuous: drift per grid step away from the value at start
  double drift = 0.0;
  // playback: start of the same-length source window of recorded values
  long long playback_source_start = -1;
};

inline const char* attack_kind_name(AttackSpec::Kind k) {
  switch (k) {
    case AttackSpec::Kind::flooding: return "flooding";
    case AttackSpec::Kind::suppress: return "suppress";
    case AttackSpec::Kind::plateau: return "plateau";
    case AttackSpec::Kind::continuous: return "continuous";
    case AttackSpec::Kind::playback: return "playback";
  }
  return "?";
}

inline AttackSpec::Kind attack_kind_from_string(const std::string& s) {
  if (s == "flooding") return AttackSpec::Kind::flooding;
  if (s == "suppress") return AttackSpec::Kind::suppress;
  if (s == "plateau") return AttackSpec::Kind::plateau;
  if (s == "continuous") return AttackSpec::Kind::continuous;
  if (s == "playback") return AttackSpec::Kind::playback;
  throw ConfigError("unknown attack kind: " + s);
}

/// A record plus the grid step it was emitted at. Attack injectors work on
/// timed traces; timing is dropped when writing canonical CSV.
struct TimedRecord {
  long long grid_step = 0;
  SignalRecord rec;
};

/// Ground-truth boundaries of one injected attack, in final-trace record
/// indices (the detector's step indexing) and in seconds.
struct AttackEventTruth {
  std::string kind;
  std::string target_id;
  long long start_index = 0;  // first injected/suppressed/replaced step
  long long end_index = 0;    // last affected step (inclusive)
  double start_time = 0.0;
  double end_time = 0.0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"kind", kind},
                          {"target_id", target_id},
                          {"start_index", start_index},
                          {"end_index", end_index},
                          {"start_time", start_time},
                          {"end_time", end_time}};
  }

  static AttackEventTruth from_json(const nlohmann::json& j) {
    AttackEventTruth e;
    e.kind = j.at("kind").get<std::string>();
    e.target_id = j.at("target_id").get<std::string>();
    e.start_index = j.at("start_index").get<long long>();
    e.end_index = j.at("end_index").get<long long>();
    e.start_time = j.at("start_time").get<double>();
    e.end_time = j.at("end_time").get<double>();
    return e;
  }
};

namespace detail {

inline void validate_traffic(const TrafficSpec& spec) {
  const int m = spec.signal_count();
  std::vector<int> owner(m, -1);
  for (size_t k = 0; k < spec.ids.size(); ++k) {
    const auto& id = spec.ids[k];
    if (id.period_steps < 1) {
      throw ConfigError("id " + id.msg_id + ": period_steps must be >= 1");
    }
    for (int s : id.signal_indices) {
      if (s < 0 || s >= m || owner[s] != -1) {
        throw ConfigError("id " + id.msg_id + ": bad or duplicate signal index " +
                          std::to_string(s));
      }
      owner[s] = static_cast<int>(k);
    }
  }
  // correlated sources must form a DAG; walk the dependency chain
  for (int s = 0; s < m; ++s) {
    int hops = 0;
    int cur = s;
    while (spec.generators[cur].kind == SignalGen::Kind::correlated) {
      cur = spec.generators[cur].source;
      if (cur < 0 || cur >= m) {
        throw ConfigError("correlated source index out of range");
      }
      if (++hops > m) {
        throw CyclicCorrelation("correlated generators form a cycle at signal " +
                                std::to_string(s));
      }
    }
  }
}

// Topological evaluation order: non-correlated first, then by dependency depth.
inline std::vector<int> evaluation_order(const TrafficSpec& spec) {
  const int m = spec.signal_count();
  std::vector<int> depth(m, 0);
  for (int s = 0; s < m; ++s) {
    int d = 0;
    int cur = s;
    while (spec.generators[cur].kind == SignalGen::Kind::correlated) {
      cur = spec.generators[cur].source;
      ++d;
    }
    depth[s] = d;
  }
  std::vector<int> order(m);
  for (int s = 0; s < m; ++s) order[s] = s;
  std::stable_sort(order.begin(), order.end(),
                   [&depth](int a, int b) { return depth[a] < depth[b]; });
  return order;
}

}  // namespace detail

/// Generate a clean trace: each id emits every period_steps, values follow
/// the per-signal processes, everything clamped to [0,1]. Byte-identical
/// output for a fixed spec and seed.
inline std::vector<TimedRecord> synth_normal(const TrafficSpec& spec) {
  detail::validate_traffic(spec);
  const int m = spec.signal_count();
  const auto order = detail::evaluation_order(spec);
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&rng](double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  };

  std::vector<double> value(m, 0.5);
  std::vector<TimedRecord> trace;
  for (long long t = 0; t < spec.duration_steps; ++t) {
    for (int s : order) {
      const auto& g = spec.generators[s];
      double v = value[s];
      switch (g.kind) {
        case SignalGen::Kind::sine:
          v = 0.5 + 0.45 * std::sin(2.0 * M_PI * g.freq * static_cast<double>(t) +
                                    g.phase);
          break;
        case SignalGen::Kind::random_walk:
          v = value[s] + uniform(-g.step, g.step);
          break;
        case SignalGen::Kind::correlated:
          v = 0.5 + g.gain * (value[g.source] - 0.5);
          if (g.noise > 0) v += uniform(-g.noise, g.noise);
          break;
      }
      value[s] = std::clamp(v, 0.0, 1.0);
    }
    for (const auto& id : spec.ids) {
      if (t % id.period_steps != 0) continue;
      TimedRecord tr;
      tr.grid_step = t;
      tr.rec.time = static_cast<double>(t) / spec.steps_per_second;
      tr.rec.msg_id = id.msg_id;
      for (int s : id.signal_indices) {
        tr.rec.values.push_back({s, value[s]});
      }
      trace.push_back(std::move(tr));
    }
  }
  return trace;
}

namespace detail {

inline const TrafficId& find_target(const TrafficSpec& spec,
                                    const std::string& target_id) {
  for (const auto& id : spec.ids) {
    if (id.msg_id == target_id) return id;
  }
  throw ConfigError("attack target id not found: " + target_id);
}

inline void check_interval(const TrafficSpec& spec, const AttackSpec& attack) {
  if (attack.start_step < 0 || attack.duration_steps < 0 ||
      attack.start_step + attack.duration_steps > spec.duration_steps) {
    throw IntervalOutOfRange("attack interval [" +
                             std::to_string(attack.start_step) + ", " +
                             std::to_string(attack.start_step +
                                            attack.duration_steps) +
                             ") outside trace of " +
                             std::to_string(spec.duration_steps) + " steps");
  }
}

inline AttackEventTruth event_from_labels(const std::vector<TimedRecord>& trace,
                                          const AttackSpec& attack) {
  AttackEventTruth ev;
  ev.kind = attack_kind_name(attack.kind);
  ev.target_id = attack.target_id;
  long long first = -1, last = -1;
  for (size_t i = 0; i < trace.size(); ++i) {
    if (!trace[i].rec.attack) continue;
    if (first < 0) first = static_cast<long long>(i);
    last = static_cast<long long>(i);
  }
  if (first < 0) {
    throw DataError("attack produced no labeled records");
  }
  ev.start_index = first;
  ev.end_index = last;
  ev.start_time = trace[first].rec.time;
  ev.end_time = trace[last].rec.time;
  return ev;
}

}  // namespace detail

/// Fabrication: inject extra copies of the target's most recent legitimate
/// values so its total rate becomes rate_multiplier x nominal. Legitimate
/// records stay in place; only injected records carry the attack label.
inline std::vector<TimedRecord> inject_flooding(const std::vector<TimedRecord>& trace,
                                                const TrafficSpec& spec,
                                                const AttackSpec& attack,
                                                AttackEventTruth* event = nullptr) {
  detail::check_interval(spec, attack);
  const auto& target = detail::find_target(spec, attack.target_id);
  if (attack.rate_multiplier < 1.0) {
    throw ConfigError("flooding rate_multiplier must be >= 1");
  }
  const long long inject_period = std::max<long long>(
      1, std::llround(static_cast<double>(target.period_steps) /
                      attack.rate_multiplier));
  const long long end = attack.start_step + attack.duration_steps;

  // injection schedule; steps already carrying a legitimate emission are
  // skipped so rate_multiplier 1 degenerates to a no-op
  std::vector<long long> inject_steps;
  for (long long t = attack.start_step; t < end; ++t) {
    if (t % inject_period == 0 && t % target.period_steps != 0) {
      inject_steps.push_back(t);
    }
  }

  std::vector<TimedRecord> out;
  out.reserve(trace.size() + inject_steps.size());
  std::vector<SignalValue> last_values;
  size_t next_inj = 0;
  auto flush_before = [&](long long step) {
    while (next_inj < inject_steps.size() && inject_steps[next_inj] < step) {
      const long long t = inject_steps[next_inj++];
      if (last_values.empty()) continue;  // no legitimate value seen yet
      TimedRecord inj;
      inj.grid_step = t;
      inj.rec.time = static_cast<double>(t) / spec.steps_per_second;
      inj.rec.msg_id = attack.target_id;
      inj.rec.values = last_values;
      inj.rec.attack = true;
      out.push_back(std::move(inj));
    }
  };
  for (const auto& tr : trace) {
    flush_before(tr.grid_step);
    if (tr.rec.msg_id == attack.target_id && !tr.rec.attack) {
      last_values = tr.rec.values;
    }
    out.push_back(tr);
  }
  flush_before(std::numeric_limits<long long>::max());
  if (event) *event = detail::event_from_labels(out, attack);
  return out;
}

/// Suspension: the target's records disappear for the interval. The event
/// starts at the first step where a target message would have appeared.
inline std::vector<TimedRecord> inject_suppress(const std::vector<TimedRecord>& trace,
                                                const TrafficSpec& spec,
                                                const AttackSpec& attack,
                                                AttackEventTruth* event = nullptr) {
  detail::check_interval(spec, attack);
  const auto& target = detail::find_target(spec, attack.target_id);
  const long long end = attack.start_step + attack.duration_steps;

  std::vector<TimedRecord> out;
  out.reserve(trace.size());
  for (const auto& tr : trace) {
    const bool in_window = tr.grid_step >= attack.start_step && tr.grid_step < end;
    if (in_window && tr.rec.msg_id == attack.target_id) continue;
    out.push_back(tr);
  }

  if (event && attack.duration_steps > 0) {
    const long long p = target.period_steps;
    const long long first_missed =
        ((attack.start_step + p - 1) / p) * p;  // first expected emission >= start
    AttackEventTruth ev;
    ev.kind = attack_kind_name(attack.kind);
    ev.target_id = attack.target_id;
    long long first = -1, last = -1;
    for (size_t i = 0; i < out.size(); ++i) {
      if (out[i].grid_step >= first_missed && out[i].grid_step < end) {
        if (first < 0) first = static_cast<long long>(i);
        last = static_cast<long long>(i);
      }
    }
    if (first >= 0) {
      ev.start_index = first;
      ev.end_index = last;
      ev.start_time = out[first].rec.time;
      ev.end_time = out[last].rec.time;
      *event = ev;
    }
  }
  return out;
}

/// Masquerade: the target keeps its timing but its values are replaced.
/// plateau broadcasts a constant, continuous drifts linearly away from the
/// value at the window start, playback replays an earlier same-id window.
inline std::vector<TimedRecord> inject_masquerade(const std::vector<TimedRecord>& trace,
                                                  const TrafficSpec& spec,
                                                  const AttackSpec& attack,
                                                  AttackEventTruth* event = nullptr) {
  detail::check_interval(spec, attack);
  detail::find_target(spec, attack.target_id);
  const long long end = attack.start_step + attack.duration_steps;

  if (attack.kind == AttackSpec::Kind::playback) {
    const long long src = attack.playback_source_start;
    if (src < 0 || src + attack.duration_steps > spec.duration_steps) {
      throw IntervalOutOfRange("playback source window outside trace");
    }
    if (src < end && attack.start_step < src + attack.duration_steps) {
      throw PlaybackSourceOverlap("playback source overlaps the attack window");
    }
  }

  // values observed at the window start (most recent target emission <= start)
  std::map<int, double> start_value;
  for (const auto& tr : trace) {
    if (tr.grid_step > attack.start_step) break;
    if (tr.rec.msg_id != attack.target_id) continue;
    for (const auto& sv : tr.rec.values) start_value[sv.index] = sv.value;
  }

  // recorded source values for playback, in emission order
  std::vector<std::vector<SignalValue>> source_values;
  if (attack.kind == AttackSpec::Kind::playback) {
    for (const auto& tr : trace) {
      if (tr.rec.msg_id != attack.target_id) continue;
      if (tr.grid_step >= attack.playback_source_start &&
          tr.grid_step < attack.playback_source_start + attack.duration_steps) {
        source_values.push_back(tr.rec.values);
      }
    }
    if (source_values.empty()) {
      throw IntervalOutOfRange("playback source window contains no target records");
    }
  }

  std::vector<TimedRecord> out;
  out.reserve(trace.size());
  size_t replaced = 0;
  for (const auto& tr : trace) {
    const bool hit = tr.grid_step >= attack.start_step && tr.grid_step < end &&
                     tr.rec.msg_id == attack.target_id;
    if (!hit) {
      out.push_back(tr);
      continue;
    }
    TimedRecord mod = tr;
    mod.rec.attack = true;
    switch (attack.kind) {
      case AttackSpec::Kind::plateau:
        for (auto& sv : mod.rec.values) {
          if (std::isnan(attack.plateau_value)) {
            auto it = start_value.find(sv.index);
            if (it != start_value.end()) sv.value = it->second;
          } else {
            sv.value = attack.plateau_value;
          }
        }
        break;
      case AttackSpec::Kind::continuous: {
        const double delta =
            attack.drift * static_cast<double>(tr.grid_step - attack.start_step);
        for (auto& sv : mod.rec.values) {
          const double base =
              start_value.count(sv.index) ? start_value[sv.index] : sv.value;
          sv.value = std::clamp(base + delta, 0.0, 1.0);
        }
        break;
      }
      case AttackSpec::Kind::playback: {
        const auto& src = source_values[replaced % source_values.size()];
        for (size_t k = 0; k < mod.rec.values.size() && k < src.size(); ++k) {
          mod.rec.values[k].value = src[k].value;
        }
        break;
      }
      default:
        throw ConfigError("inject_masquerade: not a masquerade kind");
    }
    ++replaced;
    out.push_back(std::move(mod));
  }
  if (replaced == 0) {
    if (event) *event = AttackEventTruth{};
    return out;
  }
  if (event) *event = detail::event_from_labels(out, attack);
  return out;
}

/// Dispatch on the attack kind.
inline std::vector<TimedRecord> apply_attack(const std::vector<TimedRecord>& trace,
                                             const TrafficSpec& spec,
                                             const AttackSpec& attack,
                                             AttackEventTruth* event = nullptr) {
  switch (attack.kind) {
    case AttackSpec::Kind::flooding:
      return inject_flooding(trace, spec, attack, event);
    case AttackSpec::Kind::suppress:
      return inject_suppress(trace, spec, attack, event);
    default:
      return inject_masquerade(trace, spec, attack, event);
  }
}

inline std::vector<SignalRecord> strip_timing(const std::vector<TimedRecord>& trace) {
  std::vector<SignalRecord> out;
  out.reserve(trace.size());
  for (const auto& tr : trace) out.push_back(tr.rec);
  return out;
}

// --- scenario files ----------------------------------------------------

inline TrafficSpec traffic_from_json(const nlohmann::json& j) {
  TrafficSpec spec;
  spec.seed = j.value("seed", 1ull);
  spec.duration_steps = j.at("duration_steps").get<long long>();
  spec.steps_per_second = j.value("steps_per_second", 100.0);
  int next_index = 0;
  for (const auto& jid : j.at("ids")) {
    TrafficId id;
    id.msg_id = jid.at("msg_id").get<std::string>();
    id.period_steps = jid.at("period_steps").get<int>();
    for (const auto& js : jid.at("signals")) {
      SignalGen g;
      const std::string kind = js.at("gen").get<std::string>();
      if (kind == "sine") {
        g.kind = SignalGen::Kind::sine;
        g.freq = js.at("freq").get<double>();
        g.phase = js.value("phase", 0.0);
      } else if (kind == "random_walk") {
        g.kind = SignalGen::Kind::random_walk;
        g.step = js.at("step").get<double>();
      } else if (kind == "correlated") {
        g.kind = SignalGen::Kind::correlated;
        g.source = js.at("source").get<int>();
        g.gain = js.value("gain", 1.0);
        g.noise = js.value("noise", 0.0);
      } else {
        throw ConfigError("unknown generator kind: " + kind);
      }
      g.name = js.value("name", id.msg_id + "_s" + std::to_string(next_index));
      id.signal_indices.push_back(next_index++);
      spec.generators.push_back(std::move(g));
    }
    spec.ids.push_back(std::move(id));
  }
  detail::validate_traffic(spec);
  return spec;
}

inline AttackSpec attack_from_json(const nlohmann::json& j) {
  AttackSpec a;
  a.kind = attack_kind_from_string(j.at("kind").get<std::string>());
  a.target_id = j.at("target_id").get<std::string>();
  a.start_step = j.at("start_step").get<long long>();
  a.duration_steps = j.at("duration_steps").get<long long>();
  a.rate_multiplier = j.value("rate_multiplier", 10.0);
  if (j.contains("value") && !j.at("value").is_null()) {
    a.plateau_value = j.at("value").get<double>();
  }
  a.drift = j.value("drift", 0.0);
  a.playback_source_start = j.value("source_start_step", -1ll);
  return a;
}

struct Scenario {
  TrafficSpec traffic;              // test-trace spec (attacks applied per entry)
  long long train_duration_steps = 0;  // clean training trace length
  std::vector<AttackSpec> attacks;

  static Scenario from_json(const nlohmann::json& j) {
    Scenario s;
    s.traffic = traffic_from_json(j.at("traffic"));
    s.train_duration_steps =
        j.value("train_duration_steps", s.traffic.duration_steps);
    if (j.contains("attacks")) {
      for (const auto& ja : j.at("attacks")) {
        s.attacks.push_back(attack_from_json(ja));
      }
    }
    return s;
  }
};

}  // namespace cansig
