#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cansig/csv.hpp"
#include "cansig/errors.hpp"
#include "cansig/record.hpp"

namespace cansig {

enum class LogFormat { canonical_csv, syncan_csv };

inline LogFormat log_format_from_string(const std::string& s) {
  if (s == "canonical_csv") return LogFormat::canonical_csv;
  if (s == "syncan_csv") return LogFormat::syncan_csv;
  throw ConfigError("unknown log format: " + s);
}

/// Per-file parse outcome. Malformed rows are skipped and counted, never
/// fatal; long captures routinely contain truncated tails.
struct ParseReport {
  size_t rows = 0;
  size_t malformed = 0;
  std::vector<std::pair<size_t, std::string>> issues;  // (line number, what)

  void add(size_t line_no, std::string what) {
    ++malformed;
    if (issues.size() < 64) issues.emplace_back(line_no, std::move(what));
  }
};

namespace detail {

inline constexpr const char* kSynCanHeader =
    "Label,Time,ID,Signal1_of_ID,Signal2_of_ID,Signal3_of_ID,Signal4_of_ID";

// Tracks which msg_id owns which signal index. A signal claimed by two
// different ids breaks the partition invariant and is fatal.
class SignalOwnership {
 public:
  void claim(const std::string& msg_id, int index, size_t line_no) {
    auto [it, inserted] = owner_.try_emplace(index, msg_id);
    if (!inserted && it->second != msg_id) {
      throw InconsistentId("line " + std::to_string(line_no) + ": signal s" +
                           std::to_string(index) + " carried by both '" +
                           it->second + "' and '" + msg_id + "'");
    }
  }

 private:
  std::map<int, std::string> owner_;
};

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace detail

using RecordSink = std::function<void(SignalRecord&&)>;

/// Parse a canonical CSV log: header `time,msg_id,label,s0,...,s{m-1}`,
/// one row per message, cells empty for signals the row's id does not carry.
inline void parse_canonical(const std::string& path, const RecordSink& sink,
                            ParseReport* report = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file, no header");
  const auto header = split_csv(strip_cr(line));
  if (header.size() < 4 || header[0] != "time" || header[1] != "msg_id" ||
      header[2] != "label") {
    throw DataError(path + ": not a canonical_csv header");
  }
  const int m = static_cast<int>(header.size()) - 3;
  for (int i = 0; i < m; ++i) {
    if (header[3 + i] != "s" + std::to_string(i)) {
      throw DataError(path + ": canonical header expects column s" + std::to_string(i));
    }
  }

  detail::SignalOwnership ownership;
  ParseReport local;
  ParseReport& rep = report ? *report : local;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto sv = strip_cr(line);
    if (sv.empty()) continue;
    const auto cells = split_csv(sv);
    if (static_cast<int>(cells.size()) != m + 3) {
      rep.add(line_no, "wrong column count");
      continue;
    }
    SignalRecord rec;
    const auto t = parse_double(cells[0]);
    if (!t) {
      rep.add(line_no, "non-numeric time");
      continue;
    }
    rec.time = *t;
    rec.msg_id = std::string(cells[1]);
    if (rec.msg_id.empty()) {
      rep.add(line_no, "empty msg_id");
      continue;
    }
    if (cells[2] == "1") {
      rec.attack = true;
    } else if (cells[2] != "0" && !cells[2].empty()) {
      rep.add(line_no, "bad label");
      continue;
    }
    bool bad = false;
    for (int i = 0; i < m; ++i) {
      const auto cell = cells[3 + i];
      if (cell.empty()) continue;
      const auto v = parse_double(cell);
      if (!v) {
        rep.add(line_no, "non-numeric value in s" + std::to_string(i));
        bad = true;
        break;
      }
      rec.values.push_back({i, *v});
    }
    if (bad) continue;
    for (const auto& sv2 : rec.values) {
      ownership.claim(rec.msg_id, sv2.index, line_no);
    }
    ++rep.rows;
    sink(std::move(rec));
  }
}

/// Parse a SynCAN-layout log. Time is in milliseconds and converted to
/// seconds. Global signal indices are assigned deterministically: msg_ids
/// sorted lexicographically, then each id's populated signal slots in order.
/// The index map is derived from a first pass over the file unless a catalog
/// fixes it (required when parsing test files against training artifacts).
inline void parse_syncan(const std::string& path, const RecordSink& sink,
                         ParseReport* report = nullptr,
                         const SignalCatalog* catalog = nullptr) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file, no header");
  if (strip_cr(lines[0]) != detail::kSynCanHeader) {
    throw DataError(path + ": not a syncan_csv header");
  }

  std::map<std::string, std::vector<int>> id_map;
  if (catalog) {
    id_map = catalog->id_to_signals;
  } else {
    std::map<std::string, std::set<int>> slots;  // id -> populated slot set
    for (size_t i = 1; i < lines.size(); ++i) {
      const auto cells = split_csv(strip_cr(lines[i]));
      if (cells.size() != 7 || cells[2].empty()) continue;
      auto& s = slots[std::string(cells[2])];
      for (int k = 0; k < 4; ++k) {
        if (!cells[3 + k].empty()) s.insert(k);
      }
    }
    int next = 0;
    for (const auto& [id, slot_set] : slots) {
      auto& v = id_map[id];
      for (int slot : slot_set) {
        (void)slot;
        v.push_back(next++);
      }
    }
  }

  ParseReport local;
  ParseReport& rep = report ? *report : local;
  for (size_t i = 1; i < lines.size(); ++i) {
    const size_t line_no = i + 1;
    const auto sv = strip_cr(lines[i]);
    if (sv.empty()) continue;
    const auto cells = split_csv(sv);
    if (cells.size() != 7) {
      rep.add(line_no, "wrong column count");
      continue;
    }
    SignalRecord rec;
    if (cells[0] == "1") {
      rec.attack = true;
    } else if (cells[0] != "0" && !cells[0].empty()) {
      rep.add(line_no, "bad label");
      continue;
    }
    const auto t = parse_double(cells[1]);
    if (!t) {
      rep.add(line_no, "non-numeric time");
      continue;
    }
    rec.time = *t / 1000.0;
    rec.msg_id = std::string(cells[2]);
    const auto it = id_map.find(rec.msg_id);
    if (it == id_map.end()) {
      rep.add(line_no, "unknown msg_id " + rec.msg_id);
      continue;
    }
    const auto& indices = it->second;
    bool bad = false;
    int slot = 0;
    for (int k = 0; k < 4; ++k) {
      const auto cell = cells[3 + k];
      if (cell.empty()) continue;
      if (slot >= static_cast<int>(indices.size())) {
        throw InconsistentId("line " + std::to_string(line_no) + ": msg_id " +
                             rec.msg_id + " carries more signals than declared");
      }
      const auto v = parse_double(cell);
      if (!v) {
        rep.add(line_no, "non-numeric signal value");
        bad = true;
        break;
      }
      rec.values.push_back({indices[slot], *v});
      ++slot;
    }
    if (bad) continue;
    ++rep.rows;
    sink(std::move(rec));
  }
}

inline void parse_log(const std::string& path, LogFormat format,
                      const RecordSink& sink, ParseReport* report = nullptr,
                      const SignalCatalog* catalog = nullptr) {
  if (format == LogFormat::canonical_csv) {
    parse_canonical(path, sink, report);
  } else {
    parse_syncan(path, sink, report, catalog);
  }
}

inline std::vector<SignalRecord> read_log(const std::string& path, LogFormat format,
                                          ParseReport* report = nullptr,
                                          const SignalCatalog* catalog = nullptr) {
  std::vector<SignalRecord> out;
  parse_log(
      path, format, [&out](SignalRecord&& r) { out.push_back(std::move(r)); },
      report, catalog);
  return out;
}

/// Signal count implied by a canonical CSV header.
inline int canonical_signal_count(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file, no header");
  const auto header = split_csv(strip_cr(line));
  if (header.size() < 4 || header[0] != "time") {
    throw DataError(path + ": not a canonical_csv header");
  }
  return static_cast<int>(header.size()) - 3;
}

/// Write records as canonical CSV. Floats use shortest round-trip decimal
/// formatting, so parse(write(parse(x))) is bit-exact.
inline void write_canonical(const std::string& path,
                            const std::vector<SignalRecord>& records, int m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "time,msg_id,label";
  for (int i = 0; i < m; ++i) out << ",s" << i;
  out << '\n';
  std::vector<const SignalValue*> row(m);
  for (const auto& rec : records) {
    std::fill(row.begin(), row.end(), nullptr);
    for (const auto& sv : rec.values) row[sv.index] = &sv;
    out << format_double(rec.time) << ',' << rec.msg_id << ','
        << (rec.attack ? '1' : '0');
    for (int i = 0; i < m; ++i) {
      out << ',';
      if (row[i]) out << format_double(row[i]->value);
    }
    out << '\n';
  }
}

/// Aggregate a record stream into a SignalCatalog and validate it against
/// the declared signal count.
inline SignalCatalog build_catalog(const std::vector<SignalRecord>& records,
                                   int declared_m) {
  if (records.empty()) throw EmptyStream("build_catalog: empty record stream");
  std::map<std::string, std::set<int>> id_sets;
  std::map<int, double> mins, maxs;
  for (const auto& rec : records) {
    auto& s = id_sets[rec.msg_id];
    for (const auto& sv : rec.values) {
      s.insert(sv.index);
      auto [it, fresh] = mins.try_emplace(sv.index, sv.value);
      if (!fresh) it->second = std::min(it->second, sv.value);
      auto [jt, fresh2] = maxs.try_emplace(sv.index, sv.value);
      if (!fresh2) jt->second = std::max(jt->second, sv.value);
    }
  }
  std::set<int> all;
  for (const auto& [id, s] : id_sets) {
    for (int idx : s) {
      if (!all.insert(idx).second) {
        throw InconsistentId("signal s" + std::to_string(idx) +
                             " claimed by more than one msg_id");
      }
    }
  }
  if (static_cast<int>(all.size()) != declared_m) {
    throw CardinalityMismatch("saw " + std::to_string(all.size()) +
                              " distinct signals, declared m=" +
                              std::to_string(declared_m));
  }
  for (int idx : all) {
    if (idx < 0 || idx >= declared_m) {
      throw CardinalityMismatch("signal index s" + std::to_string(idx) +
                                " outside [0, m)");
    }
  }

  SignalCatalog cat;
  cat.signal_count = declared_m;
  cat.signal_names.resize(declared_m);
  cat.range_min.assign(declared_m, 0.0);
  cat.range_max.assign(declared_m, 0.0);
  cat.constant.assign(declared_m, false);
  for (const auto& [id, s] : id_sets) {
    cat.id_to_signals[id] = std::vector<int>(s.begin(), s.end());
  }
  for (int i = 0; i < declared_m; ++i) {
    cat.signal_names[i] = "s" + std::to_string(i);
    cat.range_min[i] = mins.at(i);
    cat.range_max[i] = maxs.at(i);
    cat.constant[i] = (mins.at(i) == maxs.at(i));
  }
  return cat;
}

struct SplitResult {
  std::vector<SignalRecord> train;
  std::vector<SignalRecord> validation;
  std::vector<SignalRecord> test;
};

/// Contiguous-in-time split by record count; never shuffles. Attack-labeled
/// records outside the test split are fatal unless explicitly allowed.
inline SplitResult split(const std::vector<SignalRecord>& records,
                         double train_frac, double val_frac, double test_frac,
                         bool allow_attacks_outside_test = false) {
  const double total = train_frac + val_frac + test_frac;
  if (std::abs(total - 1.0) > 1e-9 || train_frac < 0 || val_frac < 0 || test_frac < 0) {
    throw ConfigError("split fractions must be non-negative and sum to 1");
  }
  const size_t n = records.size();
  const size_t n_train = static_cast<size_t>(train_frac * static_cast<double>(n));
  const size_t n_val = static_cast<size_t>(val_frac * static_cast<double>(n));
  SplitResult out;
  out.train.assign(records.begin(), records.begin() + n_train);
  out.validation.assign(records.begin() + n_train, records.begin() + n_train + n_val);
  out.test.assign(records.begin() + n_train + n_val, records.end());
  if (!allow_attacks_outside_test) {
    for (size_t i = 0; i < n_train + n_val; ++i) {
      if (records[i].attack) {
        throw AttackInTraining("attack-labeled record at index " +
                               std::to_string(i) + " falls outside the test split");
      }
    }
  }
  return out;
}

}  // namespace cansig
