#include "cansig/ingest.hpp"

#include <gtest/gtest.h>

#include <random>

#include "testutil.hpp"

using namespace cansig;
using testutil::TempDir;
using testutil::write_file;

namespace {

const char* kSynCanHeader =
    "Label,Time,ID,Signal1_of_ID,Signal2_of_ID,Signal3_of_ID,Signal4_of_ID\n";

std::vector<SignalRecord> parse_file(const std::string& path, LogFormat fmt,
                                     ParseReport* report = nullptr,
                                     const SignalCatalog* catalog = nullptr) {
  return read_log(path, fmt, report, catalog);
}

TEST(SynCanParse, RowMapsOntoCatalogIndices) {
  TempDir dir("syncan");
  // id1 carries one signal, id5 carries two; sorted id order assigns
  // id1 -> s0, id5 -> s1,s2
  write_file(dir.path("log.csv"), std::string(kSynCanHeader) +
                                      "0,500,id1,0.75,,,\n"
                                      "0,1000,id5,0.5,0.25,,\n");
  const auto records = parse_file(dir.path("log.csv"), LogFormat::syncan_csv);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].msg_id, "id1");
  EXPECT_DOUBLE_EQ(records[0].time, 0.5);  // milliseconds in, seconds out
  ASSERT_EQ(records[0].values.size(), 1u);
  EXPECT_EQ(records[0].values[0].index, 0);

  EXPECT_EQ(records[1].msg_id, "id5");
  EXPECT_FALSE(records[1].attack);
  EXPECT_DOUBLE_EQ(records[1].time, 1.0);
  ASSERT_EQ(records[1].values.size(), 2u);
  EXPECT_EQ(records[1].values[0].index, 1);
  EXPECT_DOUBLE_EQ(records[1].values[0].value, 0.5);
  EXPECT_EQ(records[1].values[1].index, 2);
  EXPECT_DOUBLE_EQ(records[1].values[1].value, 0.25);
}

TEST(SynCanParse, AttackLabelParsed) {
  TempDir dir("syncan_label");
  write_file(dir.path("log.csv"),
             std::string(kSynCanHeader) + "1,1000,id2,0.5,,,\n");
  const auto records = parse_file(dir.path("log.csv"), LogFormat::syncan_csv);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_TRUE(records[0].attack);
}

TEST(CanonicalParse, EmptyFileAfterHeaderIsEmptyStream) {
  TempDir dir("canon_empty");
  write_file(dir.path("log.csv"), "time,msg_id,label,s0,s1\n");
  ParseReport report;
  const auto records =
      parse_file(dir.path("log.csv"), LogFormat::canonical_csv, &report);
  EXPECT_TRUE(records.empty());
  EXPECT_EQ(report.malformed, 0u);
}

TEST(CanonicalParse, MalformedMiddleRowSkippedAndCounted) {
  TempDir dir("canon_bad");
  write_file(dir.path("log.csv"),
             "time,msg_id,label,s0,s1\n"
             "0.0,a,0,0.5,\n"
             "0.1,a,0,not_a_number,\n"
             "0.2,a,0,0.7,\n");
  ParseReport report;
  const auto records =
      parse_file(dir.path("log.csv"), LogFormat::canonical_csv, &report);
  EXPECT_EQ(records.size(), 2u);
  EXPECT_EQ(report.malformed, 1u);
  ASSERT_EQ(report.issues.size(), 1u);
  EXPECT_EQ(report.issues[0].first, 3u);  // 1-based line number
}

TEST(CanonicalParse, MissingCellsAreOmittedNotZeroFilled) {
  TempDir dir("canon_missing");
  write_file(dir.path("log.csv"),
             "time,msg_id,label,s0,s1,s2\n"
             "0.0,a,0,0.5,,\n"
             "0.1,b,0,,0.25,0.75\n");
  const auto records = parse_file(dir.path("log.csv"), LogFormat::canonical_csv);
  ASSERT_EQ(records.size(), 2u);
  ASSERT_EQ(records[0].values.size(), 1u);
  EXPECT_EQ(records[0].values[0].index, 0);
  ASSERT_EQ(records[1].values.size(), 2u);
  EXPECT_EQ(records[1].values[0].index, 1);
  EXPECT_EQ(records[1].values[1].index, 2);
}

TEST(CanonicalParse, CrossIdSignalClaimIsFatal) {
  TempDir dir("canon_claim");
  write_file(dir.path("log.csv"),
             "time,msg_id,label,s0,s1\n"
             "0.0,a,0,0.5,\n"
             "0.1,b,0,0.6,\n");
  EXPECT_THROW(parse_file(dir.path("log.csv"), LogFormat::canonical_csv),
               InconsistentId);
}

TEST(CanonicalParse, WrongHeaderRejected) {
  TempDir dir("canon_hdr");
  write_file(dir.path("log.csv"), "Label,Time,ID\n");
  EXPECT_THROW(parse_file(dir.path("log.csv"), LogFormat::canonical_csv), DataError);
}

TEST(CanonicalRoundTrip, WriteThenReparseIsBitExact) {
  TempDir dir("roundtrip");
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(-1e3, 1e3);
  std::vector<SignalRecord> records;
  for (int t = 0; t < 500; ++t) {
    SignalRecord rec;
    rec.time = uni(rng);
    const int id = t % 3;
    rec.msg_id = "id" + std::to_string(id);
    rec.attack = (t % 17 == 0);
    // id k owns signals {k} plus {3} for id0 (multi-signal message)
    rec.values.push_back({id, uni(rng)});
    if (id == 0) rec.values.push_back({3, uni(rng)});
    records.push_back(std::move(rec));
  }
  std::sort(records.begin(), records.end(),
            [](const SignalRecord& a, const SignalRecord& b) {
              return a.time < b.time;
            });
  write_canonical(dir.path("log.csv"), records, 4);
  const auto reparsed = parse_file(dir.path("log.csv"), LogFormat::canonical_csv);
  ASSERT_EQ(reparsed.size(), records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(reparsed[i].msg_id, records[i].msg_id);
    EXPECT_EQ(reparsed[i].attack, records[i].attack);
    ASSERT_EQ(reparsed[i].values.size(), records[i].values.size());
    // bit-exact: the writer uses shortest round-trip formatting
    EXPECT_EQ(reparsed[i].time, records[i].time);
    for (size_t k = 0; k < records[i].values.size(); ++k) {
      EXPECT_EQ(reparsed[i].values[k].index, records[i].values[k].index);
      EXPECT_EQ(reparsed[i].values[k].value, records[i].values[k].value);
    }
  }

  // second generation must be byte-identical
  write_canonical(dir.path("log2.csv"), reparsed, 4);
  EXPECT_EQ(testutil::read_file(dir.path("log.csv")),
            testutil::read_file(dir.path("log2.csv")));
}

TEST(ParseOrdering, TimeSequencePreserved) {
  TempDir dir("ordering");
  std::string body = "time,msg_id,label,s0\n";
  for (int t = 0; t < 100; ++t) {
    body += std::to_string(0.5 * t) + ",a,0,0.5\n";
  }
  write_file(dir.path("log.csv"), body);
  const auto records = parse_file(dir.path("log.csv"), LogFormat::canonical_csv);
  ASSERT_EQ(records.size(), 100u);
  for (size_t i = 1; i < records.size(); ++i) {
    EXPECT_LE(records[i - 1].time, records[i].time);
  }
}

TEST(BuildCatalog, ThreeIdFixtureRangesMatchBruteForce) {
  // 2+1+1 signals across 3 ids, m = 4
  std::vector<SignalRecord> records;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  std::vector<double> lo(4, 1e9), hi(4, -1e9);
  for (int t = 0; t < 200; ++t) {
    SignalRecord rec;
    rec.time = 0.01 * t;
    switch (t % 3) {
      case 0:
        rec.msg_id = "a";
        rec.values = {{0, uni(rng)}, {1, uni(rng)}};
        break;
      case 1:
        rec.msg_id = "b";
        rec.values = {{2, uni(rng)}};
        break;
      default:
        rec.msg_id = "c";
        rec.values = {{3, uni(rng)}};
        break;
    }
    for (const auto& sv : rec.values) {
      lo[sv.index] = std::min(lo[sv.index], sv.value);
      hi[sv.index] = std::max(hi[sv.index], sv.value);
    }
    records.push_back(std::move(rec));
  }
  const auto cat = build_catalog(records, 4);
  EXPECT_EQ(cat.signal_count, 4);
  EXPECT_EQ(cat.id_to_signals.at("a"), (std::vector<int>{0, 1}));
  EXPECT_EQ(cat.id_to_signals.at("b"), (std::vector<int>{2}));
  EXPECT_EQ(cat.id_to_signals.at("c"), (std::vector<int>{3}));
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(cat.range_min[i], lo[i]);
    EXPECT_DOUBLE_EQ(cat.range_max[i], hi[i]);
    EXPECT_FALSE(cat.constant[i]);
  }
}

TEST(BuildCatalog, SingleConstantSignalFlagged) {
  std::vector<SignalRecord> records;
  for (int t = 0; t < 10; ++t) {
    records.push_back({0.1 * t, "only", {{0, 42.0}}, false});
  }
  const auto cat = build_catalog(records, 1);
  EXPECT_EQ(cat.signal_count, 1);
  EXPECT_TRUE(cat.constant[0]);
}

TEST(BuildCatalog, CardinalityMismatchAndEmptyStream) {
  std::vector<SignalRecord> records{{0.0, "a", {{0, 1.0}}, false}};
  EXPECT_THROW(build_catalog(records, 2), CardinalityMismatch);
  EXPECT_THROW(build_catalog({}, 1), EmptyStream);
}

TEST(BuildCatalog, DeterministicAcrossRecordPermutationsOfIds) {
  // same content, msg_ids introduced in different orders -> same catalog
  std::vector<SignalRecord> a{{0.0, "x", {{0, 1.0}}, false},
                              {0.1, "y", {{1, 2.0}}, false}};
  std::vector<SignalRecord> b{{0.0, "y", {{1, 2.0}}, false},
                              {0.1, "x", {{0, 1.0}}, false}};
  const auto ca = build_catalog(a, 2);
  const auto cb = build_catalog(b, 2);
  EXPECT_EQ(ca.id_to_signals, cb.id_to_signals);
  EXPECT_EQ(ca.range_min, cb.range_min);
  EXPECT_EQ(ca.range_max, cb.range_max);
}

TEST(Split, ContiguousFractions) {
  std::vector<SignalRecord> records(100);
  for (int i = 0; i < 100; ++i) {
    records[i].time = i;
    records[i].msg_id = "a";
  }
  const auto s = split(records, 0.8, 0.1, 0.1);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.validation.size(), 10u);
  EXPECT_EQ(s.test.size(), 10u);
  EXPECT_DOUBLE_EQ(s.train.front().time, 0.0);
  EXPECT_DOUBLE_EQ(s.test.back().time, 99.0);
}

TEST(Split, AllTrainIdentity) {
  std::vector<SignalRecord> records(10);
  for (auto& r : records) r.msg_id = "a";
  const auto s = split(records, 1.0, 0.0, 0.0);
  EXPECT_EQ(s.train.size(), 10u);
  EXPECT_TRUE(s.validation.empty());
  EXPECT_TRUE(s.test.empty());
}

TEST(Split, AttackInTrainingDetected) {
  std::vector<SignalRecord> records(100);
  for (int i = 0; i < 100; ++i) records[i].msg_id = "a";
  records[10].attack = true;  // inside the would-be train split
  EXPECT_THROW(split(records, 0.8, 0.1, 0.1), AttackInTraining);
  EXPECT_NO_THROW(split(records, 0.8, 0.1, 0.1, /*allow=*/true));
  // attack in the test tail is fine
  records[10].attack = false;
  records[95].attack = true;
  EXPECT_NO_THROW(split(records, 0.8, 0.1, 0.1));
}

TEST(Split, BadFractionsRejected) {
  std::vector<SignalRecord> records(10);
  EXPECT_THROW(split(records, 0.5, 0.1, 0.1), ConfigError);
}

TEST(SynCanParse, CatalogPinsIndexAssignment) {
  TempDir dir("syncan_cat");
  write_file(dir.path("train.csv"), std::string(kSynCanHeader) +
                                        "0,0,id1,0.1,,,\n"
                                        "0,1,id2,0.2,0.3,,\n");
  const auto train = parse_file(dir.path("train.csv"), LogFormat::syncan_csv);
  const auto cat = build_catalog(train, 3);

  // test file sees ids in a different order; catalog keeps indices stable
  write_file(dir.path("test.csv"), std::string(kSynCanHeader) +
                                       "0,0,id2,0.5,0.6,,\n"
                                       "0,1,id1,0.7,,,\n");
  const auto test =
      parse_file(dir.path("test.csv"), LogFormat::syncan_csv, nullptr, &cat);
  ASSERT_EQ(test.size(), 2u);
  EXPECT_EQ(test[0].msg_id, "id2");
  EXPECT_EQ(test[0].values[0].index, 1);
  EXPECT_EQ(test[1].msg_id, "id1");
  EXPECT_EQ(test[1].values[0].index, 0);
}

}  // namespace
