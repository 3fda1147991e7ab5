#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cansig/order.hpp"
#include "cansig/queue.hpp"
#include "cansig/scaler.hpp"
#include "cansig/stats.hpp"
#include "testutil.hpp"

using namespace cansig;

namespace {

// Independent last-observation-carried-forward oracle: a full snapshot of
// every signal after each step, rebuilt from scratch.
class LocfOracle {
 public:
  LocfOracle(int m) : current_(m, 0.5f) {}

  void observe(const std::vector<std::pair<int, float>>& values) {
    for (const auto& [i, v] : values) current_[i] = v;
    history_.push_back(current_);
  }

  // expected value of signal i at logical column k when t steps have passed
  float expected(int i, int k, long long t) const {
    const long long idx = t - 1 - k;
    if (idx < 0) return 0.5f;
    return history_[idx][i];
  }

 private:
  std::vector<float> current_;
  std::vector<std::vector<float>> history_;
};

TEST(DataQueue, MatchesLocfOracleOnRandomSequences) {
  std::mt19937 rng(123);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  const int m = 6, q = 40;
  for (int seq = 0; seq < 50; ++seq) {
    DataQueue queue(m, q);
    LocfOracle oracle(m);
    std::uniform_int_distribution<int> nsig(1, 3);
    std::uniform_int_distribution<int> pick(0, m - 1);
    for (int t = 0; t < 300; ++t) {
      std::vector<std::pair<int, float>> values;
      const int n = nsig(rng);
      for (int k = 0; k < n; ++k) values.emplace_back(pick(rng), uni(rng));
      queue.push(values, false);
      oracle.observe(values);
      for (int i = 0; i < m; ++i) {
        for (int k = 0; k < q; ++k) {
          ASSERT_EQ(queue.at(i, k), oracle.expected(i, k, queue.steps()))
              << "seq " << seq << " t " << t << " signal " << i << " col " << k;
        }
      }
    }
  }
}

TEST(DataQueue, Fig2StyleUpdateTouchesOnlyArrivingSignals) {
  // ids A(s0,s1), D(s2), C(s3) arrive in turn; at the last step only C's
  // rows may differ from the previous column
  DataQueue queue(4, 8);
  queue.push({{0, 0.1f}, {1, 0.2f}}, false);  // A at t-2
  queue.push({{2, 0.9f}}, false);             // D at t-1
  queue.push({{3, 0.4f}}, false);             // C at t
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(queue.at(i, 0), queue.at(i, 1)) << "signal " << i;
  }
  EXPECT_EQ(queue.at(3, 0), 0.4f);
  EXPECT_EQ(queue.at(3, 1), 0.5f);  // C unseen before t
}

TEST(DataQueue, PushingSameRecordTwiceDuplicatesColumn) {
  DataQueue queue(3, 5);
  queue.push({{0, 0.3f}, {2, 0.8f}}, false);
  queue.push({{0, 0.3f}, {2, 0.8f}}, false);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(queue.at(i, 0), queue.at(i, 1));
  }
}

TEST(DataQueue, WarmUpNeedsFullTurnoverAndAllSignals) {
  DataQueue queue(2, 4);
  for (int t = 0; t < 10; ++t) queue.push({{0, 0.5f}}, false);
  EXPECT_FALSE(queue.warmed_up());  // signal 1 never seen
  queue.push({{1, 0.5f}}, false);
  EXPECT_TRUE(queue.warmed_up());

  DataQueue queue2(1, 4);
  queue2.push({{0, 0.5f}}, false);
  EXPECT_FALSE(queue2.warmed_up());  // only 1 of 4 steps elapsed
  for (int t = 0; t < 3; ++t) queue2.push({{0, 0.5f}}, false);
  EXPECT_TRUE(queue2.warmed_up());
}

TEST(SampleViews, PeriodOneIsVerbatimPrefix) {
  DataQueue queue(3, 20);
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  for (int t = 0; t < 30; ++t) {
    queue.push({{t % 3, uni(rng)}}, false);
  }
  const auto views = queue.sample_views({1}, 8);
  ASSERT_EQ(views.size(), 1u);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 8; ++k) {
      EXPECT_EQ(views[0].grid.at(i, k), queue.at(i, k));
    }
  }
}

TEST(SampleViews, IndexArithmetic) {
  const int q = 500, w = 50, T = 10;
  DataQueue queue(2, q);
  std::mt19937 rng(17);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  for (int t = 0; t < 700; ++t) {
    queue.push({{t % 2, uni(rng)}}, false);
  }
  const auto views = queue.sample_views({T}, w);
  EXPECT_EQ(views[0].grid.at(0, 49), queue.at(0, 490));
  EXPECT_EQ(views[0].grid.at(1, 49), queue.at(1, 490));
}

TEST(SampleViews, StridingManuallyEqualsPeriodSampling) {
  const int q = 60, w = 10;
  DataQueue queue(2, q);
  std::mt19937 rng(29);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  for (int t = 0; t < 100; ++t) queue.push({{t % 2, uni(rng)}}, false);
  for (int T : {2, 3, 6}) {
    const auto direct = queue.sample_views({T}, w);
    const auto unit = queue.sample_views({1}, w * T);
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < w; ++k) {
        EXPECT_EQ(direct[0].grid.at(i, k), unit[0].grid.at(i, k * T));
      }
    }
  }
}

TEST(SampleViews, SpanCoverage) {
  // periods {1,5,10} with w=50 need q = 500 and span 50/250/500 steps
  DataQueue queue(1, 500);
  for (int t = 0; t < 500; ++t) {
    queue.push({{0, t < 250 ? 0.25f : 0.75f}}, false);
  }
  // column 0 is newest: first 250 pushes (0.25) are now columns 250..499
  const auto views = queue.sample_views({1, 5, 10}, 50);
  EXPECT_EQ(views[0].grid.at(0, 49), 0.75f);   // spans 50 newest steps
  EXPECT_EQ(views[1].grid.at(0, 49), 0.75f);   // col 245, still new half
  EXPECT_EQ(views[2].grid.at(0, 49), 0.25f);   // col 490, old half
}

TEST(SampleViews, QueueTooShallowThrows) {
  DataQueue queue(2, 30);
  for (int t = 0; t < 40; ++t) queue.push({{0, 0.5f}}, false);
  EXPECT_THROW(queue.sample_views({4}, 10), QueueTooShallow);
}

TEST(SampleViews, ColumnLabelIsOrOverCoveredSteps) {
  DataQueue queue(1, 12);
  // steps: 11 pushes normal, then one attack, then more normal
  for (int t = 0; t < 8; ++t) queue.push({{0, 0.5f}}, false);
  queue.push({{0, 0.9f}}, true);
  for (int t = 0; t < 3; ++t) queue.push({{0, 0.5f}}, false);
  // attack sits at logical column 3; period-4 view col 0 covers steps 0..3
  const auto views = queue.sample_views({4}, 3);
  EXPECT_TRUE(views[0].column_labels[0]);
  EXPECT_FALSE(views[0].column_labels[1]);
  EXPECT_FALSE(views[0].column_labels[2]);
}

// --- scaler ---------------------------------------------------------------

TEST(Scaler, MidpointClampAndConstant) {
  MinMaxScaler scaler({10.0, 0.0}, {30.0, 0.0});
  EXPECT_DOUBLE_EQ(scaler.transform(0, 20.0), 0.5);
  EXPECT_DOUBLE_EQ(scaler.transform(0, 35.0), 1.0);  // clamped
  EXPECT_DOUBLE_EQ(scaler.transform(0, -5.0), 0.0);
  EXPECT_DOUBLE_EQ(scaler.transform(1, 0.0), 0.5);  // constant signal
}

TEST(Scaler, IdentityOnUnitRangeData) {
  std::vector<SignalRecord> records;
  for (int t = 0; t <= 100; ++t) {
    records.push_back({0.01 * t, "a", {{0, t / 100.0}}, false});
  }
  const auto scaler = MinMaxScaler::fit(records, 1);
  for (double v : {0.0, 0.25, 0.5, 0.99}) {
    EXPECT_NEAR(scaler.transform(0, v), v, 1e-12);
  }
}

TEST(Scaler, RoundTripWithinTolerance) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(-100.0, 100.0);
  std::vector<SignalRecord> records;
  for (int t = 0; t < 500; ++t) {
    records.push_back({0.0, "a", {{0, uni(rng)}}, false});
  }
  const auto scaler = MinMaxScaler::fit(records, 1);
  std::uniform_real_distribution<double> inside(scaler.mins()[0], scaler.maxs()[0]);
  for (int k = 0; k < 100; ++k) {
    const double v = inside(rng);
    EXPECT_NEAR(scaler.inverse(0, scaler.transform(0, v)), v, 1e-9);
  }
}

TEST(Scaler, UnseenSignalThrows) {
  std::vector<SignalRecord> records{{0.0, "a", {{0, 1.0}}, false}};
  EXPECT_THROW(MinMaxScaler::fit(records, 2), UnseenSignal);
}

TEST(Scaler, JsonRoundTrip) {
  MinMaxScaler scaler({1.0, -2.5}, {4.0, 7.5});
  const auto j = scaler.to_json();
  const auto back = MinMaxScaler::from_json(j);
  EXPECT_EQ(back.mins(), scaler.mins());
  EXPECT_EQ(back.maxs(), scaler.maxs());
}

// --- signal ordering --------------------------------------------------------

Matrix<double> make_series(const std::vector<std::vector<double>>& rows) {
  Matrix<double> m(static_cast<int>(rows.size()),
                   static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      m.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  return m;
}

TEST(FitOrder, IdenticalPairEndsUpAdjacent) {
  const int n = 200;
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> base(n), noise(n);
  for (int i = 0; i < n; ++i) {
    base[i] = std::sin(0.1 * i);
    noise[i] = uni(rng);
  }
  // rows: 0 = base, 1 = noise, 2 = copy of base
  const auto series = make_series({base, noise, base});
  const auto order = fit_order(series);
  ASSERT_EQ(order.permutation.size(), 3u);
  const auto pos = [&](int sig) {
    return std::find(order.permutation.begin(), order.permutation.end(), sig) -
           order.permutation.begin();
  };
  EXPECT_EQ(std::abs(pos(0) - pos(2)), 1) << "identical signals not adjacent";

  // brute force over all 3! orders: max sum of adjacent |corr| must place
  // 0 and 2 together, matching the clustering result
  const auto corr = correlation_matrix(series);
  std::vector<int> perm{0, 1, 2}, best;
  double best_score = -1;
  do {
    double score = 0;
    for (int i = 0; i + 1 < 3; ++i) {
      score += std::abs(corr.at(perm[i], perm[i + 1]));
    }
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  const auto bpos = [&](int sig) {
    return std::find(best.begin(), best.end(), sig) - best.begin();
  };
  EXPECT_EQ(std::abs(bpos(0) - bpos(2)), 1);
}

TEST(FitOrder, SingleSignalIdentity) {
  const auto order = fit_order(make_series({{1.0, 2.0, 3.0}}));
  EXPECT_EQ(order.permutation, (std::vector<int>{0}));
  EXPECT_TRUE(order.merges.empty());
}

TEST(FitOrder, AllConstantReturnsInputOrder) {
  const auto order = fit_order(make_series({{1, 1, 1},
                                            {2, 2, 2},
                                            {3, 3, 3},
                                            {4, 4, 4}}));
  EXPECT_EQ(order.permutation, (std::vector<int>{0, 1, 2, 3}));
}

TEST(FitOrder, DegenerateInputRejected) {
  EXPECT_THROW(fit_order(make_series({{1.0}, {2.0}})), DegenerateInput);
}

TEST(FitOrder, PermutationIsBijection) {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int m = 9, n = 120;
  Matrix<double> series(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) series.at(i, j) = uni(rng);
  }
  const auto order = fit_order(series);
  std::vector<int> sorted = order.permutation;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < m; ++i) EXPECT_EQ(sorted[i], i);

  const auto inv = order.inverse();
  for (int i = 0; i < m; ++i) EXPECT_EQ(order.permutation[inv[i]], i);
}

TEST(FitOrder, AntiCorrelatedCountsAsClose) {
  const int n = 100;
  std::vector<double> a(n), b(n), c(n);
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    a[i] = std::sin(0.2 * i);
    b[i] = -a[i];  // perfectly anti-correlated
    c[i] = uni(rng);
  }
  const auto order = fit_order(make_series({a, c, b}));
  const auto pos = [&](int sig) {
    return std::find(order.permutation.begin(), order.permutation.end(), sig) -
           order.permutation.begin();
  };
  EXPECT_EQ(std::abs(pos(0) - pos(2)), 1);
}

TEST(FitOrder, JsonRoundTrip) {
  const auto order = fit_order(make_series({{1, 2, 3, 4},
                                            {2, 4, 6, 8},
                                            {4, 3, 2, 1}}));
  const auto back = SignalOrder::from_json(order.to_json());
  EXPECT_EQ(back.permutation, order.permutation);
  ASSERT_EQ(back.merges.size(), order.merges.size());
  for (size_t i = 0; i < order.merges.size(); ++i) {
    EXPECT_EQ(back.merges[i].left, order.merges[i].left);
    EXPECT_EQ(back.merges[i].right, order.merges[i].right);
    EXPECT_DOUBLE_EQ(back.merges[i].distance, order.merges[i].distance);
  }
}

// --- signal selection --------------------------------------------------------

TEST(SelectSignals, GreedyMatchesSpecExample) {
  // critical {0}; corr(0,1)=0.9, corr(0,2)=0.2, corr(0,3)=0.8
  Matrix<double> corr(4, 4, 0.0);
  for (int i = 0; i < 4; ++i) corr.at(i, i) = 1.0;
  corr.at(0, 1) = corr.at(1, 0) = 0.9;
  corr.at(0, 2) = corr.at(2, 0) = 0.2;
  corr.at(0, 3) = corr.at(3, 0) = 0.8;
  const auto sel = select_signals({0}, corr, 3);
  EXPECT_EQ(sel, (std::set<int>{0, 1, 3}));
}

TEST(SelectSignals, BudgetEqualsTotalSelectsAll) {
  Matrix<double> corr(5, 5, 0.0);
  for (int i = 0; i < 5; ++i) corr.at(i, i) = 1.0;
  const auto sel = select_signals({2}, corr, 5);
  EXPECT_EQ(sel.size(), 5u);
}

TEST(SelectSignals, RoadStyleTwoCorrelatesPerCritical) {
  // 4 critical signals, each with two strong correlates, plus 4 bystanders
  const int total = 16;
  Matrix<double> corr(total, total, 0.0);
  for (int i = 0; i < total; ++i) corr.at(i, i) = 1.0;
  const std::set<int> critical{0, 1, 2, 3};
  for (int c = 0; c < 4; ++c) {
    const int c1 = 4 + 2 * c, c2 = 5 + 2 * c;
    corr.at(c, c1) = corr.at(c1, c) = 0.95;
    corr.at(c, c2) = corr.at(c2, c) = 0.85;
  }
  for (int b = 12; b < 16; ++b) {
    for (int c = 0; c < 4; ++c) corr.at(b, c) = corr.at(c, b) = 0.1;
  }
  const auto sel = select_signals(critical, corr, 12);
  EXPECT_EQ(sel.size(), 12u);
  for (int s = 0; s < 12; ++s) EXPECT_TRUE(sel.count(s)) << s;
  for (int b = 12; b < 16; ++b) EXPECT_FALSE(sel.count(b)) << b;
}

TEST(SelectSignals, TieBreaksTowardLowerIndex) {
  Matrix<double> corr(4, 4, 0.0);
  for (int i = 0; i < 4; ++i) corr.at(i, i) = 1.0;
  corr.at(0, 2) = corr.at(2, 0) = 0.5;
  corr.at(0, 3) = corr.at(3, 0) = 0.5;
  const auto sel = select_signals({0}, corr, 2);
  EXPECT_EQ(sel, (std::set<int>{0, 2}));
}

TEST(SelectSignals, BudgetTooSmallThrows) {
  Matrix<double> corr(3, 3, 0.0);
  EXPECT_THROW(select_signals({0, 1}, corr, 1), BudgetTooSmall);
}

// --- percentile --------------------------------------------------------------

TEST(Percentile, LinearInterpolationConvention) {
  std::vector<double> grid(100);
  for (int i = 0; i < 100; ++i) grid[i] = 0.01 * i;
  EXPECT_NEAR(percentile(grid, 95.0), 0.9405, 1e-12);
  EXPECT_NEAR(percentile(std::vector<int>{0, 0, 0, 1, 2}, 99.0), 1.96, 1e-12);
  EXPECT_NEAR(percentile(std::vector<double>{0.0, 0.0, 1.0 / 3.0}, 50.0), 0.0,
              1e-12);
  EXPECT_DOUBLE_EQ(percentile(std::vector<double>{5.0}, 50.0), 5.0);
}

}  // namespace
