#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "cansig/errors.hpp"
#include "cansig/matrix.hpp"
#include "cansig/stats.hpp"

#include <json.hpp>

namespace cansig {

/// One agglomerative merge. Cluster ids follow the scipy convention:
/// 0..m-1 are the original signals, m+k is the cluster formed by merge k.
struct ClusterMerge {
  int left;
  int right;
  double distance;
  int size;
};

/// Row permutation placing correlated signals on adjacent image rows.
/// permutation[row] = original signal index shown at that row.
struct SignalOrder {
  std::vector<int> permutation;
  std::vector<ClusterMerge> merges;

  std::vector<int> inverse() const {
    std::vector<int> inv(permutation.size());
    for (size_t row = 0; row < permutation.size(); ++row) {
      inv[permutation[row]] = static_cast<int>(row);
    }
    return inv;
  }

  nlohmann::json to_json() const {
    nlohmann::json jm = nlohmann::json::array();
    for (const auto& mg : merges) {
      jm.push_back({mg.left, mg.right, mg.distance, mg.size});
    }
    return nlohmann::json{{"permutation", permutation}, {"merges", jm}};
  }

  static SignalOrder from_json(const nlohmann::json& j) {
    SignalOrder o;
    o.permutation = j.at("permutation").get<std::vector<int>>();
    for (const auto& row : j.at("merges")) {
      o.merges.push_back({row.at(0).get<int>(), row.at(1).get<int>(),
                          row.at(2).get<double>(), row.at(3).get<int>()});
    }
    return o;
  }
};

/// Average-linkage agglomerative clustering over distance 1 - |corr|;
/// the permutation is the dendrogram leaf order. Ties merge the pair with
/// the lexicographically smallest cluster ids, which keeps the result
/// deterministic and leaves an all-constant matrix in input order.
inline SignalOrder fit_order_from_correlation(const Matrix<double>& corr) {
  const int m = corr.rows();
  SignalOrder order;
  if (m == 1) {
    order.permutation = {0};
    return order;
  }

  const int max_clusters = 2 * m - 1;
  // dist[a][b] between active clusters, Lance-Williams updated in place
  Matrix<double> dist(max_clusters, max_clusters, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const double d = 1.0 - std::abs(corr.at(i, j));
      dist.at(i, j) = d;
      dist.at(j, i) = d;
    }
  }

  std::vector<int> active;
  std::vector<int> sizes(max_clusters, 1);
  std::vector<std::vector<int>> leaves(max_clusters);
  for (int i = 0; i < m; ++i) {
    active.push_back(i);
    leaves[i] = {i};
  }

  int next_id = m;
  while (active.size() > 1) {
    int best_a = -1, best_b = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t ai = 0; ai < active.size(); ++ai) {
      for (size_t bi = ai + 1; bi < active.size(); ++bi) {
        const int a = active[ai];
        const int b = active[bi];
        const double d = dist.at(a, b);
        if (d < best_d) {
          best_d = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    const int merged = next_id++;
    sizes[merged] = sizes[best_a] + sizes[best_b];
    leaves[merged].reserve(sizes[merged]);
    leaves[merged] = leaves[best_a];
    leaves[merged].insert(leaves[merged].end(), leaves[best_b].begin(),
                          leaves[best_b].end());
    order.merges.push_back({best_a, best_b, best_d, sizes[merged]});

    std::vector<int> next_active;
    for (int c : active) {
      if (c == best_a || c == best_b) continue;
      const double d = (sizes[best_a] * dist.at(best_a, c) +
                        sizes[best_b] * dist.at(best_b, c)) /
                       static_cast<double>(sizes[merged]);
      dist.at(merged, c) = d;
      dist.at(c, merged) = d;
      next_active.push_back(c);
    }
    next_active.push_back(merged);
    active = std::move(next_active);
  }

  order.permutation = leaves[active.front()];
  return order;
}

/// Compute the Pearson matrix of an m x N signal series and cluster.
inline SignalOrder fit_order(const Matrix<double>& series) {
  if (series.cols() < 2) {
    throw DegenerateInput("fit_order: need at least 2 time samples");
  }
  if (series.rows() == 1) {
    SignalOrder o;
    o.permutation = {0};
    return o;
  }
  return fit_order_from_correlation(correlation_matrix(series));
}

/// Extend a critical signal set up to `budget` signals, greedily adding the
/// signal with the highest |corr| to any critical signal; ties break toward
/// the lower signal index.
inline std::set<int> select_signals(const std::set<int>& critical,
                                    const Matrix<double>& corr, int budget) {
  const int total = corr.rows();
  if (budget < static_cast<int>(critical.size())) {
    throw BudgetTooSmall("budget " + std::to_string(budget) +
                         " below critical set size " +
                         std::to_string(critical.size()));
  }
  if (budget > total) {
    throw ConfigError("budget exceeds total signal count");
  }
  std::set<int> selected = critical;
  while (static_cast<int>(selected.size()) < budget) {
    int best = -1;
    double best_score = -1.0;
    for (int s = 0; s < total; ++s) {
      if (selected.count(s)) continue;
      double score = 0.0;
      for (int c : critical) {
        score = std::max(score, std::abs(corr.at(s, c)));
      }
      if (score > best_score) {
        best_score = score;
        best = s;
      }
    }
    selected.insert(best);
  }
  return selected;
}

}  // namespace cansig
