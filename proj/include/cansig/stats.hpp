#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "cansig/errors.hpp"
#include "cansig/matrix.hpp"

namespace cansig {

/// Percentile by linear interpolation between the closest order statistics:
/// rank = p/100 * (N-1); result = x[lo] + frac * (x[lo+1] - x[lo]).
/// Takes the sample by value; selection is done with nth_element.
template <typename T>
double percentile(std::vector<T> sample, double p) {
  if (sample.empty()) {
    throw InsufficientData("percentile: empty sample");
  }
  if (sample.size() == 1) return static_cast<double>(sample[0]);
  const double rank = p / 100.0 * static_cast<double>(sample.size() - 1);
  const size_t lo = static_cast<size_t>(std::clamp(
      std::floor(rank), 0.0, static_cast<double>(sample.size() - 1)));
  const double frac = rank - static_cast<double>(lo);
  std::nth_element(sample.begin(), sample.begin() + lo, sample.end());
  const double x_lo = static_cast<double>(sample[lo]);
  if (frac == 0.0 || lo + 1 >= sample.size()) return x_lo;
  const double x_hi = static_cast<double>(
      *std::min_element(sample.begin() + lo + 1, sample.end()));
  return x_lo + frac * (x_hi - x_lo);
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Pearson correlation of two equally long series. Either series being
/// constant yields 0 (a constant signal carries no correlation information).
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t n = a.size();
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

/// Pairwise Pearson correlations of the rows of an m x N series matrix.
/// Diagonal is 1; rows with zero variance correlate 0 against everything.
inline Matrix<double> correlation_matrix(const Matrix<double>& series) {
  const int m = series.rows();
  const int n = series.cols();
  if (n < 2) {
    throw DegenerateInput("correlation_matrix: need at least 2 samples");
  }
  std::vector<double> means(m, 0.0), norms(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* r = series.row(i);
    double s = 0;
    for (int j = 0; j < n; ++j) s += r[j];
    means[i] = s / n;
    double q = 0;
    for (int j = 0; j < n; ++j) {
      const double d = r[j] - means[i];
      q += d * d;
    }
    norms[i] = std::sqrt(q);
  }
  Matrix<double> corr(m, m, 0.0);
  for (int i = 0; i < m; ++i) {
    corr.at(i, i) = 1.0;
    for (int j = i + 1; j < m; ++j) {
      double c = 0.0;
      if (norms[i] > 0 && norms[j] > 0) {
        const double* a = series.row(i);
        const double* b = series.row(j);
        double s = 0;
        for (int k = 0; k < n; ++k) {
          s += (a[k] - means[i]) * (b[k] - means[j]);
        }
        c = s / (norms[i] * norms[j]);
      }
      corr.at(i, j) = c;
      corr.at(j, i) = c;
    }
  }
  return corr;
}

}  // namespace cansig
