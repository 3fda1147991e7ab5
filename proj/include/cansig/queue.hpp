#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "cansig/errors.hpp"
#include "cansig/matrix.hpp"

namespace cansig {

/// An m x w image sampled from the data queue at one period.
struct View {
  int period = 1;
  long long origin_step = 0;        // global step index of column 0 (newest)
  Matrix<float> grid;               // m x w
  std::vector<uint8_t> column_labels;  // evaluation only: attack flag per column

  bool any_attack() const {
    return std::any_of(column_labels.begin(), column_labels.end(),
                       [](uint8_t b) { return b != 0; });
  }
};

/// FIFO queue of the last q message steps, forward filled: every column
/// holds, for each signal, the most recent value observed at or before the
/// step that column represents. Column 0 is the newest step. Signals never
/// observed read 0.5 (mid-range) until their first observation.
class DataQueue {
 public:
  DataQueue(int m, int depth)
      : m_(m),
        q_(depth),
        grid_(m, depth, 0.5f),
        labels_(depth, 0),
        initialized_(m, 0) {}

  int signal_count() const { return m_; }
  int depth() const { return q_; }
  long long steps() const { return steps_; }

  bool all_initialized() const {
    return std::all_of(initialized_.begin(), initialized_.end(),
                       [](uint8_t b) { return b != 0; });
  }

  /// Detection output is suppressed until the queue has fully turned over
  /// and every tracked signal has reported at least once.
  bool warmed_up() const { return steps_ >= q_ && all_initialized(); }

  /// Insert one message step. `scaled` carries (signal index, value in [0,1]);
  /// all other signals are copied forward from the previous step.
  void push(const std::vector<std::pair<int, float>>& scaled, bool attack_label) {
    const int prev_head = head_;
    head_ = (head_ + q_ - 1) % q_;
    if (steps_ == 0) {
      // the pre-history column is all 0.5, which the constructor provides
      for (int i = 0; i < m_; ++i) grid_.at(i, head_) = 0.5f;
    } else {
      for (int i = 0; i < m_; ++i) grid_.at(i, head_) = grid_.at(i, prev_head);
    }
    for (const auto& [index, value] : scaled) {
      grid_.at(index, head_) = value;
      initialized_[index] = 1;
    }
    labels_[head_] = attack_label ? 1 : 0;
    ++steps_;
  }

  /// Value of signal i at logical column k (0 = newest).
  float at(int i, int k) const { return grid_.at(i, (head_ + k) % q_); }

  bool label_at(int k) const { return labels_[(head_ + k) % q_] != 0; }

  const std::vector<uint8_t>& initialized_mask() const { return initialized_; }

  /// Sample one view per period: view column k = queue column k*period.
  /// A view column's label is the OR of the labels of the period steps it
  /// covers, so an injection between sampling points still marks the view.
  std::vector<View> sample_views(const std::vector<int>& periods, int w) const {
    for (int t : periods) {
      if (static_cast<long long>(w) * t > q_) {
        throw QueueTooShallow("queue depth " + std::to_string(q_) +
                              " cannot host w=" + std::to_string(w) +
                              " at period " + std::to_string(t));
      }
    }
    std::vector<View> views;
    views.reserve(periods.size());
    for (int t : periods) {
      View v;
      v.period = t;
      v.origin_step = steps_ - 1;
      v.grid = Matrix<float>(m_, w);
      v.column_labels.assign(w, 0);
      for (int k = 0; k < w; ++k) {
        const int col = (head_ + k * t) % q_;
        for (int i = 0; i < m_; ++i) {
          v.grid.at(i, k) = grid_.at(i, col);
        }
        uint8_t lab = 0;
        const int cover_end = std::min((k + 1) * t, q_);
        for (int s = k * t; s < cover_end; ++s) {
          lab |= labels_[(head_ + s) % q_];
        }
        v.column_labels[k] = lab;
      }
      views.push_back(std::move(v));
    }
    return views;
  }

 private:
  int m_;
  int q_;
  Matrix<float> grid_;          // physical columns, head_ = newest
  std::vector<uint8_t> labels_;
  std::vector<uint8_t> initialized_;
  int head_ = 0;
  long long steps_ = 0;
};

}  // namespace cansig
