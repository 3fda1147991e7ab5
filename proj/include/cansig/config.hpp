#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "cansig/autoencoder.hpp"
#include "cansig/errors.hpp"
#include "cansig/ingest.hpp"
#include "cansig/thresholds.hpp"

#include <json.hpp>

namespace cansig {

/// One run's knobs: the m x w imaging geometry, sampling periods, threshold
/// percentiles, and AE training hyperparameters.
struct RunConfig {
  int m = 0;
  int w = 50;
  std::vector<int> periods{1, 5, 10};
  DetectionPercentiles percentiles;

  std::array<int, 5> filters{32, 16, 16, 32, 1};
  int epochs = 25;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int patience = 10;
  uint32_t seed = 1;

  // window sampling strides (in message steps) per phase
  int train_stride = 50;
  int calibrate_stride = 10;
  int detect_stride = 1;
  double train_fraction = 0.9;  // remainder of clean data is validation
  int jobs = 0;                 // 0: one thread per AE, capped by hardware

  int queue_depth() const {
    return w * *std::max_element(periods.begin(), periods.end());
  }

  AeConfig ae_config() const {
    AeConfig c;
    c.input_rows = m;
    c.input_cols = w;
    c.filters = filters;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.learning_rate = learning_rate;
    c.momentum = momentum;
    c.patience = patience;
    c.seed = seed;
    return c;
  }

  void validate() const {
    if (m < 4) throw ConfigError("m must be >= 4");
    if (w < 4) throw ConfigError("w must be >= 4");
    if (periods.empty()) throw ConfigError("at least one sampling period required");
    for (size_t i = 0; i < periods.size(); ++i) {
      if (periods[i] < 1) throw ConfigError("sampling periods must be >= 1");
      if (i > 0 && periods[i] <= periods[i - 1]) {
        throw ConfigError("sampling periods must be strictly increasing");
      }
    }
    if (filters.back() != 1) throw ConfigError("last filter count must be 1");
    const auto in_range = [](double v) { return v > 0.0 && v < 100.0; };
    if (!in_range(percentiles.loss) || !in_range(percentiles.violation) ||
        !in_range(percentiles.ensemble)) {
      throw ConfigError("percentiles must lie in (0, 100)");
    }
    if (train_fraction <= 0.0 || train_fraction > 1.0) {
      throw ConfigError("train_fraction must be in (0, 1]");
    }
    if (train_stride < 1 || calibrate_stride < 1 || detect_stride < 1) {
      throw ConfigError("strides must be >= 1");
    }
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"m", m},
        {"w", w},
        {"periods", periods},
        {"percentiles",
         {{"loss", percentiles.loss},
          {"violation", percentiles.violation},
          {"ensemble", percentiles.ensemble}}},
        {"filters", filters},
        {"epochs", epochs},
        {"batch_size", batch_size},
        {"learning_rate", learning_rate},
        {"momentum", momentum},
        {"patience", patience},
        {"seed", seed},
        {"train_stride", train_stride},
        {"calibrate_stride", calibrate_stride},
        {"detect_stride", detect_stride},
        {"train_fraction", train_fraction},
        {"jobs", jobs}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.m = j.at("m").get<int>();
    c.w = j.value("w", c.w);
    if (j.contains("periods")) c.periods = j.at("periods").get<std::vector<int>>();
    if (j.contains("percentiles")) {
      const auto& p = j.at("percentiles");
      c.percentiles.loss = p.value("loss", c.percentiles.loss);
      c.percentiles.violation = p.value("violation", c.percentiles.violation);
      c.percentiles.ensemble = p.value("ensemble", c.percentiles.ensemble);
    }
    if (j.contains("filters")) {
      const auto f = j.at("filters").get<std::vector<int>>();
      if (f.size() != 5) throw ConfigError("filters must list 5 layer widths");
      std::copy(f.begin(), f.end(), c.filters.begin());
    }
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.momentum = j.value("momentum", c.momentum);
    c.patience = j.value("patience", c.patience);
    c.seed = j.value("seed", c.seed);
    c.train_stride = j.value("train_stride", c.train_stride);
    c.calibrate_stride = j.value("calibrate_stride", c.calibrate_stride);
    c.detect_stride = j.value("detect_stride", c.detect_stride);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.jobs = j.value("jobs", c.jobs);
    c.validate();
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
    try {
      return from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
};

}  // namespace cansig
