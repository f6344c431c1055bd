#pragma once
// Fixed-seed end-to-end comparison of BCE and BCE-PP on synthetic data with
// the reference class mix scaled down.

#include <cstdint>
#include <string>
#include <vector>

#include "flarepp/synth.hpp"
#include "flarepp/trainer.hpp"

namespace flarepp {

struct BenchmarkOptions {
  std::uint64_t seed = 42;
  double scale = 50.0;  // reference counts divided by this
  std::size_t image_size = 32;
  std::size_t feature_grid = 8;
  std::size_t epochs = 50;
  ModelSpec model{};  // input_dim is filled in from feature_grid
};

struct BenchmarkRun {
  TrainConfig config;
  std::vector<EpochLog> history;
  Evaluation validation;
  Evaluation test;
};

struct BenchmarkReport {
  SplitCounts original_counts;
  ClassCounts balanced_train{};
  BenchmarkRun bce;
  BenchmarkRun bce_pp;
};

// Data prepared for training: balanced, featurized and standardized.
struct PreparedBenchmark {
  TrainData data;
  FeatureSplit test;
  FeatureScaler scaler;
  SplitCounts original_counts;
  ClassCounts balanced_train{};
};

PreparedBenchmark prepare_benchmark(const BenchmarkOptions& opt);
BenchmarkReport run_benchmark(const BenchmarkOptions& opt = {});

std::string format_benchmark(const BenchmarkReport& r);

}  // namespace flarepp
