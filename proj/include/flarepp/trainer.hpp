#pragma once
// Training harness: mini-batch SGD with L2 weight decay, plateau-based
// learning-rate reduction, grid search and evaluation.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flarepp/loss.hpp"
#include "flarepp/metrics.hpp"
#include "flarepp/model.hpp"
#include "flarepp/pipeline.hpp"

namespace flarepp {

enum class LossKind { bce, bce_pp };
std::string_view to_token(LossKind k) noexcept;
LossKind parse_loss_kind(std::string_view text);  // "bce", "bce-pp" or "bce_pp"

struct TrainConfig {
  LossKind loss_kind = LossKind::bce_pp;
  double initial_lr = 0.001;
  double weight_decay = 0.001;
  std::size_t batch_size = 64;
  double alpha = 0.75;
  std::size_t epochs = 50;
  std::uint64_t seed = 42;
  ThresholdSpec threshold{};

  // Optimal settings found by the reference grid search for each loss.
  static TrainConfig defaults_for(LossKind kind);

  void validate() const;
  LossConfig loss_config() const;
  // Stable "key=value;..." rendering used for hashing and manifests.
  std::string canonical() const;
  std::uint64_t hash() const;
};

// Features plus the labels the losses need.
struct FeatureSplit {
  std::vector<std::vector<double>> features;
  std::vector<BinaryLabel> targets;
  std::vector<FlareClass> subclasses;

  std::size_t size() const noexcept { return features.size(); }
  bool empty() const noexcept { return features.empty(); }
};

FeatureSplit extract_split(std::span<const LabeledSample> samples, const FeatureExtractor& fx);
void standardize(FeatureSplit& split, const FeatureScaler& scaler);

struct TrainData {
  FeatureSplit train;
  FeatureSplit validation;
};

// p' = p - lr * (g + weight_decay * p). Throws std::domain_error on size mismatch.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr,
              double weight_decay);

// Plateau scheduler. An epoch improves when val_loss < best (strict, no
// threshold). After `patience` consecutive non-improving epochs the rate is
// reduced and the counter resets. The rate is always initial * factor^k,
// k = number of reductions so far.
struct SchedulerState {
  double initial_lr = 0.01;
  double current_lr = 0.01;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t epochs_since_improvement = 0;
  std::size_t reductions = 0;
  double factor = 0.9;
  std::size_t patience = 2;

  static SchedulerState start(double initial_lr);
};

SchedulerState scheduler_step(SchedulerState state, double val_loss);

class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(std::size_t epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_tss = 0.0;  // NaN when undefined for the split
  double val_hss = 0.0;
  double val_css = 0.0;
  double lr = 0.0;  // rate used during this epoch

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

// "epoch,train_loss,val_loss,val_tss,val_hss,val_css,lr"
std::string epoch_log_csv(std::span<const EpochLog> log);

struct TrainResult {
  Model model;
  std::vector<EpochLog> history;
  std::size_t best_css_epoch = 0;  // informational; the returned model is the last epoch's
};

// Mean loss of the model over a split with the configured loss.
double split_loss(const Model& model, const FeatureSplit& split, const TrainConfig& cfg);
// Gradient of the mean loss over `split` with respect to the model parameters.
std::vector<double> loss_gradient(const Model& model, const FeatureSplit& split,
                                  const TrainConfig& cfg);

// Throws TrainingDivergence on a non-finite loss.
TrainResult train(const TrainData& data, const ModelSpec& spec, const TrainConfig& cfg);

struct Evaluation {
  ConfusionMatrix cm;
  SkillScores scores;
};

// Scores throw UndefinedScoreError when the split lacks one of the classes.
Evaluation evaluate(const Model& model, const FeatureSplit& split, double cutoff = 0.5);
std::vector<double> predict_proba(const Model& model, const FeatureSplit& split);

struct GridSpace {
  std::vector<double> learning_rates;
  std::vector<double> weight_decays;
  std::vector<std::size_t> batch_sizes;
  std::vector<double> alphas;  // ignored (collapsed) for plain BCE

  // Search space axes of the reference study.
  static GridSpace reference();
  std::vector<TrainConfig> expand(const TrainConfig& base) const;
};

struct LeaderboardEntry {
  std::size_t grid_index = 0;
  TrainConfig config;
  Evaluation validation;
};

// One run per grid point (up to `workers` concurrently); sorted by CSS, then
// TSS, then HSS, then grid index.
std::vector<LeaderboardEntry> grid_search(const GridSpace& space, const ModelSpec& spec,
                                          const TrainData& data, const TrainConfig& base,
                                          std::size_t workers = 1);

std::string leaderboard_csv(std::span<const LeaderboardEntry> board);

// Versioned text checkpoint: model spec, feature settings, config hash and
// parameters (17 significant digits).
struct Checkpoint {
  Model model;
  std::size_t feature_grid = 8;
  FeatureScaler scaler;
  TrainConfig config;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flarepp
