#pragma once
// Binary cross-entropy and the proximity-penalized variant (BCE-PP).
//
// Per-sample BCE-PP is  alpha * BCE(y_i, z_i) * log10(beta_i),  where beta_i
// comes from the sample's flare subclass (see proximity_weights). Everything
// is evaluated from logits via softplus, so saturated logits never hit log(0).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flarepp/flare_class.hpp"

namespace flarepp {

enum class Reduction { mean, sum, none };

Reduction parse_reduction(std::string_view text);

// Recommended alpha range; values outside it are allowed but warned about.
inline constexpr double kAlphaRecommendedMin = 0.25;
inline constexpr double kAlphaRecommendedMax = 1.0;

struct LossConfig {
  double alpha = 0.75;
  OrdinalWeights weights = proximity_weights(ThresholdSpec{});
  Reduction reduction = Reduction::mean;

  // Throws std::invalid_argument unless alpha > 0 and finite.
  void validate() const;
  // Human-readable warning when alpha is outside [0.25, 1].
  std::optional<std::string> alpha_warning() const;
};

// (logit, target, subclass) triples. Construction checks equal lengths, N >= 1
// and that every target agrees with binarize(subclass, threshold).
class LossBatch {
 public:
  LossBatch(std::vector<double> logits, std::vector<BinaryLabel> targets,
            std::vector<FlareClass> subclasses, const ThresholdSpec& threshold);

  std::size_t size() const noexcept { return logits_.size(); }
  std::span<const double> logits() const noexcept { return logits_; }
  std::span<const BinaryLabel> targets() const noexcept { return targets_; }
  std::span<const FlareClass> subclasses() const noexcept { return subclasses_; }
  const ThresholdSpec& threshold() const noexcept { return threshold_; }

 private:
  std::vector<double> logits_;
  std::vector<BinaryLabel> targets_;
  std::vector<FlareClass> subclasses_;
  ThresholdSpec threshold_;
};

double sigmoid(double z) noexcept;
// log(1 + e^x) without overflow or cancellation.
double softplus(double x) noexcept;

// BCE of a single logit against a binary target.
double bce_term(double logit, BinaryLabel target) noexcept;
// BCE of a probability p in (0,1) against a binary target.
double bce_term_prob(double p, BinaryLabel target);

// Per-sample loss vectors (reduction "none").
std::vector<double> bce_terms(const LossBatch& batch);
std::vector<double> bce_pp_terms(const LossBatch& batch, const LossConfig& cfg);

// Scalar reductions. Reduction::none throws std::invalid_argument; use the
// *_terms functions for per-sample values.
double bce(const LossBatch& batch, Reduction reduction = Reduction::mean);
double bce_pp(const LossBatch& batch, const LossConfig& cfg);
double bce_pp(const LossBatch& batch, const LossConfig& cfg, Reduction reduction);

// dL/dz_i. Mean reduction divides by N; sum and none do not.
std::vector<double> bce_grad(const LossBatch& batch, Reduction reduction = Reduction::mean);
std::vector<double> bce_pp_grad(const LossBatch& batch, const LossConfig& cfg);

// Multiplier alpha * log10(beta) applied to a sample of class c.
double penalty_multiplier(FlareClass c, const LossConfig& cfg) noexcept;

double reduce(std::span<const double> terms, Reduction reduction);

struct CurvePoint {
  double p;
  double loss_bce;
  double loss_bce_pp;
};

// Loss as a function of predicted FL probability for one (subclass, target).
// Throws std::domain_error if any grid point is outside the open interval (0,1).
std::vector<CurvePoint> loss_curve(FlareClass subclass, BinaryLabel target, const LossConfig& cfg,
                                   std::span<const double> grid);

// n evenly spaced interior points i/(n+1), i = 1..n.
std::vector<double> probability_grid(std::size_t n);

// CSV with header "p,loss_bce,loss_bce_pp", 9 significant digits.
std::string curve_to_csv(std::span<const CurvePoint> curve);

}  // namespace flarepp
