#include "flarepp/loss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace flarepp {

Reduction parse_reduction(std::string_view text) {
  if (text == "mean") return Reduction::mean;
  if (text == "sum") return Reduction::sum;
  if (text == "none") return Reduction::none;
  throw std::invalid_argument("unknown reduction '" + std::string(text) + "'");
}

void LossConfig::validate() const {
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw std::invalid_argument("alpha must be finite and > 0");
  }
}

std::optional<std::string> LossConfig::alpha_warning() const {
  if (alpha < kAlphaRecommendedMin || alpha > kAlphaRecommendedMax) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "alpha=%g is outside the recommended range [%g, %g]", alpha,
                  kAlphaRecommendedMin, kAlphaRecommendedMax);
    return std::string(buf);
  }
  return std::nullopt;
}

LossBatch::LossBatch(std::vector<double> logits, std::vector<BinaryLabel> targets,
                     std::vector<FlareClass> subclasses, const ThresholdSpec& threshold)
    : logits_(std::move(logits)),
      targets_(std::move(targets)),
      subclasses_(std::move(subclasses)),
      threshold_(threshold) {
  if (logits_.empty()) throw std::domain_error("loss batch must not be empty");
  if (targets_.size() != logits_.size() || subclasses_.size() != logits_.size()) {
    throw std::domain_error("loss batch vectors differ in length");
  }
  for (std::size_t i = 0; i < logits_.size(); ++i) {
    if (binarize(subclasses_[i], threshold_) != targets_[i]) {
      throw std::domain_error("sample " + std::to_string(i) + ": target " +
                              std::string(to_token(targets_[i])) + " inconsistent with subclass " +
                              std::string(to_token(subclasses_[i])) + " under " +
                              threshold_.to_string());
    }
  }
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// -[y log s(z) + (1-y) log(1 - s(z))]  ==  softplus(-z) for y=1, softplus(z) for y=0
double bce_term(double logit, BinaryLabel target) noexcept {
  return target == BinaryLabel::FL ? softplus(-logit) : softplus(logit);
}

double bce_term_prob(double p, BinaryLabel target) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("probability must lie in (0,1)");
  return target == BinaryLabel::FL ? -std::log(p) : -std::log1p(-p);
}

double penalty_multiplier(FlareClass c, const LossConfig& cfg) noexcept {
  return cfg.alpha * static_cast<double>(cfg.weights.log_beta(c));
}

namespace {

void check_threshold(const LossBatch& batch, const LossConfig& cfg) {
  if (!(batch.threshold() == cfg.weights.threshold())) {
    throw std::invalid_argument("loss weights were built for " + cfg.weights.threshold().to_string() +
                                " but batch uses " + batch.threshold().to_string());
  }
  cfg.validate();
}

double target_value(BinaryLabel l) noexcept { return l == BinaryLabel::FL ? 1.0 : 0.0; }

}  // namespace

double reduce(std::span<const double> terms, Reduction reduction) {
  if (terms.empty()) throw std::domain_error("cannot reduce an empty loss vector");
  double total = 0.0;
  for (double t : terms) total += t;
  switch (reduction) {
    case Reduction::mean:
      return total / static_cast<double>(terms.size());
    case Reduction::sum:
      return total;
    case Reduction::none:
      break;
  }
  throw std::invalid_argument("scalar loss requested with reduction 'none'");
}

std::vector<double> bce_terms(const LossBatch& batch) {
  std::vector<double> out(batch.size());
  const auto z = batch.logits();
  const auto y = batch.targets();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bce_term(z[i], y[i]);
  return out;
}

std::vector<double> bce_pp_terms(const LossBatch& batch, const LossConfig& cfg) {
  check_threshold(batch, cfg);
  std::vector<double> out(batch.size());
  const auto z = batch.logits();
  const auto y = batch.targets();
  const auto c = batch.subclasses();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = penalty_multiplier(c[i], cfg) * bce_term(z[i], y[i]);
  }
  return out;
}

double bce(const LossBatch& batch, Reduction reduction) { return reduce(bce_terms(batch), reduction); }

double bce_pp(const LossBatch& batch, const LossConfig& cfg) {
  return bce_pp(batch, cfg, cfg.reduction);
}

double bce_pp(const LossBatch& batch, const LossConfig& cfg, Reduction reduction) {
  return reduce(bce_pp_terms(batch, cfg), reduction);
}

std::vector<double> bce_grad(const LossBatch& batch, Reduction reduction) {
  const double scale = reduction == Reduction::mean ? 1.0 / static_cast<double>(batch.size()) : 1.0;
  std::vector<double> out(batch.size());
  const auto z = batch.logits();
  const auto y = batch.targets();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (sigmoid(z[i]) - target_value(y[i])) * scale;
  return out;
}

std::vector<double> bce_pp_grad(const LossBatch& batch, const LossConfig& cfg) {
  check_threshold(batch, cfg);
  std::vector<double> out = bce_grad(batch, cfg.reduction);
  const auto c = batch.subclasses();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= penalty_multiplier(c[i], cfg);
  return out;
}

std::vector<CurvePoint> loss_curve(FlareClass subclass, BinaryLabel target, const LossConfig& cfg,
                                   std::span<const double> grid) {
  cfg.validate();
  const double mult = penalty_multiplier(subclass, cfg);
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  for (double p : grid) {
    const double base = bce_term_prob(p, target);
    out.push_back({p, base, mult * base});
  }
  return out;
}

std::vector<double> probability_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
  }
  return g;
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::string out = "p,loss_bce,loss_bce_pp\n";
  char buf[96];
  for (const auto& pt : curve) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", pt.p, pt.loss_bce, pt.loss_bce_pp);
    out += buf;
  }
  return out;
}

}  // namespace flarepp
