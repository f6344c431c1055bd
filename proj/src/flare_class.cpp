#include "flarepp/flare_class.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flarepp {

namespace {

constexpr std::array<std::string_view, kNumClasses> kTokens = {"FQ", "A", "B", "C", "M", "X"};

// Open lower bounds, highest class first.
struct FluxBound {
  FlareClass cls;
  double lower;
};
constexpr std::array<FluxBound, 5> kFluxBounds = {{{FlareClass::X, 1e-4},
                                                    {FlareClass::M, 1e-5},
                                                    {FlareClass::C, 1e-6},
                                                    {FlareClass::B, 1e-7},
                                                    {FlareClass::A, 1e-8}}};

}  // namespace

FlareClass class_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kNumClasses)) {
    throw std::out_of_range("flare class index out of range: " + std::to_string(index));
  }
  return static_cast<FlareClass>(index);
}

std::string_view to_token(FlareClass c) noexcept { return kTokens[static_cast<std::size_t>(c)]; }

std::string_view to_token(BinaryLabel l) noexcept { return l == BinaryLabel::FL ? "FL" : "NF"; }

FlareClass parse_class(std::string_view token) {
  for (std::size_t i = 0; i < kTokens.size(); ++i) {
    if (kTokens[i] == token) return static_cast<FlareClass>(i);
  }
  throw std::invalid_argument("unknown flare class token '" + std::string(token) + "'");
}

FlareClass class_from_flux(double flux) {
  if (!std::isfinite(flux) || flux < 0.0) {
    throw std::domain_error("peak flux must be finite and >= 0");
  }
  for (const auto& b : kFluxBounds) {
    if (flux > b.lower) return b.cls;
  }
  return FlareClass::FQ;
}

ThresholdSpec::ThresholdSpec(FlareClass min_positive) : min_positive_(min_positive) {
  if (min_positive == FlareClass::FQ) {
    throw std::invalid_argument("threshold >=FQ leaves the NF side empty");
  }
}

ThresholdSpec ThresholdSpec::parse(std::string_view text) {
  if (text.size() < 3 || text.substr(0, 2) != ">=") {
    throw std::invalid_argument("threshold must look like '>=M', got '" + std::string(text) + "'");
  }
  return ThresholdSpec(parse_class(text.substr(2)));
}

std::string ThresholdSpec::to_string() const { return ">=" + std::string(to_token(min_positive_)); }

BinaryLabel binarize(FlareClass c, const ThresholdSpec& t) noexcept {
  return ordinal_index(c) >= ordinal_index(t.min_positive_class()) ? BinaryLabel::FL
                                                                    : BinaryLabel::NF;
}

OrdinalWeights::OrdinalWeights(ThresholdSpec threshold, std::array<int, kNumClasses> log_beta)
    : threshold_(threshold), log_beta_(log_beta) {
  for (int lb : log_beta_) {
    if (lb < 1) throw std::invalid_argument("log_beta must be >= 1");
  }
}

double OrdinalWeights::beta(FlareClass c) const noexcept {
  // Small non-negative integer powers of ten are exact in double.
  double v = 1.0;
  for (int i = 0; i < log_beta(c); ++i) v *= 10.0;
  return v;
}

int threshold_distance(FlareClass c, const ThresholdSpec& t) noexcept {
  const int boundary = ordinal_index(t.min_positive_class());
  const int idx = ordinal_index(c);
  return idx >= boundary ? idx - boundary : boundary - 1 - idx;
}

OrdinalWeights proximity_weights(const ThresholdSpec& t) {
  std::array<int, kNumClasses> dist{};
  for (FlareClass c : kAllClasses) dist[static_cast<std::size_t>(c)] = threshold_distance(c, t);
  const int w_max = *std::max_element(dist.begin(), dist.end()) + 1;
  std::array<int, kNumClasses> log_beta{};
  for (std::size_t i = 0; i < kNumClasses; ++i) log_beta[i] = w_max - dist[i];
  return OrdinalWeights(t, log_beta);
}

}  // namespace flarepp
