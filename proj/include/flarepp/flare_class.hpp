#pragma once
// Flare class taxonomy, flux thresholds and ordinal proximity weights.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace flarepp {

// Ordinal flare class. Underlying value is the ordinal index.
enum class FlareClass : std::uint8_t { FQ = 0, A = 1, B = 2, C = 3, M = 4, X = 5 };

inline constexpr std::size_t kNumClasses = 6;
inline constexpr std::array<FlareClass, kNumClasses> kAllClasses = {
    FlareClass::FQ, FlareClass::A, FlareClass::B, FlareClass::C, FlareClass::M, FlareClass::X};

enum class BinaryLabel : std::uint8_t { NF = 0, FL = 1 };

constexpr int ordinal_index(FlareClass c) noexcept { return static_cast<int>(c); }

// Throws std::out_of_range unless 0 <= index < 6.
FlareClass class_from_index(int index);

// "FQ", "A", "B", "C", "M", "X"
std::string_view to_token(FlareClass c) noexcept;
FlareClass parse_class(std::string_view token);

std::string_view to_token(BinaryLabel l) noexcept;

// Peak X-ray flux in W/m^2. Class bounds are strict: 1e-6 exactly is B.
// Throws std::domain_error on negative or non-finite flux.
FlareClass class_from_flux(double flux);

// Binary split: classes at or above `min_positive` are FL.
class ThresholdSpec {
 public:
  ThresholdSpec() = default;
  // FQ is rejected (the NF side would be empty).
  explicit ThresholdSpec(FlareClass min_positive);

  // Accepts ">=M" style tokens; throws std::invalid_argument otherwise.
  static ThresholdSpec parse(std::string_view text);
  std::string to_string() const;

  FlareClass min_positive_class() const noexcept { return min_positive_; }

  friend bool operator==(const ThresholdSpec&, const ThresholdSpec&) = default;

 private:
  FlareClass min_positive_ = FlareClass::M;
};

BinaryLabel binarize(FlareClass c, const ThresholdSpec& t) noexcept;

// Per-class penalty weights beta = 10^log_beta. log_beta is kept as an exact
// integer so that log10(beta) never goes through floating-point log.
class OrdinalWeights {
 public:
  OrdinalWeights(ThresholdSpec threshold, std::array<int, kNumClasses> log_beta);

  const ThresholdSpec& threshold() const noexcept { return threshold_; }
  int log_beta(FlareClass c) const noexcept { return log_beta_[static_cast<std::size_t>(c)]; }
  double beta(FlareClass c) const noexcept;
  const std::array<int, kNumClasses>& log_beta_table() const noexcept { return log_beta_; }

 private:
  ThresholdSpec threshold_;
  std::array<int, kNumClasses> log_beta_;
};

// Distance of a class from the split: 0 for the two classes adjacent to it,
// growing by one per ordinal step away.
int threshold_distance(FlareClass c, const ThresholdSpec& t) noexcept;

// log_beta(c) = Wmax - d(c), Wmax = max_c d(c) + 1. For >=M this yields the
// {10, 1e2, 1e3, 1e4, 1e4, 1e3} table. Other thresholds are an extrapolation
// of the same rule.
OrdinalWeights proximity_weights(const ThresholdSpec& t);

}  // namespace flarepp
