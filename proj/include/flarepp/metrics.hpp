#pragma once
// Confusion matrix and forecast skill scores (TSS, HSS, CSS). FL is positive.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "flarepp/flare_class.hpp"

namespace flarepp {

// Raised when a score is undefined for the given counts (e.g. no positives).
class UndefinedScoreError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t positives() const noexcept { return tp + fn; }
  std::uint64_t negatives() const noexcept { return tn + fp; }
  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) noexcept {
    return a += b;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct SkillScores {
  double tss = 0.0;
  double hss = 0.0;
  double css = 0.0;
};

// prediction = FL iff score >= cutoff.
ConfusionMatrix confusion_from_predictions(std::span<const BinaryLabel> targets,
                                           std::span<const double> scores, double cutoff = 0.5);

double tss(const ConfusionMatrix& cm);
// Numerator and denominator are formed in 128-bit integers, then divided once.
double hss(const ConfusionMatrix& cm);
double css(const ConfusionMatrix& cm);
double css_from(double tss_value, double hss_value) noexcept;
SkillScores skill_scores(const ConfusionMatrix& cm);

// Model-selection order: higher CSS, then higher TSS, then higher HSS.
bool ranks_before(const SkillScores& a, const SkillScores& b) noexcept;

// Flat "key=value" lines: tp, fp, tn, fn, tss, hss, css (scores to 4 decimals).
std::string format_report(const ConfusionMatrix& cm, const SkillScores& s);

}  // namespace flarepp
