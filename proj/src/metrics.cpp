#include "flarepp/metrics.hpp"

#include <cmath>
#include <cstdio>

namespace flarepp {

namespace {

__extension__ typedef __int128 wide_int;

}  // namespace

ConfusionMatrix confusion_from_predictions(std::span<const BinaryLabel> targets,
                                           std::span<const double> scores, double cutoff) {
  if (targets.size() != scores.size()) {
    throw std::domain_error("targets and scores differ in length");
  }
  if (targets.empty()) throw std::domain_error("no predictions to tally");
  if (!(cutoff > 0.0 && cutoff < 1.0)) throw std::domain_error("cutoff must lie in (0,1)");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const bool predicted_fl = scores[i] >= cutoff;
    if (targets[i] == BinaryLabel::FL) {
      predicted_fl ? ++cm.tp : ++cm.fn;
    } else {
      predicted_fl ? ++cm.fp : ++cm.tn;
    }
  }
  return cm;
}

double tss(const ConfusionMatrix& cm) {
  if (cm.positives() == 0) throw UndefinedScoreError("TSS undefined: no positive (FL) instances");
  if (cm.negatives() == 0) throw UndefinedScoreError("TSS undefined: no negative (NF) instances");
  return static_cast<double>(cm.tp) / static_cast<double>(cm.positives()) -
         static_cast<double>(cm.fp) / static_cast<double>(cm.negatives());
}

double hss(const ConfusionMatrix& cm) {
  const wide_int tp = cm.tp, fp = cm.fp, tn = cm.tn, fn = cm.fn;
  const wide_int p = tp + fn;
  const wide_int n = tn + fp;
  const wide_int numerator = 2 * (tp * tn - fn * fp);
  const wide_int denominator = p * (fn + tn) + (tp + fp) * n;
  if (denominator == 0) throw UndefinedScoreError("HSS undefined: zero denominator");
  return static_cast<double>(static_cast<long double>(numerator) /
                             static_cast<long double>(denominator));
}

double css_from(double tss_value, double hss_value) noexcept {
  if (tss_value < 0.0 || hss_value < 0.0) return 0.0;
  return std::sqrt(tss_value * hss_value);
}

double css(const ConfusionMatrix& cm) { return css_from(tss(cm), hss(cm)); }

SkillScores skill_scores(const ConfusionMatrix& cm) {
  SkillScores s;
  s.tss = tss(cm);
  s.hss = hss(cm);
  s.css = css_from(s.tss, s.hss);
  return s;
}

bool ranks_before(const SkillScores& a, const SkillScores& b) noexcept {
  if (a.css != b.css) return a.css > b.css;
  if (a.tss != b.tss) return a.tss > b.tss;
  return a.hss > b.hss;
}

std::string format_report(const ConfusionMatrix& cm, const SkillScores& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "tp=%llu\nfp=%llu\ntn=%llu\nfn=%llu\ntss=%.4f\nhss=%.4f\ncss=%.4f\n",
                static_cast<unsigned long long>(cm.tp), static_cast<unsigned long long>(cm.fp),
                static_cast<unsigned long long>(cm.tn), static_cast<unsigned long long>(cm.fn),
                s.tss, s.hss, s.css);
  return buf;
}

}  // namespace flarepp
