#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <limits>
#include <stdexcept>
#include <vector>

#include "flarepp/loss.hpp"
#include "flarepp/rng.hpp"
#include "support/oracles.hpp"

using namespace flarepp;

namespace {

LossBatch single(double logit, FlareClass c, const ThresholdSpec& t = ThresholdSpec{}) {
  return LossBatch({logit}, {binarize(c, t)}, {c}, t);
}

LossConfig cfg_with_alpha(double alpha) {
  LossConfig cfg;
  cfg.alpha = alpha;
  return cfg;
}

constexpr double kLn2 = 0.69314718055994530942;

}  // namespace

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  // 1 - sigmoid(50) = sigmoid(-50) = 1.928749847963918e-22 (50-digit reference).
  CHECK(sigmoid(-50.0) == doctest::Approx(1.928749847963918e-22).epsilon(1e-14));
  CHECK(sigmoid(50.0) == 1.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == 0.0);
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double z = rng.uniform(-30.0, 30.0);
    CHECK(sigmoid(-z) == doctest::Approx(1.0 - sigmoid(z)).epsilon(1e-12));
  }
}

TEST_CASE("softplus stays finite and accurate at the tails") {
  CHECK(softplus(0.0) == doctest::Approx(kLn2).epsilon(1e-15));
  CHECK(softplus(-40.0) == doctest::Approx(4.248354255291589e-18).epsilon(1e-14));
  CHECK(softplus(1000.0) == 1000.0);
  CHECK(std::isfinite(softplus(-1000.0)));
}

TEST_CASE("bce spec values") {
  CHECK(bce(single(0.0, FlareClass::M)) == doctest::Approx(kLn2).epsilon(1e-15));
  CHECK(bce(single(40.0, FlareClass::M)) == doctest::Approx(4.248354255291589e-18).epsilon(1e-14));

  const LossBatch pair({0.0, 0.0}, {BinaryLabel::FL, BinaryLabel::NF}, {FlareClass::M, FlareClass::C},
                       ThresholdSpec{});
  CHECK(bce(pair) == doctest::Approx(kLn2).epsilon(1e-15));
}

TEST_CASE("bce matches the long double probability form") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double z = rng.uniform(-15.0, 15.0);
    const int y = static_cast<int>(rng.below(2));
    const double expected = static_cast<double>(oracle::bce_probability_form(z, y));
    CHECK(oracle::relative_error(bce_term(z, static_cast<BinaryLabel>(y)), expected) < 1e-12);
  }
}

TEST_CASE("bce_pp spec values") {
  CHECK(bce_pp(single(0.0, FlareClass::C), cfg_with_alpha(0.75)) ==
        doctest::Approx(2.0794415416798357).epsilon(1e-14));

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double z = rng.uniform(-20.0, 20.0);
    const auto m = single(z, FlareClass::M);
    const auto fq = single(z, FlareClass::FQ);
    CHECK(bce_pp(m, cfg_with_alpha(0.25)) == bce(m));
    CHECK(bce_pp(fq, cfg_with_alpha(1.0)) == bce(fq));
  }
}

TEST_CASE("batch validation") {
  const ThresholdSpec t;
  CHECK_THROWS_AS(LossBatch({}, {}, {}, t), std::domain_error);
  CHECK_THROWS_AS(LossBatch({0.0}, {BinaryLabel::FL, BinaryLabel::NF}, {FlareClass::M}, t),
                  std::domain_error);
  // C is NF under >=M; a FL target is inconsistent.
  CHECK_THROWS_AS(LossBatch({0.0}, {BinaryLabel::FL}, {FlareClass::C}, t), std::domain_error);
}

TEST_CASE("alpha policy") {
  CHECK_THROWS_AS(cfg_with_alpha(0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(cfg_with_alpha(-1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(cfg_with_alpha(std::numeric_limits<double>::infinity()).validate(), std::invalid_argument);
  CHECK_NOTHROW(cfg_with_alpha(2.0).validate());
  CHECK(cfg_with_alpha(2.0).alpha_warning().has_value());
  CHECK(cfg_with_alpha(0.1).alpha_warning().has_value());
  CHECK_FALSE(cfg_with_alpha(0.25).alpha_warning().has_value());
  CHECK_FALSE(cfg_with_alpha(1.0).alpha_warning().has_value());
}

TEST_CASE("reductions are consistent") {
  Rng rng(17);
  std::vector<double> z;
  std::vector<BinaryLabel> y;
  std::vector<FlareClass> c;
  for (int i = 0; i < 37; ++i) {
    const FlareClass k = class_from_index(static_cast<int>(rng.below(6)));
    z.push_back(rng.uniform(-6.0, 6.0));
    c.push_back(k);
    y.push_back(binarize(k, ThresholdSpec{}));
  }
  const LossBatch b(z, y, c, ThresholdSpec{});
  const LossConfig cfg;
  const auto terms = bce_pp_terms(b, cfg);
  double total = 0.0;
  for (double v : terms) total += v;
  CHECK(bce_pp(b, cfg, Reduction::sum) == doctest::Approx(total).epsilon(1e-14));
  CHECK(bce_pp(b, cfg, Reduction::mean) == doctest::Approx(total / 37.0).epsilon(1e-14));
  CHECK_THROWS_AS(bce_pp(b, cfg, Reduction::none), std::invalid_argument);
  CHECK(parse_reduction("mean") == Reduction::mean);
  CHECK_THROWS_AS(parse_reduction("median"), std::invalid_argument);

  SUBCASE("linear in alpha") {
    LossConfig half = cfg;
    half.alpha = cfg.alpha / 2.0;
    CHECK(bce_pp(b, half) == doctest::Approx(bce_pp(b, cfg) / 2.0).epsilon(1e-14));
  }
  SUBCASE("per-sample multiplier") {
    const auto base = bce_terms(b);
    for (std::size_t i = 0; i < terms.size(); ++i)
      CHECK(terms[i] == doctest::Approx(base[i] * cfg.alpha * cfg.weights.log_beta(c[i])).epsilon(1e-14));
  }
}

TEST_CASE("gradient spec values") {
  LossConfig cfg = cfg_with_alpha(0.5);
  CHECK(bce_pp_grad(single(0.0, FlareClass::X), cfg)[0] == doctest::Approx(-0.75).epsilon(1e-15));
  CHECK(bce_grad(single(0.0, FlareClass::C))[0] == 0.5);
  CHECK(std::abs(bce_grad(single(50.0, FlareClass::X))[0]) < 1e-20);

  const double fd = oracle::central_difference(
      [&](double z) { return bce_pp(single(z, FlareClass::X), cfg); }, 0.0, 1e-6);
  CHECK(fd == doctest::Approx(-0.75).epsilon(1e-8));
}

TEST_CASE("randomized finite-difference checks on bce_pp_grad") {
  Rng rng(2024);
  const double alphas[] = {0.25, 0.5, 0.75, 1.0};
  int failures = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const FlareClass k = class_from_index(static_cast<int>(rng.below(6)));
    const double z = rng.uniform(-10.0, 10.0);
    LossConfig cfg;
    cfg.alpha = alphas[rng.below(4)];
    const auto loss_at = [&](double zz) { return bce_pp(LossBatch({zz}, {binarize(k, ThresholdSpec{})}, {k}, ThresholdSpec{}), cfg); };
    const double g = bce_pp_grad(LossBatch({z}, {binarize(k, ThresholdSpec{})}, {k}, ThresholdSpec{}), cfg)[0];
    const double e = oracle::relative_error(g, oracle::central_difference(loss_at, z, 1e-5));
    worst = std::max(worst, e);
    if (e >= 1e-6) ++failures;
  }
  CAPTURE(worst);
  CHECK(failures == 0);
}

TEST_CASE("batch gradients divide by N") {
  const LossBatch b({0.0, 0.0, 0.0, 0.0}, {BinaryLabel::FL, BinaryLabel::NF, BinaryLabel::NF, BinaryLabel::FL},
                    {FlareClass::M, FlareClass::FQ, FlareClass::C, FlareClass::X}, ThresholdSpec{});
  LossConfig cfg;
  cfg.alpha = 1.0;
  const auto g = bce_pp_grad(b, cfg);
  CHECK(g[0] == doctest::Approx(4 * -0.5 / 4).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(1 * 0.5 / 4).epsilon(1e-15));
  CHECK(g[2] == doctest::Approx(4 * 0.5 / 4).epsilon(1e-15));
  CHECK(g[3] == doctest::Approx(3 * -0.5 / 4).epsilon(1e-15));
  const auto gb = bce_grad(b, Reduction::sum);
  CHECK(gb[0] == -0.5);
}

TEST_CASE("loss curves") {
  const std::vector<double> half{0.5};
  CHECK(loss_curve(FlareClass::M, BinaryLabel::FL, cfg_with_alpha(0.25), half)[0].loss_bce_pp ==
        doctest::Approx(kLn2).epsilon(1e-14));
  CHECK(loss_curve(FlareClass::FQ, BinaryLabel::NF, cfg_with_alpha(1.0), half)[0].loss_bce_pp ==
        doctest::Approx(kLn2).epsilon(1e-14));
  CHECK(loss_curve(FlareClass::C, BinaryLabel::NF, cfg_with_alpha(1.0), half)[0].loss_bce_pp ==
        doctest::Approx(4.0 * kLn2).epsilon(1e-14));

  const std::vector<double> bad{0.2, 1.0};
  CHECK_THROWS_AS(loss_curve(FlareClass::C, BinaryLabel::NF, LossConfig{}, bad), std::domain_error);

  const auto grid = probability_grid(1001);
  REQUIRE(grid.size() == 1001);
  CHECK(grid.front() > 0.0);
  CHECK(grid.back() < 1.0);
  for (auto [c, t, alpha] : {std::tuple{FlareClass::C, BinaryLabel::NF, 0.25},
                             std::tuple{FlareClass::M, BinaryLabel::FL, 0.25},
                             std::tuple{FlareClass::FQ, BinaryLabel::NF, 1.0}}) {
    for (const auto& pt : loss_curve(c, t, cfg_with_alpha(alpha), grid))
      CHECK(std::abs(pt.loss_bce_pp - pt.loss_bce) < 1e-12);
  }

  const auto csv = curve_to_csv(loss_curve(FlareClass::C, BinaryLabel::NF, LossConfig{}, probability_grid(3)));
  CHECK(csv.rfind("p,loss_bce,loss_bce_pp\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
