#include <cmath>

#include "doctest.h"
#include "ordmed/effects.hpp"
#include "support/random_models.hpp"

using namespace ordmed;

namespace {

const MediatorModel kMed1(-1.0, 0.5);
const OutcomeModel kOut1({2.5, 5.5}, 1.1, 0.7, 0.5);
const MediatorModel kMed2(-1.0, 0.5);
const OutcomeModel kOut2({0.5, 2.5, 4.5, 5.5}, 0.5, 1.3, 0.6);
const std::vector<double> kNoCov;
const EffectQuery kQuery{3.5, 2.0, {}};

// Direct mixture over m of the conditional cumulative probabilities, written
// out by hand in extended precision (no library probability calls).
double mixture_logit(int j, double x, double xstar, std::span<const double> c,
                     const MediatorModel& med, const OutcomeModel& out) {
  long double gc = 0.0L, bc = 0.0L;
  for (std::size_t k = 0; k < c.size(); ++k) {
    gc += static_cast<long double>(med.gammaC()[k]) * c[k];
    bc += static_cast<long double>(out.betaC()[k]) * c[k];
  }
  const long double lx = x, lxs = xstar;
  const long double pm1 = 1.0L / (1.0L + std::exp(-(med.gamma0() + med.gammaX() * lxs + gc)));
  long double below = 0.0L;
  for (int m = 0; m <= 1; ++m) {
    const long double eta = out.betaX() * lx + out.betaM() * m + out.betaXM() * lx * m + bc;
    const long double cum = 1.0L / (1.0L + std::exp(-(out.alpha()[j - 1] - eta)));
    below += cum * (m == 1 ? pm1 : 1.0L - pm1);
  }
  return static_cast<double>(std::log(below / (1.0L - below)));
}

}  // namespace

TEST_CASE("g functions at the J=3 reference parameters") {
  // Frozen from a 40-digit evaluation of the g-function formula.
  CHECK(g_observed(0, 1, 3.5, kNoCov, kMed1, kOut1) == doctest::Approx(0.9583843549089962).epsilon(1e-13));
  CHECK(g_observed(1, 1, 3.5, kNoCov, kMed1, kOut1) == doctest::Approx(-1.4916156450910038).epsilon(1e-13));
  CHECK(g_observed(1, 1, 3.5, kNoCov, kMed1, kOut1) ==
        doctest::Approx(g_observed(0, 1, 3.5, kNoCov, kMed1, kOut1) - 2.45).epsilon(1e-14));
  CHECK(g_cross(0, 1, 3.5, 2.0, kNoCov, kMed1, kOut1) == doctest::Approx(0.2083843549089962).epsilon(1e-13));
  CHECK(g_cross(1, 1, 3.5, 2.0, kNoCov, kMed1, kOut1) == doctest::Approx(-2.2416156450910038).epsilon(1e-13));

  const OutcomeModel no_mediator_path({2.5, 5.5}, 1.1, 0.0, 0.0);
  for (double x : {-2.0, 0.0, 3.5}) {
    for (int j : {1, 2}) {
      CHECK(g_observed(0, j, x, kNoCov, kMed1, no_mediator_path) ==
            g_observed(1, j, x, kNoCov, kMed1, no_mediator_path));
    }
  }
  CHECK_THROWS_AS(g_observed(2, 1, 3.5, kNoCov, kMed1, kOut1), ValidationError);
  CHECK_THROWS_AS(g_observed(0, 3, 3.5, kNoCov, kMed1, kOut1), ValidationError);
  const std::vector<double> c{1.0};
  CHECK_THROWS_AS(g_observed(0, 1, 3.5, c, kMed1, kOut1), ValidationError);
}

TEST_CASE("log RR correction and marginal cumulative logit") {
  CHECK(log_rr_correction(1, 3.5, kNoCov, kMed1, kOut1) == doctest::Approx(1.0800615024449250).epsilon(1e-13));
  CHECK(log_rr_correction(1, 2.0, kNoCov, kMed1, kOut1) == doctest::Approx(0.7636119725874798).epsilon(1e-13));
  CHECK(marginal_cumulative_logit(1, 2.0, kNoCov, kMed1, kOut1) ==
        doctest::Approx(-0.4636119725874798).epsilon(1e-13));

  const OutcomeModel no_mediator_path({2.5, 5.5}, 1.1, 0.0, 0.0);
  CHECK(log_rr_correction(2, 1.7, kNoCov, kMed1, no_mediator_path) == 0.0);
  CHECK(marginal_cumulative_logit(2, 1.7, kNoCov, kMed1, no_mediator_path) ==
        doctest::Approx(5.5 - 1.1 * 1.7).epsilon(1e-15));

  // Correction is positive iff betaM + betaXM x > 0.
  const OutcomeModel crossing({0.0, 1.0}, 0.3, 1.0, -0.5);
  CHECK(log_rr_correction(1, 1.0, kNoCov, kMed1, crossing) > 0.0);
  CHECK(log_rr_correction(1, 2.0, kNoCov, kMed1, crossing) == doctest::Approx(0.0));
  CHECK(log_rr_correction(1, 3.0, kNoCov, kMed1, crossing) < 0.0);
}

TEST_CASE("counterfactual logit collapses and agrees with the plug-in oracle") {
  CHECK(counterfactual_cumulative_logit(1, 3.5, 3.5, kNoCov, kMed1, kOut1) ==
        marginal_cumulative_logit(1, 3.5, kNoCov, kMed1, kOut1));
  CHECK(std::abs(counterfactual_cumulative_logit(1, 3.5, 2.0, kNoCov, kMed1, kOut1) -
                 plug_in_oracle(1, 3.5, 2.0, kNoCov, kMed1, kOut1)) <= 1e-12);

  const OutcomeModel no_mediator_path({2.5, 5.5}, 1.1, 0.0, 0.0);
  CHECK(counterfactual_cumulative_logit(2, 3.5, -10.0, kNoCov, kMed1, no_mediator_path) ==
        doctest::Approx(5.5 - 1.1 * 3.5).epsilon(1e-15));

  const OutcomeModel flat({0.8, 2.0}, 0.0, 0.0, 0.0);
  CHECK(plug_in_oracle(1, 1.0, 1.0, kNoCov, kMed1, flat) == doctest::Approx(0.8).epsilon(1e-14));

  // One threshold: the binary-outcome case, checked against a hand-written mixture.
  const OutcomeModel binary({2.5}, 1.1, 0.7, 0.5);
  const double by_hand = mixture_logit(1, 3.5, 2.0, kNoCov, kMed1, binary);
  CHECK(std::abs(plug_in_oracle(1, 3.5, 2.0, kNoCov, kMed1, binary) - by_hand) <= 1e-12);
  CHECK(std::abs(counterfactual_cumulative_logit(1, 3.5, 2.0, kNoCov, kMed1, binary) - by_hand) <= 1e-12);
}

TEST_CASE("J=3 reference effects") {
  const EffectTable t = effect_table(kQuery, kMed1, kOut1);
  REQUIRE(t.levels() == 3);
  // 40-digit direct summation values; the published table rounds them to 3 decimals.
  CHECK(t.logNDE[0] == doctest::Approx(1.588136556215348).epsilon(1e-12));
  CHECK(t.logNDE[1] == doctest::Approx(1.877576260880408).epsilon(1e-12));
  CHECK(t.logNIE[0] == doctest::Approx(0.3783129736420968).epsilon(1e-12));
  CHECK(t.logNIE[1] == doctest::Approx(0.3813217953888214).epsilon(1e-12));
  CHECK(t.logTCE[0] == doctest::Approx(1.966449529857445).epsilon(1e-12));
  CHECK(t.logTCE[1] == doctest::Approx(2.258898056269229).epsilon(1e-12));
  CHECK(t.logCDE[1] == doctest::Approx(2.40).epsilon(1e-14));
  CHECK(t.logCDE[0] == doctest::Approx(1.65).epsilon(1e-14));

  const double published[] = {1.588, 1.878, 0.378, 0.381, 1.966, 2.259};
  const double computed[] = {t.logNDE[0], t.logNDE[1], t.logNIE[0], t.logNIE[1], t.logTCE[0], t.logTCE[1]};
  for (int i = 0; i < 6; ++i) CHECK(std::abs(computed[i] - published[i]) <= 5e-4);
}

TEST_CASE("J=5 reference effects") {
  const EffectTable t = effect_table(kQuery, kMed2, kOut2);
  const double nde[] = {0.7200111079310696, 0.6946133636254591, 1.159796565145342, 1.388293553000238};
  const double nie[] = {0.4414809760782456, 0.5107654769108959, 0.4434682036734861, 0.3718317480578784};
  const double tce[] = {1.161492084009315, 1.205378840536355, 1.603264768818829, 1.760125301058117};
  for (int j = 0; j < 4; ++j) {
    CHECK(t.logNDE[j] == doctest::Approx(nde[j]).epsilon(1e-12));
    CHECK(t.logNIE[j] == doctest::Approx(nie[j]).epsilon(1e-12));
    CHECK(t.logTCE[j] == doctest::Approx(tce[j]).epsilon(1e-12));
  }
  CHECK(t.logCDE[1] == doctest::Approx(1.65).epsilon(1e-14));
  CHECK(t.logCDE[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(std::abs(log_nde(4, kQuery, kMed2, kOut2) - 1.388) <= 5e-4);
  CHECK(std::abs(log_nie(2, kQuery, kMed2, kOut2) - 0.511) <= 5e-4);
}

TEST_CASE("null contrasts") {
  const EffectQuery same{2.7, 2.7, {}};
  const EffectTable t = effect_table(same, kMed2, kOut2);
  for (int j = 0; j < 4; ++j) {
    CHECK(t.logNDE[j] == 0.0);
    CHECK(t.logNIE[j] == 0.0);
    CHECK(t.logTCE[j] == 0.0);
  }
  CHECK(t.logCDE[0] == 0.0);
  CHECK(t.logCDE[1] == 0.0);

  const MediatorModel exposure_free(-0.4, 0.0);
  for (int j = 1; j <= 4; ++j) CHECK(log_nie(j, kQuery, exposure_free, kOut2) == doctest::Approx(0.0));
}

TEST_CASE("randomized identities") {
  ordmed::SplitMix64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const int J = 2 + static_cast<int>(rng.below(5));
    const std::size_t p = rng.below(3);
    const auto med = testsupport::random_mediator(rng, p);
    const auto out = testsupport::random_outcome(rng, J, p);
    EffectQuery q{testsupport::draw(rng, -2, 4), testsupport::draw(rng, -2, 4),
                  testsupport::random_covariates(rng, p)};
    const int j = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(J - 1)));

    CHECK(std::abs(counterfactual_cumulative_logit(j, q.x, q.xstar, q.c, med, out) -
                   plug_in_oracle(j, q.x, q.xstar, q.c, med, out)) <= 1e-12);
    CHECK(std::abs(marginal_cumulative_logit(j, q.x, q.c, med, out) -
                   mixture_logit(j, q.x, q.x, q.c, med, out)) <= 1e-12);
    for (int d = 0; d <= 1; ++d) {
      CHECK(g_cross(d, j, q.x, q.x, q.c, med, out) == g_observed(d, j, q.x, q.c, med, out));
    }

    const EffectTable t = effect_table(q, med, out);
    const double cf_x_xs = counterfactual_cumulative_logit(j, q.x, q.xstar, q.c, med, out);
    const double cf_xs_xs = counterfactual_cumulative_logit(j, q.xstar, q.xstar, q.c, med, out);
    const double cf_x_x = counterfactual_cumulative_logit(j, q.x, q.x, q.c, med, out);
    for (int l = 0; l < J - 1; ++l) CHECK(std::abs(t.logTCE[l] - t.logNDE[l] - t.logNIE[l]) <= 1e-10);
    CHECK(std::abs(t.logNDE[j - 1] + (cf_x_xs - cf_xs_xs)) <= 1e-10);
    CHECK(std::abs(t.logNIE[j - 1] + (cf_x_x - cf_x_xs)) <= 1e-10);

    // Dead mediator path: all of the effect is direct.
    const OutcomeModel direct_only(out.alpha(), out.betaX(), 0.0, 0.0, out.betaC());
    CHECK(std::abs(log_nie(j, q, med, direct_only)) <= 1e-12);
    CHECK(std::abs(log_nde(j, q, med, direct_only) - out.betaX() * (q.x - q.xstar)) <= 1e-12);
    CHECK(std::abs(log_tce(j, q, med, direct_only) - out.betaX() * (q.x - q.xstar)) <= 1e-12);
  }
}

TEST_CASE("effect_table validates its query") {
  EffectQuery bad{std::nan(""), 2.0, {}};
  CHECK_THROWS_AS(effect_table(bad, kMed1, kOut1), ValidationError);
  EffectQuery wrong_dim{3.5, 2.0, {1.0}};
  CHECK_THROWS_AS(effect_table(wrong_dim, kMed1, kOut1), ValidationError);
  CHECK_THROWS_AS(log_cde(2, kQuery, kOut1), ValidationError);
}

TEST_CASE("extreme predictors stay finite") {
  const OutcomeModel steep({-400.0, 400.0}, 30.0, 200.0, 5.0);
  const MediatorModel med(-1.0, 40.0);
  const EffectTable t = effect_table(EffectQuery{25.0, -25.0, {}}, med, steep);
  for (double v : t.logTCE) CHECK(std::isfinite(v));
  for (double v : t.logNDE) CHECK(std::isfinite(v));
  for (double v : t.logNIE) CHECK(std::isfinite(v));
}
