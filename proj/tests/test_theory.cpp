#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "mbde/booster.hpp"
#include "mbde/rng.hpp"
#include "mbde/theory.hpp"

using namespace mbde;

namespace {

TargetDensity single_gaussian(double mean, double var) {
  TargetDensity t;
  t.dim = 1;
  t.components = {{1.0, {mean}, {var}}};
  return t;
}

BoostConfig small_config(double eps, int T, std::uint64_t seed) {
  BoostConfig cfg;
  cfg.eps = eps;
  cfg.T = T;
  cfg.n_train = 500;
  cfg.n_mc_phi = 20000;
  cfg.seed = seed;
  cfg.train.epochs = 80;
  cfg.mcmc.burn_in = 300;
  cfg.mcmc.thinning = 5;
  cfg.mcmc.n_chains = 2;
  return cfg;
}

}  // namespace

TEST_CASE("gamma function") {
  CHECK(gamma_fn(1.0 / 3.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(gamma_fn(1.0) == doctest::Approx(kLog2).epsilon(1e-15));
  // On the high-regime interval [1/3, 1] the chord term is nonnegative,
  // increasing and bounded by z log 2 (equality only at z = 1). Note the
  // bound direction: log(4/(5-3z)) is convex with Gamma(1/3) = 0, so it sits
  // below the line z log 2 everywhere except the right endpoint.
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double z = (1.0 + 2.0 * static_cast<double>(i) / 1000.0) / 3.0;
    const double g = gamma_fn(z);
    CHECK(g >= -1e-15);
    CHECK(g <= z * kLog2 + 1e-15);
    CHECK(g >= prev);
    prev = g;
  }
  CHECK(gamma_fn(0.1) < 0.0);  // below 1/3 the term goes negative
  CHECK_THROWS_AS(gamma_fn(5.0 / 3.0), std::domain_error);
  CHECK_THROWS_AS(gamma_fn(1.7), std::domain_error);
}

TEST_CASE("per-round drop bound") {
  SUBCASE("high regime substitution") {
    WlaReport w{1.0, 1.0, kLog2, Regime::high};
    const auto d = kl_drop_bound(w, 0.5);
    CHECK(d.lambda_t == doctest::Approx(2.0 * kLog2).epsilon(1e-15));
  }

  SUBCASE("low regime substitution") {
    WlaReport w{0.1, 0.1, kLog2, Regime::low};
    const auto d = kl_drop_bound(w, 0.1);
    CHECK(d.lambda_t == doctest::Approx(0.2 - kLog2 * 0.05).epsilon(1e-12));
    CHECK(d.lambda_guaranteed == doctest::Approx(kLog2 * d.lambda_t).epsilon(1e-12));
  }

  SUBCASE("high regime factors coincide") {
    WlaReport w{0.5, 0.6, 0.6, Regime::high};
    const auto d = kl_drop_bound(w, 0.3);
    CHECK(d.lambda_guaranteed == d.lambda_t);
  }

  SUBCASE("the 1/3 boundary belongs to the high regime") {
    Dataset p, q;
    p.dim = q.dim = 1;
    // gamma_q exactly 1/3 is classified high by wla_advantages.
    WlaReport w{0.5, 1.0 / 3.0, 0.5, Regime::high};
    const auto d = kl_drop_bound(w, 0.2);
    CHECK(d.regime == Regime::high);
    CHECK(d.lambda_t == doctest::Approx(0.5 * 0.5 + gamma_fn(1.0 / 3.0)));
  }

  SUBCASE("failed regime has no guarantee") {
    WlaReport w{-0.2, 0.4, 0.5, Regime::failed};
    CHECK_THROWS_AS(kl_drop_bound(w, 0.1), std::runtime_error);
  }
}

TEST_CASE("barrier bounds") {
  SUBCASE("upper bound is always eps/2") {
    CHECK(barrier_bounds(3.0, 0.5, 0.5, 4).upper == 1.5);
  }

  SUBCASE("direct evaluation at eps=1, gamma=1, T=3") {
    const auto b = barrier_bounds(1.0, 1.0, 1.0, 3);
    const double r = 1.0 / (1.0 + 4.0 * kLog2);
    CHECK(b.lower == doctest::Approx(0.5 * (1.0 - r * r * r)).epsilon(1e-12));
  }

  SUBCASE("perfect advantages reach the information-theoretic limit") {
    const auto b = barrier_bounds(2.0, 1.0, 1.0, 500);
    CHECK(b.lower == doctest::Approx(b.upper).epsilon(1e-9));
  }

  SUBCASE("lower never exceeds upper on a grid") {
    for (double eps : {0.1, 0.5, 1.0, 5.0, 20.0})
      for (double g = 0.0; g <= 1.0; g += 0.1)
        for (int t : {1, 2, 3, 10, 100}) {
          const auto b = barrier_bounds(eps, g, g, t);
          CHECK(b.lower <= b.upper + 1e-15);
        }
  }
}

TEST_CASE("barrier check on a boosted model") {
  const auto target = make_1d_mixture();
  const auto model = boost(target, small_config(1.0, 2, 61));
  const auto r = barrier_check(target, model, 20000, 63);
  CHECK(r.upper == 0.5);
  CHECK(r.pass);
  CHECK(r.delta_observed <= r.upper + 3.0 * r.std_err);
  CHECK(r.delta_observed > 0.0);  // boosting moved the model toward the target
  CHECK(r.std_err > 0.0);
}

TEST_CASE("mode capture threshold") {
  SUBCASE("closed form at T=1, alpha=0, perfect advantages") {
    for (double eps : {0.1, 1.0, 5.0})
      CHECK(mode_capture_threshold(eps, 1.0, 1.0, 1, 0.0) ==
            doctest::Approx(eps / (eps + 2.0)).epsilon(1e-12));
  }

  SUBCASE("perfect advantages let the requirement vanish with T") {
    double prev = 1.0;
    for (int t : {1, 2, 4, 8, 64, 512}) {
      const double m = mode_capture_threshold(1.0, 1.0, 1.0, t, 0.5);
      CHECK(m < prev);
      prev = m;
    }
    CHECK(prev < 1e-3);
  }

  SUBCASE("monotone in alpha everywhere, in T once gbar > 1/2") {
    // d/dT of the requirement has the sign of 1 - 2*gbar, so the sweep over T
    // only decreases for average advantages above one half.
    for (double eps : {0.5, 2.0, 5.0})
      for (double g : {0.4, 0.7, 1.0}) {
        for (double a = 0.25; a <= 1.0; a += 0.25)
          CHECK(mode_capture_threshold(eps, g, g, 3, a) <=
                mode_capture_threshold(eps, g, g, 3, a - 0.25) + 1e-12);
        if (g > 0.5) {
          for (int t = 2; t <= 6; ++t)
            CHECK(mode_capture_threshold(eps, g, g, t, 0.5) <=
                  mode_capture_threshold(eps, g, g, t - 1, 0.5) + 1e-12);
        }
      }
  }

  SUBCASE("T = 0 is guarded") {
    CHECK_THROWS_AS(mode_capture_threshold(1.0, 1.0, 1.0, 0, 0.0), std::invalid_argument);
  }

  SUBCASE("main form dominates the relaxed derivation form") {
    for (double eps : {0.1, 1.0, 5.0})
      for (double g : {0.2, 0.6, 1.0})
        for (int t : {1, 2, 3, 10})
          for (double a : {0.0, 0.5, 1.0})
            CHECK(mode_capture_threshold(eps, g, g, t, a) >=
                  mode_capture_threshold_relaxed(eps, g, g, t, a) - 1e-12);
  }
}

TEST_CASE("bound calculators match direct transcription") {
  RngStream rng(123);
  for (int i = 0; i < 1000; ++i) {
    const double gp = 0.01 + 0.99 * rng.uniform();
    const double gq = 0.01 + 0.99 * rng.uniform();
    const double cs = 1e-3 + (kLog2 - 1e-3) * rng.uniform();
    const double theta = rng.uniform();
    const double eps = 0.05 + 5.0 * rng.uniform();
    const int T = 1 + static_cast<int>(rng.uniform() * 9.0);
    const double alpha = rng.uniform();

    WlaReport w{gp, gq, cs, gq >= 1.0 / 3.0 ? Regime::high : Regime::low};
    const double lambda = kl_drop_bound(w, theta).lambda_t;
    const double lambda_direct = gq >= 1.0 / 3.0
                                     ? cs * gp + std::log(4.0 / (5.0 - 3.0 * gq))
                                     : gp + gq - cs * theta / 2.0;
    CHECK(lambda == doctest::Approx(lambda_direct).epsilon(1e-12));

    const auto b = barrier_bounds(eps, gp, gq, T);
    const double lower_direct =
        (eps / 2.0) * ((gp + gq) / 2.0) * (1.0 - std::pow(eps / (eps + 4.0 * kLog2), T));
    CHECK(b.lower == doctest::Approx(lower_direct).epsilon(1e-12));

    const double req = mode_capture_threshold(eps, gp, gq, T, alpha);
    const double req_direct = eps * (eps + 2.0 * (2.0 - gp - gq) * T) /
                              ((eps + 2.0 * alpha) * (eps + 2.0 * T));
    CHECK(req == doctest::Approx(req_direct).epsilon(1e-12));
  }
}

TEST_CASE("mode capture check end to end") {
  // Separable 1D target so the single round lands in the high regime with a
  // large measured advantage.
  const auto target = single_gaussian(3.0, 0.25);
  const auto model = boost(target, small_config(5.0, 1, 3));
  REQUIRE(model.wla_history.size() == 1);
  REQUIRE(model.wla_history[0].regime == Regime::high);

  McmcConfig mc;
  mc.proposal_sigma = 1.5;
  mc.burn_in = 500;
  mc.thinning = 5;

  SUBCASE("full-support region with alpha = 1 is trivially captured") {
    const auto r = mode_capture_check(target, model, Region{{-20.0}, {20.0}}, 1.0,
                                      20000, 5, mc);
    CHECK(r.applicable);  // mass 1 exceeds any requirement
    CHECK(r.mass_p.value > 0.999);
    CHECK(r.pass);
  }

  SUBCASE("negligible-mass region is not applicable") {
    const auto r = mode_capture_check(target, model, Region{{40.0}, {41.0}}, 0.5,
                                      5000, 7, mc);
    CHECK_FALSE(r.applicable);
    CHECK(r.pass);  // no assertion is made
  }
}

TEST_CASE("equal-weight ring boxes cannot meet the eps=5 premise") {
  // With 8 equal modes each box holds 1/8 of the mass, but the requirement at
  // eps=5, alpha=0.5, T=3 is at least eps^2/((eps+1)(eps+6)) ~ 0.379 even for
  // perfect advantages. The premise is therefore structurally unreachable.
  const double best_case = mode_capture_threshold(5.0, 1.0, 1.0, 3, 0.5);
  CHECK(best_case > 0.125);
  CHECK(best_case == doctest::Approx(5.0 * 5.0 / (6.0 * 11.0)).epsilon(1e-12));
}

TEST_CASE("KL transfer between same-eps models") {
  const auto target = make_1d_mixture();

  SUBCASE("a model against itself") {
    const auto q = boost(target, small_config(0.5, 1, 11));
    const auto r = kl_transfer_check(target, q, q, 5000, 13);
    CHECK(r.diff == 0.0);
    CHECK(r.pass);
  }

  SUBCASE("mismatched eps is rejected") {
    const auto qa = boost(target, small_config(0.5, 1, 15));
    const auto qb = boost(target, small_config(1.0, 1, 15));
    CHECK_THROWS_AS(kl_transfer_check(target, qa, qb, 1000, 1), std::invalid_argument);
  }

  SUBCASE("different seeds, same mollifier") {
    const auto qa = boost(target, small_config(0.5, 2, 17));
    const auto qb = boost(target, small_config(0.5, 2, 19));
    const auto r = kl_transfer_check(target, qa, qb, 20000, 21);
    CHECK(r.pass);
  }

  SUBCASE("cross-target models still transfer") {
    const auto qa = boost(target, small_config(0.5, 1, 23));
    const auto qb = boost(make_random_gaussians(4, 9), small_config(0.5, 1, 25));
    const auto r = kl_transfer_check(target, qa, qb, 20000, 27);
    CHECK(r.pass);
  }
}
