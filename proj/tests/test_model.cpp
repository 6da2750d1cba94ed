// tests for parameter sets, kernels, energy scales, and regime classification
#include <cmath>
#include <random>

#include "doctest.h"
#include "fewmode/model.hpp"

using namespace fewmode;

namespace {

EnvironmentSpec single_mode(double omega, double c, double beta = 1.0, double m = 1.0) {
  EnvironmentSpec env;
  env.m = m;
  env.beta = beta;
  env.omegas = {omega};
  env.couplings = {c};
  return env;
}

const std::vector<double> kFig1Band = {0.48, 0.86, 1.72, 1.84, 1.89};

}  // namespace

TEST_CASE("validation rejects malformed parameter sets") {
  SystemParams sys;
  sys.M = -1.0;
  CHECK_THROWS_AS(sys.validate(), std::invalid_argument);

  EnvironmentSpec env = single_mode(1.0, 1.0);
  env.m = 0.0;
  CHECK_THROWS_AS(env.validate(), std::invalid_argument);

  env = single_mode(1.0, 1.0);
  env.omegas = {1.0, 1.0};  // duplicate frequency
  env.couplings = {1.0, 1.0};
  CHECK_THROWS_AS(env.validate(), std::invalid_argument);

  env = single_mode(1.0, 1.0);
  env.couplings = {1.0, 2.0};  // length mismatch
  CHECK_THROWS_AS(env.validate(), std::invalid_argument);
}

TEST_CASE("spectral strength: single-term and decoupled limits") {
  CHECK(spectral_strength(single_mode(1.0, 1.0)) == doctest::Approx(1.0));
  CHECK(spectral_strength(single_mode(1.7, 0.0)) == 0.0);

  // additivity over disjoint mode sets
  EnvironmentSpec a = single_mode(0.7, 0.3);
  EnvironmentSpec b = single_mode(1.9, 1.1);
  EnvironmentSpec both;
  both.omegas = {0.7, 1.9};
  both.couplings = {0.3, 1.1};
  CHECK(spectral_strength(both) ==
        doctest::Approx(spectral_strength(a) + spectral_strength(b)).epsilon(1e-14));
}

TEST_CASE("strength-balance frequency band sits within 1% of the trap scale") {
  SystemParams sys{1.0, 1.0, 1.0};
  const EnvironmentSpec env = drude_environment(sys, 1.0, 1.0, kFig1Band, 0.39, 500.0);
  const double ratio = spectral_strength(env) / bounding_strength(sys);
  CHECK(std::abs(ratio - 1.0) < 0.01);
}

TEST_CASE("regime classification") {
  SystemParams sys{1.0, 1.0, 1.0};
  CHECK(classify_regime(sys, single_mode(1.0, 0.0)).label == Regime::Bounded);
  CHECK(classify_regime(sys, single_mode(1.0, 1.0)).label == Regime::Critical);
  CHECK(classify_regime(sys, single_mode(1.0, 2.0)).label == Regime::Unstable);
  CHECK(classify_regime(sys, single_mode(1.0, 2.0)).ratio == doctest::Approx(4.0));

  // increasing any |C_k| never moves the label toward Bounded
  std::mt19937 rng(20411);
  std::uniform_real_distribution<double> uw(0.3, 2.5), uc(0.0, 1.5);
  for (int trial = 0; trial < 50; ++trial) {
    EnvironmentSpec env = single_mode(uw(rng), uc(rng));
    const Regime before = classify_regime(sys, env).label;
    env.couplings[0] *= 1.5;
    const Regime after = classify_regime(sys, env).label;
    if (before == Regime::Unstable) CHECK(after == Regime::Unstable);
    if (after == Regime::Bounded) CHECK(before == Regime::Bounded);
  }
}

TEST_CASE("dissipation kernel: oddness and the single-mode value") {
  const EnvironmentSpec env = single_mode(1.0, 1.0);
  CHECK(kernel_KI(env, 0.0) == 0.0);
  CHECK(kernel_KI(env, M_PI / 2.0) == doctest::Approx(-0.5).epsilon(1e-14));

  std::mt19937 rng(3317);
  std::uniform_real_distribution<double> ut(-8.0, 8.0);
  EnvironmentSpec multi;
  multi.omegas = {0.6, 1.4, 2.3};
  multi.couplings = {0.4, 0.8, 0.2};
  for (int i = 0; i < 40; ++i) {
    const double dt = ut(rng);
    CHECK(kernel_KI(multi, -dt) == doctest::Approx(-kernel_KI(multi, dt)).epsilon(1e-13));
  }
}

TEST_CASE("fluctuation kernel: evenness, cold limit, and thermal value") {
  EnvironmentSpec env = single_mode(1.0, 1.0, /*beta=*/1e9);
  CHECK(kernel_KR(env, 0.0) == doctest::Approx(0.5).epsilon(1e-12));

  env.beta = 2.0;
  // (1/2)·coth(1)
  CHECK(kernel_KR(env, 0.0) == doctest::Approx(0.65651764274966554).epsilon(1e-14));

  std::mt19937 rng(9151);
  std::uniform_real_distribution<double> ut(-8.0, 8.0);
  EnvironmentSpec multi;
  multi.beta = 0.7;
  multi.omegas = {0.6, 1.4, 2.3};
  multi.couplings = {0.4, 0.8, 0.2};
  for (int i = 0; i < 40; ++i) {
    const double dt = ut(rng);
    CHECK(kernel_KR(multi, -dt) == doctest::Approx(kernel_KR(multi, dt)).epsilon(1e-13));
  }

  // hot limit must stay finite and follow coth ~ 2/(βħω)
  env.beta = 1e-8;
  CHECK(std::isfinite(kernel_KR(env, 0.0)));
  CHECK(kernel_KR(env, 0.0) == doctest::Approx(1e8).epsilon(1e-4));
}

TEST_CASE("stable coth") {
  CHECK(coth(25.0) == 1.0);
  CHECK(coth(-25.0) == -1.0);
  CHECK(coth(1e-12) == doctest::Approx(1e12).epsilon(1e-6));
  CHECK(coth(-1e-12) == doctest::Approx(-1e12).epsilon(1e-6));
  CHECK(coth(0.5) == doctest::Approx(1.0 / std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("Drude-weighted couplings") {
  SystemParams sys{1.0, 1.0, 1.0};
  CHECK(coupling_from_drude(0.39, 500.0, sys, 1.0) == doctest::Approx(0.39).epsilon(1e-15));
  CHECK(coupling_from_drude(0.0, 500.0, sys, 2.3) == 0.0);
  const double c = coupling_from_drude(0.39, 500.0, sys, 0.48);
  CHECK(c < 0.39);
  CHECK(c == doctest::Approx(0.3899998).epsilon(1e-6));
  CHECK_THROWS_AS(coupling_from_drude(0.39, 0.0, sys, 1.0), std::invalid_argument);
}
