// tests for the fundamental solution: modal synthesis, propagator basis,
// Markovian approximation, and the substitution residual
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fewmode/zsol.hpp"

using namespace fewmode;

namespace {

SystemParams trap(double Omega = 1.0) { return SystemParams{1.0, Omega, 1.0}; }

EnvironmentSpec env_of(std::vector<double> omegas, std::vector<double> couplings) {
  EnvironmentSpec env;
  env.omegas = std::move(omegas);
  env.couplings = std::move(couplings);
  return env;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / (n - 1);
  return g;
}

}  // namespace

TEST_CASE("initial conditions hold in every regime") {
  for (const auto& env : {env_of({2.0}, {1.0}), env_of({1.0}, {1.0}), env_of({1.0}, {2.0})}) {
    const auto md = modal_decompose(trap(), env);
    const ZEval e = z_exact(md, 0.0);
    CHECK(e.z == doctest::Approx(0.0));
    CHECK(e.zdot == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(e.zddot == doctest::Approx(0.0));
  }
}

TEST_CASE("decoupled limit reduces to the bare trap solution") {
  const double Om = 1.7;
  const auto md = modal_decompose(trap(Om), env_of({2.9}, {0.0}));
  for (double tau : linspace(0.0, 12.0, 49)) {
    const ZEval e = z_exact(md, tau);
    CHECK(e.z == doctest::Approx(std::sin(Om * tau) / Om).epsilon(1e-12));
    CHECK(e.zdot == doctest::Approx(std::cos(Om * tau)).epsilon(1e-12));
    CHECK(e.zddot == doctest::Approx(-Om * std::sin(Om * tau)).epsilon(1e-12));
  }
}

TEST_CASE("critical single mode has the closed form tau/2 + sin(sqrt2 tau)/(2 sqrt2)") {
  const auto md = modal_decompose(trap(), env_of({1.0}, {1.0}));
  const double r2 = std::sqrt(2.0);
  for (double tau : {0.3, 1.1, 2.7, 5.9, 14.2}) {
    CHECK(z_exact(md, tau).z ==
          doctest::Approx(tau / 2.0 + std::sin(r2 * tau) / (2.0 * r2)).epsilon(1e-12));
  }
  // the sine component completes a full period at tau = 2 pi / sqrt(2)
  const double tper = 2.0 * M_PI / r2;
  CHECK(z_exact(md, tper).z == doctest::Approx(M_PI / r2).epsilon(1e-12));
}

TEST_CASE("unstable growth rate: sinh dominance at large tau") {
  const auto md = modal_decompose(trap(), env_of({1.0}, {2.0}));
  REQUIRE(md.mu0 == doctest::Approx(1.0).epsilon(1e-10));

  // log Z(tau)/tau approaches mu0 with a log(amp/2)/tau offset; at tau = 40
  // the offset log(1/4)/40 still dominates, giving 1 - 0.0346573...; the
  // tolerance band reflects the root-finder precision entering through mu0
  const double g40 = std::log(z_exact(md, 40.0).z) / 40.0;
  CHECK(g40 == doctest::Approx(1.0 - std::log(4.0) / 40.0).epsilon(5e-12));

  // the offset shrinks like 1/tau ...
  double prev = 1e300;
  for (double tau : {10.0, 20.0, 40.0}) {
    const double dev = std::abs(std::log(z_exact(md, tau).z) / tau - md.mu0);
    CHECK(dev < prev);
    prev = dev;
  }
  // ... while the logarithmic derivative converges exponentially fast
  const ZEval e = z_exact(md, 40.0);
  CHECK(e.zdot / e.z == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("third derivative at the origin equals -Omega^2") {
  for (const auto& env : {env_of({2.0}, {1.0}), env_of({1.0}, {2.0})}) {
    const auto md = modal_decompose(trap(), env);
    const double h = 1e-4;
    CHECK(z_exact(md, h).zddot / h == doctest::Approx(-1.0).epsilon(1e-6));
  }
}

TEST_CASE("propagator basis: boundary values and finite-difference slopes") {
  const auto md = modal_decompose(trap(), env_of({2.0}, {1.0}));
  const double t = 2.3;
  const PropagatorBasis pb = propagator_basis(md, t);

  CHECK(u1(md, t, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(u1(md, t, t)) < 1e-12);
  CHECK(u2(md, t, 0.0) == doctest::Approx(0.0));
  CHECK(u2(md, t, t) == doctest::Approx(1.0).epsilon(1e-13));

  const double h = 1e-6;
  CHECK((u1(md, t, h) - u1(md, t, 0.0)) / h == doctest::Approx(pb.udot1_0).epsilon(1e-5));
  CHECK((u1(md, t, t) - u1(md, t, t - h)) / h == doctest::Approx(pb.udot1_t).epsilon(1e-5));
  CHECK((u2(md, t, h) - u2(md, t, 0.0)) / h == doctest::Approx(pb.udot2_0).epsilon(1e-5));
  CHECK((u2(md, t, t) - u2(md, t, t - h)) / h == doctest::Approx(pb.udot2_t).epsilon(1e-5));

  // time-reflected pair
  for (double tau : {0.2, 0.9, 1.7}) {
    CHECK(v1(md, t, tau) == doctest::Approx(u2(md, t, t - tau)));
    CHECK(v2(md, t, tau) == doctest::Approx(u1(md, t, t - tau)));
  }
}

TEST_CASE("focusing caustic is rejected honestly") {
  const auto md = modal_decompose(trap(1.0), env_of({3.0}, {0.0}));
  CHECK(caustic_at(md, M_PI));
  CHECK_THROWS_AS(propagator_basis(md, M_PI), CausticAtHorizon);
  CHECK_FALSE(caustic_at(md, 0.5 * M_PI));
  CHECK_NOTHROW(propagator_basis(md, 0.5 * M_PI));
}

TEST_CASE("critical propagator stays regular away from caustics") {
  const auto md = modal_decompose(trap(), env_of({1.0}, {1.0}));
  const PropagatorBasis pb = propagator_basis(md, 5.0);
  CHECK(std::isfinite(pb.udot1_0));
  CHECK(std::isfinite(pb.udot1_t));
  CHECK(std::isfinite(pb.udot2_0));
  CHECK(std::isfinite(pb.udot2_t));
  CHECK(u1(md, 5.0, 0.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(u1(md, 5.0, 5.0)) < 1e-12);
}

TEST_CASE("Markovian solver: decoupled limit reproduces the bare oscillation") {
  const auto grid = linspace(0.0, 10.0, 97);
  const auto zs = z_markovian(trap(), env_of({2.0}, {0.0}), grid);
  REQUIRE(zs.size() == grid.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    worst = std::max(worst, std::abs(zs[i].z - std::sin(grid[i])));
    worst = std::max(worst, std::abs(zs[i].zdot - std::cos(grid[i])));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("memory-collapsed frequency shift averages to the spectral strength") {
  const auto env = env_of({1.3}, {0.7});
  const double S = spectral_strength(env);
  double mean = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) mean += markov_kappa(env, 400.0 * i / (n - 1.0));
  mean = mean * 2.0 / n;  // (2/M)·kappa with M = 1
  CHECK(mean == doctest::Approx(-S).epsilon(0.01));
}

TEST_CASE("integration substeps that cannot resolve the fastest mode are rejected") {
  const auto grid = linspace(0.0, 10.0, 201);
  MarkovianOptions coarse;
  coarse.substep_scale = 0.5;  // h·nu_max ≈ 0.33 against the 0.2 limit
  CHECK_THROWS_AS(z_markovian(trap(), env_of({1.0}, {2.0}), grid, coarse), StepTooCoarse);
  CHECK_NOTHROW(z_markovian(trap(), env_of({1.0}, {2.0}), grid));
}

TEST_CASE("substitution residual: fixed instances") {
  const auto taus20 = linspace(0.0, 20.0, 100);
  SUBCASE("decoupled") {
    const auto md = modal_decompose(trap(1.7), env_of({2.9}, {0.0}));
    CHECK(residual_check(md, trap(1.7), env_of({2.9}, {0.0}), taus20) < 1e-13);
  }
  SUBCASE("bounded") {
    const auto env = env_of({2.0}, {1.0});
    const auto md = modal_decompose(trap(), env);
    CHECK(residual_check(md, trap(), env, taus20) < 1e-9);
  }
  SUBCASE("critical") {
    const auto env = env_of({1.0}, {1.0});
    const auto md = modal_decompose(trap(), env);
    CHECK(residual_check(md, trap(), env, taus20) < 1e-9);
  }
  SUBCASE("unstable: residual relative to the curvature scale") {
    const auto env = env_of({1.0}, {2.0});
    const auto md = modal_decompose(trap(), env);
    const auto taus = linspace(0.0, 10.0, 100);
    double zdd_max = 0.0;
    for (double tau : taus) zdd_max = std::max(zdd_max, std::abs(z_exact(md, tau).zddot));
    CHECK(residual_check(md, trap(), env, taus) < 1e-8 * zdd_max);
  }
}

TEST_CASE("substitution residual: randomized instances across regimes") {
  std::mt19937 rng(50923);
  std::uniform_real_distribution<double> upar(0.5, 2.0), uw(0.3, 3.0), uc(0.1, 1.0);
  std::uniform_int_distribution<int> un(1, 8);

  for (int trial = 0; trial < 24; ++trial) {
    SystemParams sys{upar(rng), upar(rng), 1.0};
    EnvironmentSpec env;
    env.m = upar(rng);
    const int n = un(rng);
    std::vector<double> ws;
    for (int k = 0; k < n; ++k) ws.push_back(uw(rng));
    std::sort(ws.begin(), ws.end());
    for (int k = 1; k < n; ++k)
      if (ws[k] - ws[k - 1] < 0.05) ws[k] = ws[k - 1] + 0.05;
    env.omegas = ws;
    for (int k = 0; k < n; ++k) env.couplings.push_back(uc(rng));

    // visit all three regimes in rotation
    const double B = bounding_strength(sys), S = spectral_strength(env);
    double target = 0.0;
    if (trial % 3 == 0) target = 0.5 * B;       // bounded
    else if (trial % 3 == 1) target = B;        // critical (exact balance)
    else target = 1.5 * B;                      // unstable
    const double scale = std::sqrt(target / S);
    for (double& c : env.couplings) c *= scale;

    const auto md = modal_decompose(sys, env);
    const double tau_max = md.regime.label == Regime::Unstable ? std::min(10.0, 6.0 / md.mu0)
                                                               : 10.0;
    CHECK(residual_check(md, sys, env, linspace(0.0, tau_max, 100)) < 1e-8);
  }
}

TEST_CASE("Markovian deviation from the exact solution is regression-bounded") {
  // five-mode band concentrated above the trap frequency; deviation measured
  // once and pinned with headroom
  SystemParams sys{1.0, 1.0, 1.0};
  const EnvironmentSpec env =
      drude_environment(sys, 1.0, 1.0 / 1.15, {2.43, 2.66, 2.69, 2.70, 2.77}, 0.39, 500.0);
  const auto grid = linspace(0.0, 30.0, 301);
  const auto md = modal_decompose(sys, env);
  const auto zm = z_markovian(sys, env, grid);
  double dev = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    dev = std::max(dev, std::abs(zm[i].z - z_exact(md, grid[i]).z));
  // measured 0.2894 at first run: a slow secular phase drift of the shifted
  // frequency, not an amplitude error; pinned with headroom
  CHECK(dev < 0.35);
}
