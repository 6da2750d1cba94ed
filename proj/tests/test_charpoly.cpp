// tests for the normal-mode polynomial: scaled evaluation, root isolation,
// and modal amplitudes
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fewmode/charpoly.hpp"

using namespace fewmode;

namespace {

SystemParams trap(double Omega = 1.0) { return SystemParams{1.0, Omega, 1.0}; }

EnvironmentSpec env_of(std::vector<double> omegas, std::vector<double> couplings) {
  EnvironmentSpec env;
  env.omegas = std::move(omegas);
  env.couplings = std::move(couplings);
  return env;
}

// draw a strictly Bounded instance with up to max_modes modes
struct RandomInstance {
  SystemParams sys;
  EnvironmentSpec env;
};

RandomInstance draw_bounded(std::mt19937& rng, int max_modes) {
  std::uniform_real_distribution<double> upar(0.5, 2.0), uw(0.3, 3.0), uc(0.1, 1.0),
      ufrac(0.1, 0.8);
  std::uniform_int_distribution<int> un(1, max_modes);
  RandomInstance inst;
  inst.sys = SystemParams{upar(rng), upar(rng), 1.0};
  inst.env.m = upar(rng);
  const int n = un(rng);
  std::vector<double> ws;
  for (int k = 0; k < n; ++k) ws.push_back(uw(rng));
  std::sort(ws.begin(), ws.end());
  for (int k = 1; k < n; ++k)
    if (ws[k] - ws[k - 1] < 0.05) ws[k] = ws[k - 1] + 0.05;  // keep modes well separated
  inst.env.omegas = ws;
  for (int k = 0; k < n; ++k) inst.env.couplings.push_back(uc(rng));
  // rescale couplings to park the instance strictly inside the Bounded regime
  const double target = ufrac(rng) * bounding_strength(inst.sys);
  const double scale = std::sqrt(target / spectral_strength(inst.env));
  for (double& c : inst.env.couplings) c *= scale;
  return inst;
}

}  // namespace

TEST_CASE("scaled product evaluation of the normal-mode polynomial") {
  // single mode, M = m = Omega = 1, omega = 2, C = 1:
  // P0(s) = (1 - s)(4 - s) - 1, so P0(0) = 3
  const auto sys = trap();
  const auto env = env_of({2.0}, {1.0});
  CHECK(eval_P0(sys, env, 0.0) == doctest::Approx(3.0).epsilon(1e-14));
  // roots of s^2 - 5s + 3
  const double lo = (5.0 - std::sqrt(13.0)) / 2.0;
  const double hi = (5.0 + std::sqrt(13.0)) / 2.0;
  CHECK(eval_P0(sys, env, lo) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(eval_P0(sys, env, hi)) < 1e-12);

  // at s = omega_n^2 only the n-th coupling term survives; sign is (-1)^n
  const auto multi = env_of({0.7, 1.3, 2.1, 2.8}, {0.3, 0.5, 0.2, 0.4});
  for (std::size_t n = 0; n < multi.n_modes(); ++n) {
    const double wn2 = multi.omegas[n] * multi.omegas[n];
    double expect = -multi.couplings[n] * multi.couplings[n] / multi.m;
    for (std::size_t i = 0; i < multi.n_modes(); ++i) {
      if (i == n) continue;
      expect *= multi.omegas[i] * multi.omegas[i] - wn2;
    }
    CHECK(eval_P0(sys, multi, wn2) == doctest::Approx(expect).epsilon(1e-12));
    const double sign = (n % 2 == 0) ? -1.0 : 1.0;  // (-1)^(n+1) with 0-based n
    CHECK(eval_P0(sys, multi, wn2) * sign > 0.0);
  }
}

TEST_CASE("scaled evaluation survives many large factors") {
  // product of ~500 factors of size ~400 overflows naive double evaluation;
  // the scaled representation must keep sign and (representable) magnitude
  std::vector<double> ws, cs;
  for (int k = 1; k <= 400; ++k) {
    ws.push_back(0.05 * k);
    cs.push_back(0.01);
  }
  const auto env = env_of(ws, cs);
  const ScaledReal at_zero = eval_P0_scaled(trap(), env, 0.0);
  CHECK(at_zero.sign() > 0);  // all factors (omega_k^2 - 0) positive, couplings tiny
  CHECK(std::isfinite(at_zero.mant));
  CHECK(at_zero.exp2 > 1024);  // genuinely beyond double range

  // above every pole the leading factor flips the overall sign
  const ScaledReal above = eval_P0_scaled(trap(), env, 500.0);
  CHECK(above.sign() < 0);
}

TEST_CASE("root isolation: frozen single-mode values") {
  SUBCASE("bounded, omega = 2, C = 1") {
    const auto md = isolate_roots(trap(), env_of({2.0}, {1.0}));
    REQUIRE(md.regime.label == Regime::Bounded);
    REQUIRE(md.nus.size() == 2);
    CHECK(md.nus[0] == doctest::Approx(std::sqrt((5.0 - std::sqrt(13.0)) / 2.0)).epsilon(1e-10));
    CHECK(md.nus[1] == doctest::Approx(std::sqrt((5.0 + std::sqrt(13.0)) / 2.0)).epsilon(1e-10));
    CHECK(md.mu0 == 0.0);
  }
  SUBCASE("unstable, omega = 1, C = 2") {
    const auto md = isolate_roots(trap(), env_of({1.0}, {2.0}));
    REQUIRE(md.regime.label == Regime::Unstable);
    REQUIRE(md.nus.size() == 1);
    CHECK(md.mu0 == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(md.nus[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-10));
  }
  SUBCASE("critical, omega = 1, C = 1") {
    const auto md = isolate_roots(trap(), env_of({1.0}, {1.0}));
    REQUIRE(md.regime.label == Regime::Critical);
    REQUIRE(md.nus.size() == 1);
    CHECK(md.nus[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  }
  SUBCASE("decoupled") {
    const auto md = isolate_roots(trap(1.3), env_of({2.0}, {0.0}));
    REQUIRE(md.regime.label == Regime::Bounded);
    REQUIRE(md.nus.size() == 2);
    CHECK(md.nus[0] == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(md.nus[1] == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("modal amplitudes: frozen values and sum rules") {
  SUBCASE("critical single mode") {
    const auto md = modal_decompose(trap(), env_of({1.0}, {1.0}));
    CHECK(md.linear_coef == doctest::Approx(0.5).epsilon(1e-10));
    REQUIRE(md.amps.size() == 1);
    CHECK(md.amps[0] == doctest::Approx(0.5).epsilon(1e-10));
    // critical linear coefficient equals prod omega_k^2 / nu_k^2
    CHECK(md.linear_coef == doctest::Approx(1.0 / (md.nus[0] * md.nus[0])).epsilon(1e-10));
  }
  SUBCASE("decoupled amplitudes select the bare trap mode") {
    const auto md = modal_decompose(trap(1.3), env_of({2.0}, {0.0}));
    REQUIRE(md.amps.size() == 2);
    CHECK(md.amps[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(md.amps[1] == doctest::Approx(0.0));
  }
  SUBCASE("zero-coupling mode inside a coupled set keeps zero amplitude") {
    const auto md = modal_decompose(trap(), env_of({0.8, 1.6, 2.4}, {0.4, 0.0, 0.3}));
    REQUIRE(md.nus.size() == 4);
    bool found = false;
    for (std::size_t k = 0; k < md.nus.size(); ++k) {
      if (std::abs(md.nus[k] - 1.6) < 1e-12) {
        CHECK(md.amps[k] == 0.0);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("randomized bounded instances: interlacing, residual, and sum rules") {
  std::mt19937 rng(77001);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = draw_bounded(rng, 12);
    const auto md = modal_decompose(inst.sys, inst.env);
    REQUIRE(md.regime.label == Regime::Bounded);
    REQUIRE(md.nus.size() == inst.env.n_modes() + 1);

    // strict interlacing 0 < nu_0 < omega_1 < nu_1 < ... < omega_N < nu_N
    CHECK(md.nus[0] > 0.0);
    for (std::size_t k = 0; k < inst.env.n_modes(); ++k) {
      CHECK(md.nus[k] < inst.env.omegas[k]);
      CHECK(inst.env.omegas[k] < md.nus[k + 1]);
    }

    // every reported root is certified by a local sign change, and the value
    // at the root is tiny relative to the polynomial one part in 1e9 away
    for (double nu : md.nus) {
      const double s = nu * nu;
      const double left = eval_P0(inst.sys, inst.env, s * (1.0 - 1e-9));
      const double right = eval_P0(inst.sys, inst.env, s * (1.0 + 1e-9));
      CHECK(left * right < 0.0);
      const double at_root = eval_P0(inst.sys, inst.env, s);
      CHECK(std::abs(at_root) < 0.01 * std::max(std::abs(left), std::abs(right)));
    }

    // velocity and curvature sum rules
    double amp_sum = 0.0, freq_sum = 0.0;
    for (std::size_t k = 0; k < md.nus.size(); ++k) {
      amp_sum += md.amps[k];
      freq_sum += md.amps[k] * md.nus[k] * md.nus[k];
    }
    CHECK(std::abs(amp_sum - 1.0) < 1e-10);
    const double om2 = inst.sys.Omega * inst.sys.Omega;
    CHECK(std::abs(freq_sum - om2) < 1e-8 * std::max(1.0, om2));
  }
}

TEST_CASE("sum rules hold in the critical and unstable regimes") {
  // signed-root bookkeeping: growth modes contribute with s = -mu0^2
  const auto unstable = modal_decompose(trap(), env_of({1.0}, {2.0}));
  double amp_sum = unstable.amp_growth;
  double freq_sum = unstable.amp_growth * (-unstable.mu0 * unstable.mu0);
  for (std::size_t k = 0; k < unstable.nus.size(); ++k) {
    amp_sum += unstable.amps[k];
    freq_sum += unstable.amps[k] * unstable.nus[k] * unstable.nus[k];
  }
  CHECK(amp_sum == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(freq_sum == doctest::Approx(1.0).epsilon(1e-8));

  const auto critical = modal_decompose(trap(), env_of({1.0}, {1.0}));
  double csum = 0.0, cfreq = 0.0;
  for (std::size_t k = 0; k < critical.nus.size(); ++k) {
    csum += critical.amps[k];
    cfreq += critical.amps[k] * critical.nus[k] * critical.nus[k];
  }
  CHECK(csum + critical.linear_coef == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(cfreq == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("roots flow to the decoupled set as couplings shrink") {
  const auto sys = trap(1.1);
  std::vector<double> cs = {0.6, 0.8};
  double prev_dist = 1e300;
  for (int step = 0; step < 6; ++step) {
    const auto md = isolate_roots(sys, env_of({0.7, 1.9}, cs));
    const std::vector<double> bare = {0.7, 1.1, 1.9};
    std::vector<double> roots = md.nus;
    std::sort(roots.begin(), roots.end());
    double dist = 0.0;
    for (std::size_t k = 0; k < bare.size(); ++k)
      dist = std::max(dist, std::abs(roots[k] - bare[k]));
    CHECK(dist < prev_dist);
    prev_dist = dist;
    for (double& c : cs) c *= 0.4;
  }
}

TEST_CASE("error taxonomy") {
  SUBCASE("bracket expansion gives up on astronomically strong coupling") {
    CHECK_THROWS_AS(isolate_roots(trap(), env_of({1.0}, {1e150})), BracketFailure);
  }
  SUBCASE("forcing a non-critical label on a balanced instance is ambiguous") {
    CHECK_THROWS_AS(isolate_roots(trap(), env_of({1.0}, {1.0}), kRootTol, Regime::Bounded),
                    BalanceAmbiguity);
    CHECK_THROWS_AS(isolate_roots(trap(), env_of({1.0}, {1.0}), kRootTol, Regime::Unstable),
                    BalanceAmbiguity);
  }
  SUBCASE("forcing a label against a decisive classification is rejected") {
    CHECK_THROWS_AS(isolate_roots(trap(), env_of({1.0}, {2.0}), kRootTol, Regime::Bounded),
                    std::invalid_argument);
  }
  SUBCASE("near-coincident roots are reported, not silently merged") {
    // one strong mode pins a root just below omega_2 while the nearly
    // degenerate pole pair omega_2, omega_3 pins another just above it
    CHECK_THROWS_AS(
        modal_decompose(trap(1.3), env_of({1.0, 2.0, 2.0 + 1e-13}, {1e-6, 1e-6, 1e-6})),
        DegenerateRoots);
  }
}
