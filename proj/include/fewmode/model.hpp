// model.hpp — system/environment parameter sets, bath kernels, regime classification
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fewmode {

// ----------------------------------------------------------------------------
// parameter sets
// ----------------------------------------------------------------------------

struct SystemParams {
  double M = 1.0;      // central particle mass
  double Omega = 1.0;  // trap frequency
  double hbar = 1.0;   // kept explicit so thermal coth arguments stay visible

  void validate() const {
    if (!(M > 0.0)) throw std::invalid_argument("SystemParams: M must be > 0");
    if (!(Omega > 0.0)) throw std::invalid_argument("SystemParams: Omega must be > 0");
    if (!(hbar > 0.0)) throw std::invalid_argument("SystemParams: hbar must be > 0");
  }
};

struct EnvironmentSpec {
  double m = 1.0;                 // common oscillator mass
  double beta = 1.0;              // inverse temperature
  std::vector<double> omegas;     // mode frequencies, strictly increasing, all > 0
  std::vector<double> couplings;  // bilinear coupling constants C_k, same length

  std::size_t n_modes() const { return omegas.size(); }

  void validate() const {
    if (!(m > 0.0)) throw std::invalid_argument("EnvironmentSpec: m must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("EnvironmentSpec: beta must be > 0");
    if (omegas.size() != couplings.size())
      throw std::invalid_argument("EnvironmentSpec: omegas/couplings length mismatch");
    for (std::size_t k = 0; k < omegas.size(); ++k) {
      if (!(omegas[k] > 0.0))
        throw std::invalid_argument("EnvironmentSpec: omega[" + std::to_string(k) +
                                    "] must be > 0");
      if (k > 0 && !(omegas[k] > omegas[k - 1]))
        throw std::invalid_argument("EnvironmentSpec: omegas must be strictly increasing");
      if (!std::isfinite(couplings[k]))
        throw std::invalid_argument("EnvironmentSpec: coupling[" + std::to_string(k) +
                                    "] must be finite");
    }
  }
};

// ----------------------------------------------------------------------------
// numerics helpers
// ----------------------------------------------------------------------------

// coth(x) in a form stable for tiny |x| (~1/x without cancellation) and
// saturating to +-1 for large |x|.
inline double coth(double x) {
  if (std::abs(x) > 20.0) return x > 0.0 ? 1.0 : -1.0;
  return 1.0 + 2.0 / std::expm1(2.0 * x);
}

// ----------------------------------------------------------------------------
// energy scales and regime classification
// ----------------------------------------------------------------------------

enum class Regime { Bounded, Critical, Unstable };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Bounded: return "bounded";
    case Regime::Critical: return "critical";
    case Regime::Unstable: return "unstable";
  }
  return "?";
}

struct RegimeClass {
  Regime label = Regime::Bounded;
  double ratio = 0.0;  // spectral_strength / (M Omega^2)
};

// binding strength of the trap, M Omega^2
inline double bounding_strength(const SystemParams& sys) { return sys.M * sys.Omega * sys.Omega; }

// total spectral strength sum_k C_k^2 / (m omega_k^2)
inline double spectral_strength(const EnvironmentSpec& env) {
  double s = 0.0;
  for (std::size_t k = 0; k < env.n_modes(); ++k)
    s += env.couplings[k] * env.couplings[k] / (env.m * env.omegas[k] * env.omegas[k]);
  return s;
}

inline constexpr double kRegimeTol = 1e-9;  // relative balance tolerance

inline RegimeClass classify_regime(const SystemParams& sys, const EnvironmentSpec& env,
                                   double tol = kRegimeTol) {
  const double b = bounding_strength(sys);
  const double s = spectral_strength(env);
  RegimeClass rc;
  rc.ratio = s / b;
  if (b > (1.0 + tol) * s)
    rc.label = Regime::Bounded;
  else if (b < (1.0 - tol) * s)
    rc.label = Regime::Unstable;
  else
    rc.label = Regime::Critical;
  return rc;
}

// ----------------------------------------------------------------------------
// bath kernels
// ----------------------------------------------------------------------------

// dissipation kernel K_I(dt) = -sum_k C_k^2/(2 m omega_k) sin(omega_k dt)
inline double kernel_KI(const EnvironmentSpec& env, double dt) {
  double acc = 0.0;
  for (std::size_t k = 0; k < env.n_modes(); ++k) {
    const double c = env.couplings[k], w = env.omegas[k];
    acc -= c * c / (2.0 * env.m * w) * std::sin(w * dt);
  }
  return acc;
}

// fluctuation kernel K_R(dt) = sum_k C_k^2/(2 m omega_k) coth(hbar omega_k beta / 2) cos(omega_k dt)
inline double kernel_KR(const EnvironmentSpec& env, double dt, double hbar = 1.0) {
  double acc = 0.0;
  for (std::size_t k = 0; k < env.n_modes(); ++k) {
    const double c = env.couplings[k], w = env.omegas[k];
    acc += c * c / (2.0 * env.m * w) * coth(hbar * w * env.beta / 2.0) * std::cos(w * dt);
  }
  return acc;
}

// ----------------------------------------------------------------------------
// Drude-weighted couplings
// ----------------------------------------------------------------------------

// C_k = M Omega^2 gamma sqrt(Gamma^2 / ((omega_k - Omega)^2 + Gamma^2))
inline double coupling_from_drude(double gamma, double Gamma, const SystemParams& sys,
                                  double omega_k) {
  if (!(Gamma > 0.0)) throw std::invalid_argument("coupling_from_drude: Gamma must be > 0");
  const double d = omega_k - sys.Omega;
  return bounding_strength(sys) * gamma * std::sqrt(Gamma * Gamma / (d * d + Gamma * Gamma));
}

inline EnvironmentSpec drude_environment(const SystemParams& sys, double m, double beta,
                                         std::vector<double> omegas, double gamma, double Gamma) {
  EnvironmentSpec env;
  env.m = m;
  env.beta = beta;
  env.omegas = std::move(omegas);
  env.couplings.reserve(env.omegas.size());
  for (double w : env.omegas) env.couplings.push_back(coupling_from_drude(gamma, Gamma, sys, w));
  env.validate();
  return env;
}

}  // namespace fewmode
