// ohmic.hpp — continuum (Ohmic) limit: damped closed-form Z, renormalized
// frequency, fluctuation–dissipation stationary width, and a finite-N
// discretizer converging to the continuum
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "fewmode/model.hpp"
#include "fewmode/quadrature.hpp"
#include "fewmode/zsol.hpp"

namespace fewmode {

struct OverdampedUnsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// parameters
// ----------------------------------------------------------------------------

struct OhmicParams {
  double gamma0 = 0.0;    // damping rate
  double Lambda = 0.0;    // sharp frequency cutoff
  double Omega_r2 = 0.0;  // renormalized squared trap frequency Ω² − 4γ0Λ/π

  void validate() const {
    if (!(gamma0 > 0.0)) throw std::invalid_argument("OhmicParams: gamma0 must be > 0");
    if (!(Lambda > gamma0)) throw std::invalid_argument("OhmicParams: Lambda must exceed gamma0");
  }

  // underdamped oscillation frequency; the only regime with a closed form here
  double omega_tilde() const {
    if (!(Omega_r2 > gamma0 * gamma0))
      throw OverdampedUnsupported(
          "OhmicParams: renormalized frequency is overdamped (Omega_r2 <= gamma0^2)");
    return std::sqrt(Omega_r2 - gamma0 * gamma0);
  }
};

inline OhmicParams ohmic_from_trap(const SystemParams& sys, double gamma0, double Lambda) {
  OhmicParams p;
  p.gamma0 = gamma0;
  p.Lambda = Lambda;
  p.Omega_r2 = sys.Omega * sys.Omega - 4.0 * gamma0 * Lambda / M_PI;
  p.validate();
  return p;
}

// ----------------------------------------------------------------------------
// damped fundamental solution Z = e^{−γ0τ} sin(Ω̃τ)/Ω̃
// ----------------------------------------------------------------------------

inline ZEval ohmic_z(const OhmicParams& p, double tau) {
  p.validate();
  const double wt = p.omega_tilde();
  const double damp = std::exp(-p.gamma0 * tau);
  const double sn = std::sin(wt * tau), cs = std::cos(wt * tau);
  ZEval out;
  out.z = damp * sn / wt;
  out.zdot = damp * (cs - p.gamma0 * sn / wt);
  out.zddot = -2.0 * p.gamma0 * out.zdot - p.Omega_r2 * out.z;  // from the damped equation
  return out;
}

// companion solution (value 1, slope 0 at τ=0) of the same damped equation;
// its derivative collapses to −Ω_r²·Z
inline ZEval ohmic_y(const OhmicParams& p, double tau) {
  const double wt = p.omega_tilde();
  const double damp = std::exp(-p.gamma0 * tau);
  const double sn = std::sin(wt * tau), cs = std::cos(wt * tau);
  ZEval out;
  out.z = damp * (cs + p.gamma0 * sn / wt);
  out.zdot = -p.Omega_r2 * damp * sn / wt;
  out.zddot = -2.0 * p.gamma0 * out.zdot - p.Omega_r2 * out.z;
  return out;
}

// ----------------------------------------------------------------------------
// fluctuation–dissipation stationary width
//
//   ΔX²(∞) = (ħ/π) ∫_0^∞ coth(βħω/2) · (1/M) · 2γ0ω / ((Ω_r²−ω²)² + 4γ0²ω²) dω
//
// The numerator 2γ0ω is Im χ(ω)·M·|χ(ω)|⁻²·... — concretely, it is the
// imaginary part of the response of z̈ + 2γ0 ż + Ω_r² z, and the γ0 → 0
// Lorentzian limit of the integral then reproduces the bare closed form
// coth_width exactly (the delta-function weight integrates to π/(2Ω_r)).
// ----------------------------------------------------------------------------

inline double stationary_width(const SystemParams& sys, double beta, const OhmicParams& p) {
  p.validate();
  const double wr = std::sqrt(p.Omega_r2);
  if (!(p.Omega_r2 > p.gamma0 * p.gamma0))
    throw OverdampedUnsupported("stationary_width: overdamped parameters");

  const auto integrand = [&](double w) {
    if (w == 0.0) return 4.0 * p.gamma0 / (beta * sys.hbar * sys.M * p.Omega_r2 * p.Omega_r2);
    const double det = (p.Omega_r2 - w * w) * (p.Omega_r2 - w * w) +
                       4.0 * p.gamma0 * p.gamma0 * w * w;
    return coth(beta * sys.hbar * w / 2.0) * 2.0 * p.gamma0 * w / (sys.M * det);
  };

  // resonance-aware split at Ω_r, then geometric tail panels until negligible
  double acc = integrate_adaptive(integrand, 0.0, wr, 1e-10);
  acc += integrate_adaptive(integrand, wr, 4.0 * wr, 1e-10);
  double lo = 4.0 * wr;
  for (int k = 0; k < 60; ++k) {
    const double hi = 2.0 * lo;
    const double piece = integrate_adaptive(integrand, lo, hi, 1e-10);
    acc += piece;
    if (std::abs(piece) < 1e-13 * std::abs(acc)) break;
    lo = hi;
  }
  return sys.hbar / M_PI * acc;
}

// closed-form equilibrium width of the bare renormalized oscillator
inline double coth_width(const SystemParams& sys, double beta, double Omega_r) {
  if (!(Omega_r > 0.0)) throw std::invalid_argument("coth_width: Omega_r must be > 0");
  return sys.hbar / (2.0 * sys.M * Omega_r) * coth(beta * sys.hbar * Omega_r / 2.0);
}

// ----------------------------------------------------------------------------
// finite-N discretization of the Ohmic density
//
//   D(ω)C²(ω)/(2mω) = (2Mγ0/π)·ω·Θ(Λ−ω)  ⇒  ω_k = (k−1/2)Δω, Δω = Λ/N,
//   C_k² = (4Mmγ0/π)·ω_k²·Δω  (midpoint sampling keeps ω = 0 out of the grid)
// ----------------------------------------------------------------------------

inline EnvironmentSpec discretize_ohmic(double gamma0, double Lambda, int n_modes, double m,
                                        double M, double beta) {
  if (n_modes < 2) throw std::invalid_argument("discretize_ohmic: need at least two modes");
  if (!(gamma0 > 0.0) || !(Lambda > 0.0))
    throw std::invalid_argument("discretize_ohmic: gamma0 and Lambda must be > 0");
  EnvironmentSpec env;
  env.m = m;
  env.beta = beta;
  const double dw = Lambda / n_modes;
  env.omegas.reserve(n_modes);
  env.couplings.reserve(n_modes);
  for (int k = 1; k <= n_modes; ++k) {
    const double w = (k - 0.5) * dw;
    env.omegas.push_back(w);
    env.couplings.push_back(std::sqrt(4.0 * M * m * gamma0 / M_PI * w * w * dw));
  }
  env.validate();
  return env;
}

}  // namespace fewmode
