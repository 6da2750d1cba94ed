// zsol.hpp — fundamental solution Z(τ): exact modal form, propagator basis,
// Markovian-approximated solution, and the substitution-residual diagnostic
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "fewmode/charpoly.hpp"
#include "fewmode/model.hpp"

namespace fewmode {

// ----------------------------------------------------------------------------
// errors
// ----------------------------------------------------------------------------

struct CausticAtHorizon : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StepTooCoarse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// Z, Ż, Z̈ at one time
// ----------------------------------------------------------------------------

struct ZEval {
  double z = 0.0;      // time units (normalization Ż(0) = 1)
  double zdot = 0.0;   // dimensionless
  double zddot = 0.0;  // 1/time
};

// unified modal oscillator in s = nu^2: osc(s, tau) solves f'' = -s f,
// f(0) = 0, f'(0) = 1, valid for oscillatory, linear, and growing branches
inline double osc_mode(double s, double tau) {
  if (s > 0.0) {
    const double nu = std::sqrt(s);
    return std::sin(nu * tau) / nu;
  }
  if (s < 0.0) {
    const double mu = std::sqrt(-s);
    return std::sinh(mu * tau) / mu;
  }
  return tau;
}

inline double osc_mode_dot(double s, double tau) {
  if (s > 0.0) return std::cos(std::sqrt(s) * tau);
  if (s < 0.0) return std::cosh(std::sqrt(-s) * tau);
  return 1.0;
}

// ----------------------------------------------------------------------------
// exact evaluation
// ----------------------------------------------------------------------------

inline ZEval z_exact(const ModalDecomposition& md, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("z_exact: tau must be nonnegative");

  ZEval out;
  for (std::size_t k = 0; k < md.nus.size(); ++k) {
    const double a = md.amps[k];
    if (a == 0.0) continue;
    const double nu = md.nus[k];
    const double sn = std::sin(nu * tau), cs = std::cos(nu * tau);
    out.z += a * sn / nu;
    out.zdot += a * cs;
    out.zddot += -a * nu * sn;
  }
  if (md.regime.label == Regime::Critical) {
    out.z += md.linear_coef * tau;
    out.zdot += md.linear_coef;
  }
  if (md.regime.label == Regime::Unstable) {
    const double mu = md.mu0;
    const double sh = std::sinh(mu * tau), ch = std::cosh(mu * tau);
    out.z += md.amp_growth * sh / mu;
    out.zdot += md.amp_growth * ch;
    out.zddot += md.amp_growth * mu * sh;
  }
  return out;
}

// ----------------------------------------------------------------------------
// propagator basis
//
//   u_1(τ) = Ż(τ) − (Z(τ)/Z(t))·Ż(t),   u_2(τ) = Z(τ)/Z(t),
//   v_1(τ) = u_2(t−τ),                  v_2(τ) = u_1(t−τ).
// ----------------------------------------------------------------------------

struct PropagatorBasis {
  double t = 0.0;
  double udot1_0 = 0.0, udot1_t = 0.0;
  double udot2_0 = 0.0, udot2_t = 0.0;
  double zt = 0.0, zdot_t = 0.0;
};

inline constexpr double kCausticTol = 1e-10;  // relative to max |Z| over [0, t]

// caustic probe: |Z(t)| measured against the largest |Z| seen on a dense
// sample of [0, t]
inline bool caustic_at(const ModalDecomposition& md, double t, int samples = 129) {
  double zmax = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double tau = t * static_cast<double>(i) / samples;
    zmax = std::max(zmax, std::abs(z_exact(md, tau).z));
  }
  return std::abs(z_exact(md, t).z) < kCausticTol * zmax;
}

inline PropagatorBasis propagator_basis(const ModalDecomposition& md, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("propagator_basis: t must be positive");
  if (caustic_at(md, t))
    throw CausticAtHorizon("Z(t) vanishes at the requested horizon (focusing caustic)");

  const ZEval zt = z_exact(md, t);
  PropagatorBasis pb;
  pb.t = t;
  pb.zt = zt.z;
  pb.zdot_t = zt.zdot;
  pb.udot2_0 = 1.0 / zt.z;
  pb.udot2_t = zt.zdot / zt.z;
  pb.udot1_0 = -zt.zdot / zt.z;
  pb.udot1_t = zt.zddot - zt.zdot * zt.zdot / zt.z;
  return pb;
}

// pointwise basis functions (test and diagnostic plumbing)
inline double u1(const ModalDecomposition& md, double t, double tau) {
  const ZEval zt = z_exact(md, t), zv = z_exact(md, tau);
  return zv.zdot - zv.z * zt.zdot / zt.z;
}
inline double u2(const ModalDecomposition& md, double t, double tau) {
  return z_exact(md, tau).z / z_exact(md, t).z;
}
inline double v1(const ModalDecomposition& md, double t, double tau) { return u2(md, t, t - tau); }
inline double v2(const ModalDecomposition& md, double t, double tau) { return u1(md, t, t - tau); }

// ----------------------------------------------------------------------------
// Markovian-approximated solution
//
// History independence collapses the memory term of the dissipation equation
// to a local frequency shift:
//
//   z̈ + [Ω² + (2/M)·κ(τ)]·z = 0,   κ(τ) = ∫_0^τ K_I = −Σ_k C_k²/(2mω_k²)(1−cos ω_kτ).
//
// The solver integrates the pair (z, y) of fundamental solutions (z(0)=0,
// ż(0)=1; y(0)=1, ẏ(0)=0) with a classical fixed-step 4th-order method and
// offers dense output through quintic Hermite segments, with curvature taken
// from the equation itself.
// ----------------------------------------------------------------------------

inline double markov_kappa(const EnvironmentSpec& env, double tau) {
  double acc = 0.0;
  for (std::size_t k = 0; k < env.n_modes(); ++k) {
    const double w = env.omegas[k], c = env.couplings[k];
    acc -= c * c / (2.0 * env.m * w * w) * (1.0 - std::cos(w * tau));
  }
  return acc;
}

struct MarkovianOptions {
  double substep_scale = 0.02;  // internal step h satisfies h·f_resolve ≤ this
  double coarse_limit = 0.2;    // output grids with h·ν_max above this are rejected
};

struct MarkovianSolution {
  SystemParams sys;
  EnvironmentSpec env;
  double t_max = 0.0;
  double h = 0.0;                    // internal uniform substep
  std::vector<double> z, zdot;       // nodal values, node i at τ = i·h
  std::vector<double> y, ydot;       // second fundamental solution
  std::vector<double> omega2_eff;    // Ω² + (2/M)κ at the nodes

  double eff_freq_sq(double tau) const {
    return sys.Omega * sys.Omega + 2.0 / sys.M * markov_kappa(env, tau);
  }

  ZEval eval(double tau, bool second = false) const {
    if (!(tau >= 0.0 && tau <= t_max * (1.0 + 1e-12)))
      throw std::invalid_argument("MarkovianSolution::eval: tau outside the solved window");
    tau = std::min(tau, t_max);
    const auto& f = second ? y : z;
    const auto& fd = second ? ydot : zdot;

    std::size_t i = static_cast<std::size_t>(tau / h);
    if (i + 1 >= f.size()) i = f.size() - 2;
    const double s = (tau - static_cast<double>(i) * h) / h;

    // quintic Hermite from (f, f', f'') at both segment ends
    const double f0 = f[i], d0 = fd[i] * h, c0 = -omega2_eff[i] * f[i] * h * h;
    const double f1 = f[i + 1], d1 = fd[i + 1] * h, c1 = -omega2_eff[i + 1] * f[i + 1] * h * h;
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double H0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    const double H1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    const double H2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    const double H3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    const double H4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    const double H5 = 0.5 * (s3 - 2.0 * s4 + s5);
    const double G0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    const double G1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    const double G2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    const double G3 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    const double G4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    const double G5 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);

    ZEval out;
    out.z = f0 * H0 + d0 * H1 + c0 * H2 + f1 * H3 + d1 * H4 + c1 * H5;
    out.zdot = (f0 * G0 + d0 * G1 + c0 * G2 + f1 * G3 + d1 * G4 + c1 * G5) / h;
    out.zddot = -eff_freq_sq(tau) * out.z;  // curvature from the equation itself
    return out;
  }
};

inline MarkovianSolution solve_markovian(const SystemParams& sys, const EnvironmentSpec& env,
                                         double t_max, MarkovianOptions opt = {}) {
  sys.validate();
  env.validate();
  if (!(t_max > 0.0)) throw std::invalid_argument("solve_markovian: t_max must be positive");

  MarkovianSolution sol;
  sol.sys = sys;
  sol.env = env;
  sol.t_max = t_max;

  // resolution scale: trap frequency, fastest bath mode, and the strongest
  // possible growth rate of the shifted frequency (κ ∈ [−S, 0])
  const double S = spectral_strength(env);
  double f_res = std::max(sys.Omega, env.n_modes() ? env.omegas.back() : 0.0);
  f_res = std::max(f_res, std::sqrt(std::max(0.0, 2.0 * S / sys.M - sys.Omega * sys.Omega)));

  const std::size_t n =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(t_max * f_res / opt.substep_scale)));
  const double h = t_max / static_cast<double>(n);
  sol.h = h;

  sol.z.resize(n + 1);
  sol.zdot.resize(n + 1);
  sol.y.resize(n + 1);
  sol.ydot.resize(n + 1);
  sol.omega2_eff.resize(n + 1);

  double zv = 0.0, zd = 1.0, yv = 1.0, yd = 0.0;
  sol.z[0] = zv;
  sol.zdot[0] = zd;
  sol.y[0] = yv;
  sol.ydot[0] = yd;
  sol.omega2_eff[0] = sol.eff_freq_sq(0.0);

  const auto accel = [&](double tau, double q) { return -sol.eff_freq_sq(tau) * q; };

  for (std::size_t i = 0; i < n; ++i) {
    const double t0 = static_cast<double>(i) * h;
    // one classical 4th-order step for the coupled pair (z, y)
    const double k1z = zd, k1zd = accel(t0, zv);
    const double k1y = yd, k1yd = accel(t0, yv);
    const double k2z = zd + 0.5 * h * k1zd, k2zd = accel(t0 + 0.5 * h, zv + 0.5 * h * k1z);
    const double k2y = yd + 0.5 * h * k1yd, k2yd = accel(t0 + 0.5 * h, yv + 0.5 * h * k1y);
    const double k3z = zd + 0.5 * h * k2zd, k3zd = accel(t0 + 0.5 * h, zv + 0.5 * h * k2z);
    const double k3y = yd + 0.5 * h * k2yd, k3yd = accel(t0 + 0.5 * h, yv + 0.5 * h * k2y);
    const double k4z = zd + h * k3zd, k4zd = accel(t0 + h, zv + h * k3z);
    const double k4y = yd + h * k3yd, k4yd = accel(t0 + h, yv + h * k3y);

    zv += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
    zd += h / 6.0 * (k1zd + 2.0 * k2zd + 2.0 * k3zd + k4zd);
    yv += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    yd += h / 6.0 * (k1yd + 2.0 * k2yd + 2.0 * k3yd + k4yd);

    sol.z[i + 1] = zv;
    sol.zdot[i + 1] = zd;
    sol.y[i + 1] = yv;
    sol.ydot[i + 1] = yd;
    sol.omega2_eff[i + 1] = sol.eff_freq_sq(t0 + h);
  }
  return sol;
}

inline std::vector<ZEval> z_markovian(const SystemParams& sys, const EnvironmentSpec& env,
                                      const std::vector<double>& grid,
                                      MarkovianOptions opt = {}) {
  if (grid.size() < 2) throw std::invalid_argument("z_markovian: grid needs at least two points");
  const double h_grid = grid[1] - grid[0];
  if (!(h_grid > 0.0)) throw std::invalid_argument("z_markovian: grid step must be positive");

  const MarkovianSolution sol = solve_markovian(sys, env, grid.back(), opt);

  // the integration substep must resolve the fastest hybrid frequency; with
  // the default substep scale this only fires on user-coarsened options
  const ModalDecomposition md = isolate_roots(sys, env);
  double nu_max = md.nus.empty() ? sys.Omega : md.nus.back();
  nu_max = std::max(nu_max, md.mu0);
  if (sol.h * nu_max > opt.coarse_limit)
    throw StepTooCoarse("z_markovian: integration step too coarse for the fastest hybrid mode");

  std::vector<ZEval> out;
  out.reserve(grid.size());
  for (double tau : grid) out.push_back(sol.eval(tau));
  return out;
}

// ----------------------------------------------------------------------------
// substitution residual
//
// The memory convolution of the dissipation equation evaluates in closed form
// against each modal component:
//
//   ∫_0^τ sin(ω(τ−σ))·osc(s, σ) dσ = (ω·osc(s, τ) − sin(ωτ)) / (ω² − s),
//
// so the residual Z̈ + Ω²Z + (2/M)∫ K_I Z needs no quadrature.
// ----------------------------------------------------------------------------

inline double conv_sin_osc(double omega, double s, double tau) {
  return (omega * osc_mode(s, tau) - std::sin(omega * tau)) / (omega * omega - s);
}

inline double residual_at(const ModalDecomposition& md, const SystemParams& sys,
                          const EnvironmentSpec& env, double tau) {
  const ZEval ze = z_exact(md, tau);
  double memory = 0.0;  // ∫_0^τ K_I(τ−σ) Z(σ) dσ
  for (std::size_t j = 0; j < env.n_modes(); ++j) {
    const double cj = env.couplings[j];
    if (cj == 0.0) continue;
    const double wj = env.omegas[j];
    const double kj = -cj * cj / (2.0 * env.m * wj);  // sine amplitude of K_I

    double zsum = 0.0;
    for (std::size_t k = 0; k < md.nus.size(); ++k) {
      if (md.amps[k] == 0.0) continue;
      zsum += md.amps[k] * conv_sin_osc(wj, md.nus[k] * md.nus[k], tau);
    }
    if (md.regime.label == Regime::Critical)
      zsum += md.linear_coef * conv_sin_osc(wj, 0.0, tau);
    if (md.regime.label == Regime::Unstable)
      zsum += md.amp_growth * conv_sin_osc(wj, -md.mu0 * md.mu0, tau);
    memory += kj * zsum;
  }
  return ze.zddot + sys.Omega * sys.Omega * ze.z + 2.0 / sys.M * memory;
}

inline double residual_check(const ModalDecomposition& md, const SystemParams& sys,
                             const EnvironmentSpec& env, const std::vector<double>& taus) {
  double worst = 0.0;
  for (double tau : taus) worst = std::max(worst, std::abs(residual_at(md, sys, env, tau)));
  return worst;
}

}  // namespace fewmode
