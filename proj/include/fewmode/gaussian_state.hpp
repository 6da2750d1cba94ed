// gaussian_state.hpp — wave-packet moments: first/second-moment transport,
// decoherence measure, and reduced density-matrix values
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fewmode/charpoly.hpp"
#include "fewmode/model.hpp"
#include "fewmode/noise.hpp"
#include "fewmode/zsol.hpp"

namespace fewmode {

struct UnphysicalResult : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// state
// ----------------------------------------------------------------------------

inline constexpr double kFloorSlack = 1e-9;  // tolerance on the uncertainty floor

struct GaussianState {
  double Xc = 0.0;   // mean position
  double Pc = 0.0;   // mean momentum
  double dX2 = 0.0;  // position variance
  double dP2 = 0.0;  // momentum variance
  double dXP = 0.0;  // symmetric cross correlator

  double uncertainty() const { return dX2 * dP2 - dXP * dXP; }

  void validate(double hbar = 1.0) const {
    if (!(dX2 > 0.0)) throw std::invalid_argument("GaussianState: dX2 must be > 0");
    if (!(dP2 > 0.0)) throw std::invalid_argument("GaussianState: dP2 must be > 0");
    if (uncertainty() < hbar * hbar / 4.0 - kFloorSlack)
      throw std::invalid_argument("GaussianState: uncertainty below the physical floor");
  }

  Eigen::Matrix2d covariance() const {
    Eigen::Matrix2d s;
    s << dX2, dXP, dXP, dP2;
    return s;
  }
  static GaussianState from_covariance(double Xc, double Pc, const Eigen::Matrix2d& s) {
    return {Xc, Pc, s(0, 0), s(1, 1), 0.5 * (s(0, 1) + s(1, 0))};
  }
};

// ----------------------------------------------------------------------------
// decoherence measure and density-matrix values
// ----------------------------------------------------------------------------

// D_c = (ΔX²ΔP² − Δ{XP}²)/ΔX²: the Gaussian decay rate of off-diagonal
// coherence in units of momentum²
inline double decoherence_measure(const GaussianState& st) {
  return st.uncertainty() / st.dX2;
}

// relative off-diagonal weight exp(−D_c r²/(2ħ²)) at separation r
inline double off_diagonal(const GaussianState& st, double r, double hbar = 1.0) {
  return std::exp(-decoherence_measure(st) * r * r / (2.0 * hbar * hbar));
}

// ρ(R + r/2, R − r/2) of the Gaussian state, normalized so the diagonal
// (r = 0) integrates to one over R
inline std::complex<double> density_matrix_value(const GaussianState& st, double R, double r,
                                                 double hbar = 1.0) {
  const double dR = R - st.Xc;
  const double amp = -dR * dR / (2.0 * st.dX2) -
                     decoherence_measure(st) * r * r / (2.0 * hbar * hbar);
  const double phase = st.Pc * r / hbar + st.dXP * dR * r / (hbar * st.dX2);
  return std::exp(std::complex<double>(amp, phase)) / std::sqrt(2.0 * M_PI * st.dX2);
}

// ----------------------------------------------------------------------------
// moment transport
//
// Homogeneous part: with the fundamental pair (Z, Y) (exact dynamics: Y = Ż,
// because Ż solves the same equation with the companion initial data),
//
//   Φ(t) = [ Y        Z/M  ]
//          [ M·Ẏ      Ż    ],
//
// means map as (Xc, Pc) → Φ(Xc, Pc), covariance as Φ σ Φᵀ plus the additive
// noise matrix from the fluctuation kernel.
// ----------------------------------------------------------------------------

inline std::pair<double, double> evolve_mean(const ModalDecomposition& md,
                                             const SystemParams& sys, double X0, double P0,
                                             double t) {
  const ZEval e = z_exact(md, t);
  return {X0 * e.zdot + P0 * e.z / sys.M, X0 * sys.M * e.zddot + P0 * e.zdot};
}

namespace detail {

inline GaussianState transport_state(const GaussianState& st0, const Eigen::Matrix2d& phi,
                                     const Eigen::Matrix2d& noise, double hbar) {
  const Eigen::Matrix2d sigma = phi * st0.covariance() * phi.transpose() + noise;
  Eigen::Vector2d mean0(st0.Xc, st0.Pc);
  const Eigen::Vector2d mean = phi * mean0;
  GaussianState out = GaussianState::from_covariance(mean(0), mean(1), sigma);
  // the determinant loses all relative accuracy once the cancelling products
  // dwarf the floor; widen the slack by a rounding envelope so huge-but-valid
  // states (unstable regime at late times) are not rejected for noise
  const double envelope =
      4.0 * std::numeric_limits<double>::epsilon() *
      (std::abs(out.dX2 * out.dP2) + out.dXP * out.dXP);
  if (out.uncertainty() < hbar * hbar / 4.0 - kFloorSlack - envelope)
    throw UnphysicalResult("transported state violates the uncertainty floor");
  return out;
}

}  // namespace detail

// caustic-free assembly used by trajectory writers: all ingredients stay
// finite even when Z(t) = 0
inline GaussianState assemble_covariance_exact(const ModalDecomposition& md,
                                               const SystemParams& sys,
                                               const EnvironmentSpec& env,
                                               const GaussianState& st0, double t) {
  if (t == 0.0) return st0;
  const ZEval e = z_exact(md, t);
  Eigen::Matrix2d phi;
  phi << e.zdot, e.z / sys.M, sys.M * e.zddot, e.zdot;
  const TriangleMoments g = g_moments_exact(md, env, sys.hbar, t);
  return detail::transport_state(st0, phi, noise_matrix_from_moments(g, sys.hbar, sys.M),
                                 sys.hbar);
}

inline GaussianState evolve_covariance(const ModalDecomposition& md, const SystemParams& sys,
                                       const EnvironmentSpec& env, const GaussianState& st0,
                                       double t) {
  st0.validate(sys.hbar);
  if (t == 0.0) return st0;
  propagator_basis(md, t);  // propagator view is singular at caustics; reject honestly
  return assemble_covariance_exact(md, sys, env, st0, t);
}

// ----------------------------------------------------------------------------
// Markovian variant: same transport structure on the locally-approximated
// fundamental pair (z, y); the χ integrals keep their exact double-integral
// form with the Markovian paths substituted
// ----------------------------------------------------------------------------

struct MarkovPath {
  const MarkovianSolution* sol;
  void operator()(double tau, double& zv, double& yv) const {
    zv = sol->eval(tau).z;
    yv = sol->eval(tau, true).z;
  }
  double resolve_frequency() const {
    const double S = spectral_strength(sol->env);
    const double om2 = sol->sys.Omega * sol->sys.Omega;
    double f = std::max(sol->sys.Omega, sol->env.n_modes() ? sol->env.omegas.back() : 0.0);
    return std::max(f, std::sqrt(std::max(0.0, 2.0 * S / sol->sys.M - om2)));
  }
};

inline GaussianState assemble_covariance_markovian(const MarkovianSolution& sol,
                                                   const GaussianState& st0, double t) {
  if (t == 0.0) return st0;
  const SystemParams& sys = sol.sys;
  const ZEval ez = sol.eval(t);
  const ZEval ey = sol.eval(t, true);
  Eigen::Matrix2d phi;
  phi << ey.z, ez.z / sys.M, sys.M * ey.zdot, ez.zdot;  // det Φ = Wronskian = 1
  const MarkovPath path{&sol};
  const TriangleMoments g =
      triangle_moments(sol.env, sys.hbar, t, path.resolve_frequency(), path);
  return detail::transport_state(st0, phi, noise_matrix_from_moments(g, sys.hbar, sys.M),
                                 sys.hbar);
}

// ----------------------------------------------------------------------------
// trajectory container
// ----------------------------------------------------------------------------

struct TrajectoryPoint {
  double residual = 0.0;
  bool caustic = false;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<GaussianState> states;
  std::vector<double> dc;
  RegimeClass regime;
  std::vector<TrajectoryPoint> diagnostics;
  std::vector<ZEval> zvals;

  void check_consistent() const {
    const std::size_t n = times.size();
    if (states.size() != n || dc.size() != n || diagnostics.size() != n || zvals.size() != n)
      throw std::logic_error("Trajectory: column lengths disagree");
    for (std::size_t i = 1; i < n; ++i)
      if (!(times[i] > times[i - 1]))
        throw std::logic_error("Trajectory: times must strictly increase");
  }
};

}  // namespace fewmode
