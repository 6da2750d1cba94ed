// oracle.hpp — brute-force ground truth: exact linear flow of the full
// (N+1)-oscillator system, thermal initial data, and marginalization onto the
// central particle. Deliberately ignorant of Z, χ, and every influence-
// functional object.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "fewmode/gaussian_state.hpp"
#include "fewmode/model.hpp"

namespace fewmode {

struct NormOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// full flow generator
//
// Phase-space ordering is positions-then-momenta throughout:
//   (X, q_1..q_N, P, p_1..p_N).
// ----------------------------------------------------------------------------

struct FullFlowGenerator {
  Eigen::MatrixXd A;     // 2(N+1) × 2(N+1) generator
  std::size_t n_modes;   // N

  std::size_t dim() const { return A.rows(); }
  std::size_t x_index() const { return 0; }
  std::size_t p_index() const { return n_modes + 1; }
};

inline FullFlowGenerator build_full_flow(const SystemParams& sys, const EnvironmentSpec& env) {
  sys.validate();
  env.validate();
  const std::size_t n = env.n_modes();
  const std::size_t d = n + 1;

  Eigen::MatrixXd kmat = Eigen::MatrixXd::Zero(d, d);  // stiffness
  kmat(0, 0) = sys.M * sys.Omega * sys.Omega;
  for (std::size_t k = 0; k < n; ++k) {
    kmat(k + 1, k + 1) = env.m * env.omegas[k] * env.omegas[k];
    kmat(0, k + 1) = kmat(k + 1, 0) = env.couplings[k];
  }

  Eigen::MatrixXd minv = Eigen::MatrixXd::Zero(d, d);  // inverse masses
  minv(0, 0) = 1.0 / sys.M;
  for (std::size_t k = 0; k < n; ++k) minv(k + 1, k + 1) = 1.0 / env.m;

  FullFlowGenerator gen;
  gen.n_modes = n;
  gen.A = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  gen.A.topRightCorner(d, d) = minv;
  gen.A.bottomLeftCorner(d, d) = -kmat;
  return gen;
}

// ----------------------------------------------------------------------------
// matrix exponential, scaling-and-squaring around a diagonal Padé kernel
// ----------------------------------------------------------------------------

inline Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
  const Eigen::Index d = a.rows();
  if (a.cols() != d) throw std::invalid_argument("matrix_exponential: matrix must be square");

  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd as = a / std::ldexp(1.0, squarings);

  // [6/6] diagonal Padé approximant of exp(as)
  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd a2 = as * as;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a2 * a4;
  const Eigen::MatrixXd u =
      as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
            b[1] * ident);
  const Eigen::MatrixXd v =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
      b[0] * ident;

  Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
  for (int s = 0; s < squarings; ++s) r = r * r;
  return r;
}

inline Eigen::MatrixXd flow_exponential(const FullFlowGenerator& gen, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("flow_exponential: t must be nonnegative");
  const Eigen::MatrixXd s = matrix_exponential(Eigen::MatrixXd(t * gen.A));
  if (!s.allFinite())
    throw NormOverflow("flow_exponential: unstable growth exceeded representable range at t = " +
                       std::to_string(t));
  return s;
}

// ----------------------------------------------------------------------------
// thermal initial data and marginalized evolution
// ----------------------------------------------------------------------------

// diagonal thermal covariance of the bare modes, ordering (q_1..q_N, p_1..p_N)
inline Eigen::MatrixXd thermal_env_covariance(const EnvironmentSpec& env, double hbar = 1.0) {
  env.validate();
  const std::size_t n = env.n_modes();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = env.omegas[k];
    const double c = coth(hbar * w * env.beta / 2.0);
    cov(k, k) = hbar / (2.0 * env.m * w) * c;
    cov(n + k, n + k) = hbar * env.m * w / 2.0 * c;
  }
  return cov;
}

// full-system initial covariance: central block from the wave packet, thermal
// environment, no cross correlations
inline Eigen::MatrixXd oracle_initial_covariance(const SystemParams& sys,
                                                 const EnvironmentSpec& env,
                                                 const GaussianState& st0) {
  const std::size_t n = env.n_modes();
  const std::size_t d = n + 1;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  cov(0, 0) = st0.dX2;
  cov(d, d) = st0.dP2;
  cov(0, d) = cov(d, 0) = st0.dXP;
  const Eigen::MatrixXd envcov = thermal_env_covariance(env, sys.hbar);
  for (std::size_t k = 0; k < n; ++k) {
    cov(1 + k, 1 + k) = envcov(k, k);
    cov(d + 1 + k, d + 1 + k) = envcov(n + k, n + k);
  }
  return cov;
}

// marginalize a transported full state back onto the central particle
inline GaussianState oracle_reduce(const FullFlowGenerator& gen, const Eigen::MatrixXd& s,
                                   const Eigen::MatrixXd& cov0, const Eigen::VectorXd& mean0) {
  const Eigen::MatrixXd cov = s * cov0 * s.transpose();
  const Eigen::VectorXd mean = s * mean0;
  if (!cov.allFinite() || !mean.allFinite())
    throw NormOverflow("oracle_reduce: covariance transport overflowed");
  const std::size_t ix = gen.x_index(), ip = gen.p_index();
  GaussianState out;
  out.Xc = mean(ix);
  out.Pc = mean(ip);
  out.dX2 = cov(ix, ix);
  out.dP2 = cov(ip, ip);
  out.dXP = 0.5 * (cov(ix, ip) + cov(ip, ix));
  return out;
}

inline GaussianState oracle_covariance(const SystemParams& sys, const EnvironmentSpec& env,
                                       const GaussianState& st0, double t) {
  const FullFlowGenerator gen = build_full_flow(sys, env);
  const Eigen::MatrixXd s = flow_exponential(gen, t);
  const Eigen::MatrixXd cov0 = oracle_initial_covariance(sys, env, st0);
  Eigen::VectorXd mean0 = Eigen::VectorXd::Zero(gen.dim());
  mean0(gen.x_index()) = st0.Xc;
  mean0(gen.p_index()) = st0.Pc;
  return oracle_reduce(gen, s, cov0, mean0);
}

}  // namespace fewmode
