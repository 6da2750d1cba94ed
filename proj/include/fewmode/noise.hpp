// noise.hpp — fluctuation double integrals over the causal triangle: the χ_ij
// of the influence-functional exponent and the additive noise covariance of
// the reduced Gaussian map
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fewmode/charpoly.hpp"
#include "fewmode/model.hpp"
#include "fewmode/quadrature.hpp"
#include "fewmode/zsol.hpp"

namespace fewmode {

// ----------------------------------------------------------------------------
// triangle moments
//
//   G_ab(t) = ∬_{0 ≤ σ ≤ σ' ≤ t} a(σ)·K_R(σ'−σ)·b(σ') dσ dσ',   a, b ∈ {Z, Y},
//
// where Z is the fundamental solution and Y its companion (Y = Ż for the exact
// dynamics). Every χ and every noise entry is a rational combination of these
// four numbers, and the combinations entering the covariance stay finite at
// caustics, which is why the moments — not the χ's — are the computational core.
// ----------------------------------------------------------------------------

struct TriangleMoments {
  // first index letter: early-time factor a(σ); second: late-time factor b(σ')
  double zz = 0.0, zy = 0.0, yz = 0.0, yy = 0.0;
  double t = 0.0;
};

struct NoiseIntegrals {
  double chi11 = 0.0, chi12_plus_21 = 0.0, chi22 = 0.0;
  double t = 0.0;
};

namespace detail {

struct KernelTerm {
  double omega;   // mode frequency
  double weight;  // C^2/(2 m ω) · coth(ħωβ/2)
};

inline std::vector<KernelTerm> kernel_terms(const EnvironmentSpec& env, double hbar) {
  std::vector<KernelTerm> terms;
  terms.reserve(env.n_modes());
  for (std::size_t k = 0; k < env.n_modes(); ++k) {
    const double c = env.couplings[k];
    if (c == 0.0) continue;
    const double w = env.omegas[k];
    terms.push_back({w, c * c / (2.0 * env.m * w) * coth(hbar * w * env.beta / 2.0)});
  }
  return terms;
}

// one resolution level: `panels` uniform panels with the order-16 rule.
// K_R(σ'−σ) separates by the cosine addition theorem, so panel-vs-panel
// blocks reduce to per-panel trig moments combined through prefix sums;
// only the diagonal panels need an explicit inner integral.
template <class Path>
TriangleMoments triangle_moments_level(const std::vector<KernelTerm>& terms, double t,
                                       int panels, const Path& path) {
  TriangleMoments g;
  g.t = t;
  if (terms.empty() || t == 0.0) return g;

  const GaussRule& rule = gauss16();
  const int P = panels;
  const std::size_t nj = terms.size();
  const double width = t / P;

  // per-panel trig moments: [panel][mode] for each of z·cos, z·sin, y·cos, y·sin
  std::vector<double> zc(P * nj), zs(P * nj), yc(P * nj), ys(P * nj);
  // node caches reused by the diagonal pass
  std::vector<double> node_x(P * kGaussOrder), node_w(P * kGaussOrder);
  std::vector<double> node_z(P * kGaussOrder), node_y(P * kGaussOrder);

  for (int p = 0; p < P; ++p) {
    const double a = p * width, c = a + 0.5 * width, r = 0.5 * width;
    for (int i = 0; i < kGaussOrder; ++i) {
      const std::size_t ni = static_cast<std::size_t>(p) * kGaussOrder + i;
      const double x = c + r * rule.node[i];
      const double w = r * rule.weight[i];
      double zv = 0.0, yv = 0.0;
      path(x, zv, yv);
      node_x[ni] = x;
      node_w[ni] = w;
      node_z[ni] = zv;
      node_y[ni] = yv;
      for (std::size_t j = 0; j < nj; ++j) {
        const double cs = std::cos(terms[j].omega * x), sn = std::sin(terms[j].omega * x);
        zc[p * nj + j] += w * zv * cs;
        zs[p * nj + j] += w * zv * sn;
        yc[p * nj + j] += w * yv * cs;
        ys[p * nj + j] += w * yv * sn;
      }
    }
  }

  // strictly sub-diagonal panel pairs (p < q): full product blocks
  for (std::size_t j = 0; j < nj; ++j) {
    const double wj = terms[j].weight;
    double pzc = 0.0, pzs = 0.0, pyc = 0.0, pys = 0.0;  // prefix sums over p < q
    for (int q = 0; q < P; ++q) {
      const double qzc = zc[q * nj + j], qzs = zs[q * nj + j];
      const double qyc = yc[q * nj + j], qys = ys[q * nj + j];
      g.zz += wj * (qzc * pzc + qzs * pzs);
      g.zy += wj * (qyc * pzc + qys * pzs);
      g.yz += wj * (qzc * pyc + qzs * pys);
      g.yy += wj * (qyc * pyc + qys * pys);
      pzc += qzc;
      pzs += qzs;
      pyc += qyc;
      pys += qys;
    }
  }

  // diagonal panels: outer node σ' from the cached values, fresh inner rule
  // on [panel start, σ']
  for (int p = 0; p < P; ++p) {
    const double a = p * width;
    for (int o = 0; o < kGaussOrder; ++o) {
      const std::size_t no = static_cast<std::size_t>(p) * kGaussOrder + o;
      const double sp = node_x[no], wo = node_w[no];
      const double ci = 0.5 * (a + sp), ri = 0.5 * (sp - a);
      double inner_z = 0.0, inner_y = 0.0;
      for (int i = 0; i < kGaussOrder; ++i) {
        const double x = ci + ri * rule.node[i];
        const double wi = ri * rule.weight[i];
        double zv = 0.0, yv = 0.0;
        path(x, zv, yv);
        double kr = 0.0;
        for (std::size_t j = 0; j < nj; ++j)
          kr += terms[j].weight * std::cos(terms[j].omega * (sp - x));
        inner_z += wi * zv * kr;
        inner_y += wi * yv * kr;
      }
      g.zz += wo * node_z[no] * inner_z;
      g.zy += wo * node_y[no] * inner_z;
      g.yz += wo * node_z[no] * inner_y;
      g.yy += wo * node_y[no] * inner_y;
    }
  }
  return g;
}

}  // namespace detail

inline constexpr double kTriangleRefineTol = 1e-8;  // successive-refinement agreement

// adaptive driver: panel width starts at one eighth of the fastest period
// present (kernel modes and path content both counted via f_path), then panel
// counts double until two successive levels agree
template <class Path>
TriangleMoments triangle_moments(const EnvironmentSpec& env, double hbar, double t,
                                 double f_path, const Path& path) {
  if (!(t >= 0.0)) throw std::invalid_argument("triangle_moments: t must be nonnegative");
  const auto terms = detail::kernel_terms(env, hbar);
  TriangleMoments zero;
  zero.t = t;
  if (terms.empty() || t == 0.0) return zero;

  double f = f_path;
  for (const auto& term : terms) f = std::max(f, term.omega);
  f = std::max(f, 1e-12);

  const double panel_estimate = std::ceil(t * f * 8.0 / (2.0 * M_PI));
  if (!(panel_estimate < 2e6))
    throw QuadratureStall(
        "triangle_moments: horizon × frequency product needs an unreasonable panel count");
  int panels = std::max(1, static_cast<int>(panel_estimate));
  TriangleMoments coarse = detail::triangle_moments_level(terms, t, panels, path);
  for (int attempt = 0; attempt < 3; ++attempt) {
    panels *= 2;
    const TriangleMoments fine = detail::triangle_moments_level(terms, t, panels, path);
    const double scale = std::max({std::abs(fine.zz), std::abs(fine.zy), std::abs(fine.yz),
                                   std::abs(fine.yy), 1e-300});
    const bool ok = std::abs(fine.zz - coarse.zz) <= kTriangleRefineTol * scale &&
                    std::abs(fine.zy - coarse.zy) <= kTriangleRefineTol * scale &&
                    std::abs(fine.yz - coarse.yz) <= kTriangleRefineTol * scale &&
                    std::abs(fine.yy - coarse.yy) <= kTriangleRefineTol * scale;
    if (ok) return fine;
    coarse = fine;
  }
  throw QuadratureStall("triangle_moments: refinement failed to settle in three doublings");
}

// path sampler over the exact modal solution: a = Z, b companion Y = Ż
struct ExactPath {
  const ModalDecomposition* md;
  void operator()(double tau, double& zv, double& yv) const {
    const ZEval e = z_exact(*md, tau);
    zv = e.z;
    yv = e.zdot;
  }
  double resolve_frequency() const {
    double f = md->nus.empty() ? 0.0 : md->nus.back();
    return std::max(f, md->mu0);
  }
};

inline TriangleMoments g_moments_exact(const ModalDecomposition& md, const EnvironmentSpec& env,
                                       double hbar, double t) {
  const ExactPath path{&md};
  return triangle_moments(env, hbar, t, path.resolve_frequency(), path);
}

// ----------------------------------------------------------------------------
// χ integrals, the propagator-basis view of the same moments
//
//   χ_ij(t) = ∬_{0≤τ'≤τ≤t} v_i(τ) K_R(τ−τ') v_j(τ'),  v_1(τ) = u_2(t−τ),
//   v_2(τ) = u_1(t−τ).  Substituting σ = t−τ maps them onto the G moments:
//
//   χ11 = G_zz/Z_t²,   χ12 = (G_zy − c·G_zz)/Z_t,   χ21 = (G_yz − c·G_zz)/Z_t,
//   χ22 = G_yy − c(G_zy + G_yz) + c²G_zz,           c = Ż_t/Z_t.
// ----------------------------------------------------------------------------

inline double chi(const ModalDecomposition& md, const SystemParams& sys,
                  const EnvironmentSpec& env, double t, int i, int j) {
  if ((i != 1 && i != 2) || (j != 1 && j != 2))
    throw std::invalid_argument("chi: indices must be 1 or 2");
  const PropagatorBasis pb = propagator_basis(md, t);  // rejects caustic horizons
  const TriangleMoments g = g_moments_exact(md, env, sys.hbar, t);
  const double c = pb.zdot_t / pb.zt;
  if (i == 1 && j == 1) return g.zz / (pb.zt * pb.zt);
  if (i == 1 && j == 2) return (g.zy - c * g.zz) / pb.zt;
  if (i == 2 && j == 1) return (g.yz - c * g.zz) / pb.zt;
  return g.yy - c * (g.zy + g.yz) + c * c * g.zz;
}

inline NoiseIntegrals noise_integrals(const ModalDecomposition& md, const SystemParams& sys,
                                      const EnvironmentSpec& env, double t) {
  const PropagatorBasis pb = propagator_basis(md, t);
  const TriangleMoments g = g_moments_exact(md, env, sys.hbar, t);
  const double c = pb.zdot_t / pb.zt;
  NoiseIntegrals ni;
  ni.t = t;
  ni.chi11 = g.zz / (pb.zt * pb.zt);
  ni.chi12_plus_21 = (g.zy + g.yz - 2.0 * c * g.zz) / pb.zt;
  ni.chi22 = g.yy - c * (g.zy + g.yz) + c * c * g.zz;
  return ni;
}

// ----------------------------------------------------------------------------
// additive noise covariance
//
// In the (x, p) covariance the Z_t denominators cancel algebraically:
//
//   n_xx = (2ħ/M²)·G_zz,  n_xp = (ħ/M)·(G_zy + G_yz),  n_pp = 2ħ·G_yy.
//
// The matrix is ħ times the Gram form of (Z/M, Y) under the positive kernel
// ∬ f K_R g over the full square, hence positive semidefinite for any path.
// ----------------------------------------------------------------------------

inline Eigen::Matrix2d noise_matrix_from_moments(const TriangleMoments& g, double hbar,
                                                 double M) {
  Eigen::Matrix2d n;
  n(0, 0) = 2.0 * hbar / (M * M) * g.zz;
  n(0, 1) = n(1, 0) = hbar / M * (g.zy + g.yz);
  n(1, 1) = 2.0 * hbar * g.yy;
  return n;
}

inline Eigen::Matrix2d noise_covariance(const ModalDecomposition& md, const SystemParams& sys,
                                        const EnvironmentSpec& env, double t) {
  propagator_basis(md, t);  // keep the caustic contract of the χ route
  const TriangleMoments g = g_moments_exact(md, env, sys.hbar, t);
  return noise_matrix_from_moments(g, sys.hbar, sys.M);
}

}  // namespace fewmode
