// charpoly.hpp — hybrid-frequency polynomial: evaluation, root isolation, modal amplitudes
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fewmode/model.hpp"

namespace fewmode {

// ----------------------------------------------------------------------------
// errors
// ----------------------------------------------------------------------------

struct BracketFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BalanceAmbiguity : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateRoots : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ----------------------------------------------------------------------------
// scaled product arithmetic (mantissa + power-of-two exponent), so factor
// products stay representable for several hundred modes
// ----------------------------------------------------------------------------

struct ScaledReal {
  double mant = 0.0;
  long exp2 = 0;

  static ScaledReal one() { return {1.0, 0}; }

  void normalize() {
    if (mant == 0.0 || !std::isfinite(mant)) {
      exp2 = 0;
      return;
    }
    int e = 0;
    mant = std::frexp(mant, &e);
    exp2 += e;
  }
  void mul(double f) {
    mant *= f;
    normalize();
  }
  void mul(const ScaledReal& o) {
    mant *= o.mant;
    exp2 += o.exp2;
    normalize();
  }
  void div(const ScaledReal& o) {
    mant /= o.mant;
    exp2 -= o.exp2;
    normalize();
  }
  void add(const ScaledReal& o) {
    if (o.mant == 0.0) return;
    if (mant == 0.0) {
      *this = o;
      return;
    }
    const long shift = o.exp2 - exp2;
    if (shift > 1060) {
      *this = o;  // our term is negligible
    } else if (shift >= -1060) {
      mant += std::ldexp(o.mant, static_cast<int>(shift));
    }
    normalize();
  }
  double value() const {
    if (mant == 0.0) return 0.0;
    if (exp2 > 1800) return mant > 0 ? HUGE_VAL : -HUGE_VAL;
    if (exp2 < -1800) return 0.0;
    return std::ldexp(mant, static_cast<int>(exp2));
  }
  int sign() const { return mant > 0.0 ? 1 : (mant < 0.0 ? -1 : 0); }
};

// ----------------------------------------------------------------------------
// polynomial evaluation, s = nu^2
//
//   P0(s) = M (Omega^2 - s) prod_i (omega_i^2 - s)
//           - sum_k (C_k^2/m) prod_{i != k} (omega_i^2 - s)
//
// Evaluated in product form: the sign is exact even at s = omega_i^2, where
// every term carrying the vanishing factor drops out identically.
// ----------------------------------------------------------------------------

inline ScaledReal eval_P0_scaled(const SystemParams& sys, const EnvironmentSpec& env, double s) {
  const std::size_t n = env.n_modes();
  ScaledReal total{0.0, 0};

  // factors f_i = omega_i^2 - s
  std::vector<double> f(n);
  std::size_t zero_count = 0, zero_idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = env.omegas[i] * env.omegas[i] - s;
    if (f[i] == 0.0) {
      ++zero_count;
      zero_idx = i;
    }
  }

  if (zero_count >= 2) return total;  // two vanishing factors kill every term

  if (zero_count == 1) {
    // only the k = zero_idx sum term survives
    ScaledReal t = ScaledReal::one();
    for (std::size_t i = 0; i < n; ++i)
      if (i != zero_idx) t.mul(f[i]);
    const double c = env.couplings[zero_idx];
    t.mul(-c * c / env.m);
    return t;
  }

  ScaledReal all = ScaledReal::one();
  for (std::size_t i = 0; i < n; ++i) all.mul(f[i]);

  ScaledReal lead = all;
  lead.mul(sys.M * (sys.Omega * sys.Omega - s));
  total.add(lead);

  for (std::size_t k = 0; k < n; ++k) {
    const double c = env.couplings[k];
    if (c == 0.0) continue;
    ScaledReal t = all;
    t.div(ScaledReal{f[k], 0});
    t.mul(-c * c / env.m);
    total.add(t);
  }
  return total;
}

inline double eval_P0(const SystemParams& sys, const EnvironmentSpec& env, double nu_sq) {
  return eval_P0_scaled(sys, env, nu_sq).value();
}

// ----------------------------------------------------------------------------
// modal decomposition result
// ----------------------------------------------------------------------------

struct ModalDecomposition {
  RegimeClass regime;
  std::vector<double> nus;   // positive real roots, ascending
  std::vector<double> amps;  // amplitude of sin(nu_k tau)/nu_k, aligned with nus
  double mu0 = 0.0;          // imaginary-axis root magnitude (Unstable only)
  double amp_growth = 0.0;   // amplitude of sinh(mu0 tau)/mu0 (Unstable only)
  double linear_coef = 0.0;  // coefficient of the tau term (Critical only)
  double omega_max = 0.0;    // largest environment frequency (plumbing for quadrature)
};

namespace detail {

// compact form q(s) = (Omega^2 - s) - (1/(M m)) sum C_k^2/(omega_k^2 - s).
// Inside each open interval between poles, sign changes of q coincide with
// sign changes of P0 (they differ by the fixed-sign factor M prod(omega^2-s)).
struct CompactPoly {
  double Omega2;
  double Mm;
  const std::vector<double>* w2;  // active squared frequencies
  const std::vector<double>* c2;  // active squared couplings

  double operator()(double s) const {
    double acc = Omega2 - s;
    for (std::size_t i = 0; i < w2->size(); ++i) acc -= (*c2)[i] / (Mm * ((*w2)[i] - s));
    return acc;
  }
};

// bisection with a guarded secant step; q(lo) > 0 > q(hi) is maintained.
inline double refine_root(const CompactPoly& q, double lo, double hi, double qlo, double qhi,
                          double tol_rel) {
  while (true) {
    const double width = hi - lo;
    if (width <= tol_rel * std::max(std::abs(lo), std::abs(hi))) break;
    if (!(std::nextafter(lo, hi) < hi)) break;  // bracket exhausted in doubles

    double mid = 0.5 * (lo + hi);
    if (qlo > qhi) {  // secant only when it lands strictly inside
      const double sec = lo + qlo * (hi - lo) / (qlo - qhi);
      if (sec > lo + 0.25 * width * 1e-3 && sec < hi - 0.25 * width * 1e-3) {
        // alternate secant and bisection to keep worst-case convergence
        mid = 0.5 * (mid + sec);
      }
    }
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double qm = q(mid);
    if (qm > 0.0) {
      lo = mid;
      qlo = qm;
    } else if (qm < 0.0) {
      hi = mid;
      qhi = qm;
    } else {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

// walk the probe toward a pole of q until the expected sign appears
inline double approach_pole(const CompactPoly& q, double pole, double probe, bool want_positive,
                            double* qval) {
  for (int it = 0; it < 2000; ++it) {
    const double v = q(probe);
    if (want_positive ? v > 0.0 : v < 0.0) {
      *qval = v;
      return probe;
    }
    const double next = 0.5 * (probe + pole);
    if (!(std::abs(next - pole) < std::abs(probe - pole))) {
      // cannot get closer in doubles; treat the probe as on-root
      *qval = want_positive ? 1.0 : -1.0;
      return probe;
    }
    probe = next;
  }
  throw BracketFailure("root bracketing could not reach the expected sign near a pole");
}

}  // namespace detail

// ----------------------------------------------------------------------------
// root isolation
// ----------------------------------------------------------------------------

inline constexpr double kRootTol = 1e-12;  // relative bracket width in s = nu^2

inline ModalDecomposition isolate_roots(const SystemParams& sys, const EnvironmentSpec& env,
                                        double tol_rel = kRootTol,
                                        std::optional<Regime> forced = std::nullopt) {
  sys.validate();
  env.validate();
  if (!(tol_rel > 0.0) || tol_rel >= 1e-3)
    throw std::invalid_argument("isolate_roots: tol_rel must lie in (0, 1e-3)");

  ModalDecomposition md;
  md.omega_max = env.n_modes() ? env.omegas.back() : 0.0;

  // regime, with the forced-label handshake
  const RegimeClass rc = classify_regime(sys, env);
  md.regime = rc;
  if (forced) {
    if (rc.label == Regime::Critical && *forced != Regime::Critical)
      throw BalanceAmbiguity("binding and spectral strengths balance within tolerance; "
                             "cannot honor a non-critical regime request");
    if (rc.label != Regime::Critical && *forced != rc.label)
      throw std::invalid_argument("isolate_roots: requested regime contradicts classification");
    md.regime.label = *forced;
  }

  // split decoupled modes off: a mode with C_k = 0 contributes the exact root
  // nu = omega_k with zero amplitude and cancels out of every other factor
  std::vector<double> w2, c2, passive;
  for (std::size_t k = 0; k < env.n_modes(); ++k) {
    if (env.couplings[k] == 0.0)
      passive.push_back(env.omegas[k]);
    else {
      w2.push_back(env.omegas[k] * env.omegas[k]);
      c2.push_back(env.couplings[k] * env.couplings[k]);
    }
  }
  const std::size_t na = w2.size();

  const detail::CompactPoly q{sys.Omega * sys.Omega, sys.M * env.m, &w2, &c2};

  std::vector<double> roots_s;  // roots with s > 0, ascending

  if (na == 0) {
    roots_s.push_back(sys.Omega * sys.Omega);  // fully decoupled: bare trap frequency
    md.regime.label = Regime::Bounded;         // (strength sum is zero)
  } else {
    const double s_top_scale = std::max(w2.back(), sys.Omega * sys.Omega);

    // lowest root, only in the bounded regime: s in (0, w2[0])
    if (md.regime.label == Regime::Bounded) {
      double qlo = q(0.0);
      if (!(qlo > 0.0))
        throw BracketFailure("compact polynomial not positive at s = 0 in bounded regime");
      double qhi = 0.0;
      const double hi = detail::approach_pole(q, w2[0], w2[0] * (1.0 - 1e-6), false, &qhi);
      roots_s.push_back(detail::refine_root(q, 0.0, hi, qlo, qhi, tol_rel));
    }

    if (md.regime.label == Regime::Unstable) {
      // purely imaginary root nu = i mu0: g(y) = q(-y^2) is increasing, g(0) < 0
      const auto g = [&](double y) { return q(-y * y); };
      double y_hi = std::sqrt(s_top_scale);
      double g_hi = g(y_hi);
      int doublings = 0;
      while (!(g_hi > 0.0)) {
        y_hi *= 2.0;
        g_hi = g(y_hi);
        if (++doublings > 60)
          throw BracketFailure("no sign change found for the imaginary-axis root");
      }
      // refine on y with g increasing: g(lo) < 0 < g(hi)
      double lo = 0.0, hi = y_hi, glo = g(0.0);
      while (hi - lo > tol_rel * hi && std::nextafter(lo, hi) < hi) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm < 0.0) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      (void)glo;
      md.mu0 = 0.5 * (lo + hi);
    }

    // interior roots: one in each (w2[n], w2[n+1])
    for (std::size_t n = 0; n + 1 < na; ++n) {
      const double gap = w2[n + 1] - w2[n];
      double qlo = 0.0, qhi = 0.0;
      const double lo = detail::approach_pole(q, w2[n], w2[n] + 1e-6 * gap, true, &qlo);
      const double hi = detail::approach_pole(q, w2[n + 1], w2[n + 1] - 1e-6 * gap, false, &qhi);
      roots_s.push_back(detail::refine_root(q, lo, hi, qlo, qhi, tol_rel));
    }

    // top root: above the largest environment frequency
    {
      double qlo = 0.0;
      const double lo =
          detail::approach_pole(q, w2.back(), w2.back() * (1.0 + 1e-6), true, &qlo);
      double hi = 2.0 * s_top_scale;
      double qhi = q(hi);
      int doublings = 0;
      while (!(qhi < 0.0)) {
        hi *= 2.0;
        qhi = q(hi);
        if (++doublings > 60)
          throw BracketFailure("no sign change found above the largest mode frequency");
      }
      roots_s.push_back(detail::refine_root(q, lo, hi, qlo, qhi, tol_rel));
    }
  }

  std::sort(roots_s.begin(), roots_s.end());
  md.nus.reserve(roots_s.size() + passive.size());
  for (double s : roots_s) md.nus.push_back(std::sqrt(s));

  // near-duplicate guard on the coupled roots (in nu)
  for (std::size_t k = 0; k + 1 < md.nus.size(); ++k)
    if (md.nus[k + 1] - md.nus[k] <= 8.0 * tol_rel * md.nus[k + 1])
      throw DegenerateRoots("two hybrid frequencies coincide within 8x the root tolerance");

  // decoupled modes rejoin as zero-amplitude roots
  for (double w : passive) md.nus.push_back(w);
  std::sort(md.nus.begin(), md.nus.end());

  return md;
}

// ----------------------------------------------------------------------------
// modal amplitudes
//
// With the signed root list {s_0, s_1, ...} (s_0 = 0 when critical, -mu0^2 when
// unstable) the amplitude of every mode is the single expression
//
//   A_k = prod_i (omega_i^2 - s_k) / prod_{l != k} (s_l - s_k),
//
// which reduces to the per-regime forms (growth amplitude, linear coefficient,
// sine amplitudes) by inserting the corresponding s_0.
// ----------------------------------------------------------------------------

inline void amplitudes(const SystemParams& sys, const EnvironmentSpec& env,
                       ModalDecomposition& md) {
  (void)sys;

  // active squared frequencies (decoupled modes cancel out of the ratio)
  std::vector<double> w2_active;
  std::vector<char> passive_root(md.nus.size(), 0);
  for (std::size_t k = 0; k < env.n_modes(); ++k) {
    if (env.couplings[k] == 0.0) {
      // mark the matching root as passive (amplitude 0)
      double best = HUGE_VAL;
      std::size_t arg = 0;
      for (std::size_t l = 0; l < md.nus.size(); ++l) {
        const double d = std::abs(md.nus[l] - env.omegas[k]);
        if (d < best && !passive_root[l]) {
          best = d;
          arg = l;
        }
      }
      passive_root[arg] = 1;
    } else {
      w2_active.push_back(env.omegas[k] * env.omegas[k]);
    }
  }

  // signed root list
  std::vector<double> s_list;
  if (md.regime.label == Regime::Critical) s_list.push_back(0.0);
  if (md.regime.label == Regime::Unstable) s_list.push_back(-md.mu0 * md.mu0);
  for (std::size_t l = 0; l < md.nus.size(); ++l)
    if (!passive_root[l]) s_list.push_back(md.nus[l] * md.nus[l]);

  std::vector<double> amp(s_list.size(), 0.0);
  for (std::size_t k = 0; k < s_list.size(); ++k) {
    ScaledReal num = ScaledReal::one(), den = ScaledReal::one();
    for (double w2 : w2_active) num.mul(w2 - s_list[k]);
    for (std::size_t l = 0; l < s_list.size(); ++l)
      if (l != k) den.mul(s_list[l] - s_list[k]);
    num.div(den);
    amp[k] = num.value();
  }

  md.amps.assign(md.nus.size(), 0.0);
  md.linear_coef = 0.0;
  md.amp_growth = 0.0;
  std::size_t src = 0;
  if (md.regime.label == Regime::Critical) md.linear_coef = amp[src++];
  if (md.regime.label == Regime::Unstable) md.amp_growth = amp[src++];
  for (std::size_t l = 0; l < md.nus.size(); ++l)
    if (!passive_root[l]) md.amps[l] = amp[src++];
}

inline ModalDecomposition modal_decompose(const SystemParams& sys, const EnvironmentSpec& env,
                                          double tol_rel = kRootTol,
                                          std::optional<Regime> forced = std::nullopt) {
  ModalDecomposition md = isolate_roots(sys, env, tol_rel, forced);
  amplitudes(sys, env, md);
  return md;
}

}  // namespace fewmode
