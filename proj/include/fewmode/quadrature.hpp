// quadrature.hpp — fixed-order Gauss–Legendre rule and an adaptive panel integrator
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fewmode {

struct QuadratureStall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kGaussOrder = 16;

struct GaussRule {
  std::array<double, kGaussOrder> node;    // abscissae on [-1, 1]
  std::array<double, kGaussOrder> weight;  // matching weights
};

// nodes of the order-16 rule as roots of the Legendre polynomial, found by
// Newton iteration from the Chebyshev initial guess (standard construction)
inline const GaussRule& gauss16() {
  static const GaussRule rule = [] {
    GaussRule r{};
    const int n = kGaussOrder;
    for (int k = 0; k < n; ++k) {
      double x = std::cos(M_PI * (k + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        // recurrence for P_n(x) and P'_n(x)
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
          const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      r.node[k] = x;
      r.weight[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
  }();
  return rule;
}

// single-panel integral of f over [a, b]
template <class F>
double gauss16_panel(const F& f, double a, double b) {
  const GaussRule& r = gauss16();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < kGaussOrder; ++i) acc += r.weight[i] * f(c + h * r.node[i]);
  return acc * h;
}

namespace detail {

template <class F>
double adaptive_panel(const F& f, double a, double b, double whole, double rel_tol,
                      double abs_floor, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gauss16_panel(f, a, mid);
  const double right = gauss16_panel(f, mid, b);
  const double refined = left + right;
  // Locally relative acceptance: a narrow feature deep in the tree is judged
  // against its own contribution, so the total error stays within rel_tol of
  // the L1 mass instead of demanding absolute accuracy that roundoff forbids.
  const double tol = rel_tol * std::abs(refined) + abs_floor;
  if (std::abs(refined - whole) <= tol || b - a < 1e-14 * std::abs(mid)) return refined;
  if (depth <= 0)
    throw QuadratureStall("adaptive quadrature failed to converge within the depth budget");
  return adaptive_panel(f, a, mid, left, rel_tol, abs_floor, depth - 1) +
         adaptive_panel(f, mid, b, right, rel_tol, abs_floor, depth - 1);
}

}  // namespace detail

// adaptive bisected Gauss–Legendre integration to a relative tolerance
// (scaled by the first whole-interval estimate, with an absolute fallback
// floor for integrals near zero)
template <class F>
double integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-10,
                          double abs_floor = 1e-300, int max_depth = 48) {
  if (!(b >= a)) throw std::invalid_argument("integrate_adaptive: bad interval");
  if (a == b) return 0.0;
  const double whole = gauss16_panel(f, a, b);
  return detail::adaptive_panel(f, a, b, whole, rel_tol, abs_floor, max_depth);
}

}  // namespace fewmode
