#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

#include "wigner/errors.hpp"

namespace wigner {

// Adaptive Gauss-Kronrod 7-15 integration, bisecting until the local Kronrod
// error estimate meets the budgeted share of the absolute tolerance.

namespace detail {

// QUADPACK dqk15 nodes and weights on [-1,1].
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct GkEstimate {
  double kronrod;
  double err;
};

template <typename F>
GkEstimate gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * kXgk[i]);
    fv[14 - i] = f(c + h * kXgk[i]);
  }
  fv[7] = f(c);
  double k = kWgk[7] * fv[7];
  double g = kWg[3] * fv[7];
  for (int i = 0; i < 7; ++i) {
    k += kWgk[i] * (fv[i] + fv[14 - i]);
    if (i % 2 == 1) g += kWg[i / 2] * (fv[i] + fv[14 - i]);
  }
  k *= h;
  g *= h;
  return {k, std::abs(k - g)};
}

template <typename F>
double integrate_rec(const F& f, double a, double b, double tol, int depth) {
  auto e = gk15(f, a, b);
  if (e.err <= tol || depth >= 52) {
    if (depth >= 52 && e.err > 64.0 * tol) {
      throw NumericError("quadrature failed to converge on subinterval");
    }
    return e.kronrod;
  }
  const double c = 0.5 * (a + b);
  return integrate_rec(f, a, c, 0.5 * tol, depth + 1) +
         integrate_rec(f, c, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

// Integral of f over the finite interval [a, b] to absolute tolerance abs_tol.
template <typename F>
double integrate(const F& f, double a, double b, double abs_tol = 1e-12) {
  if (!(a <= b)) throw ArgumentError("integrate: requires a <= b");
  if (a == b) return 0.0;
  return detail::integrate_rec(f, a, b, abs_tol, 0);
}

// Integral of f over [a, inf) via x = a + t/(1-t). f must decay at infinity.
template <typename F>
double integrate_tail(const F& f, double a, double abs_tol = 1e-12) {
  auto g = [&](double t) {
    const double om = 1.0 - t;
    const double x = a + t / om;
    return f(x) / (om * om);
  };
  // The transformed integrand vanishes at t=1 for integrable tails; stop a
  // hair short of 1 to dodge the 0*inf evaluation.
  return detail::integrate_rec(g, 0.0, 1.0 - 1e-14, abs_tol, 0);
}

}  // namespace wigner
