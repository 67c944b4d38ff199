#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include "wigner/errors.hpp"

namespace wigner {

// A point u + iv in the upper half plane.
struct SpectralPoint {
  double u = 0.0;
  double v = 0.0;
  std::complex<double> z() const { return {u, v}; }
};

// Rectangle |u| <= u0, A0/n <= v <= V where spectral statistics are evaluated.
struct DomainD {
  double u0 = 2.0;
  double V = 1.0;
  double A0 = 8.0;

  double v_floor(int n) const { return A0 / static_cast<double>(n); }
  bool contains(int n, SpectralPoint p) const {
    return std::abs(p.u) <= u0 && p.v >= v_floor(n) && p.v <= V;
  }
};

namespace semicircle {

inline constexpr double kPi = 3.14159265358979323846;

// Principal square root flipped onto the closed upper half plane; real
// nonnegative on the nonnegative reals.
inline std::complex<double> sqrt_upper(std::complex<double> w) {
  auto r = std::sqrt(w);
  if (r.imag() < 0.0) r = -r;
  return r;
}

inline double density(double x) {
  if (std::abs(x) >= 2.0) return 0.0;
  return std::sqrt(4.0 - x * x) / (2.0 * kPi);
}

inline double cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * kPi) + std::asin(0.5 * x) / kPi;
}

// s(z) = -z/2 + sqrt(z^2/4 - 1), branch with positive imaginary part.
inline std::complex<double> stieltjes(std::complex<double> z) {
  if (!(z.imag() > 0.0)) throw ArgumentError("stieltjes: requires Im z > 0");
  return -0.5 * z + sqrt_upper(0.25 * z * z - 1.0);
}

// b(z) = z + 2 s(z) = 2 sqrt(z^2/4 - 1).
inline std::complex<double> b_of_z(std::complex<double> z) {
  if (!(z.imag() > 0.0)) throw ArgumentError("b_of_z: requires Im z > 0");
  return 2.0 * sqrt_upper(0.25 * z * z - 1.0);
}

// Distance of u to the spectral edges {-2, 2}.
inline double gamma_edge(double u) { return std::abs(std::abs(u) - 2.0); }

// Exact k-th moment: the Catalan number C_{k/2} for even k, zero for odd.
inline std::uint64_t moment(int k) {
  if (k < 0 || k > 60) throw ArgumentError("moment: order must be in [0, 60]");
  if (k % 2 == 1) return 0;
  unsigned __int128 c = 1;
  for (int m = 1; m <= k / 2; ++m) {
    c = c * (2 * (2 * m - 1));
    c = c / (m + 1);
  }
  return static_cast<std::uint64_t>(c);
}

// Root of cdf(x) = q by bracketed Newton, absolute tolerance 1e-12. Levels
// below 0.01 (above 0.99) are seeded from the two-term edge expansion
// cdf(-2+S) ~ (2/(3 pi)) S^(3/2) (1 - 3S/40).
inline double quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw ArgumentError("quantile: level must be in (0,1)");
  if (q == 0.5) return 0.0;
  // Work on the left half by symmetry.
  const bool flip = q > 0.5;
  const double ql = flip ? 1.0 - q : q;

  double x;
  if (ql < 0.01) {
    double s0 = std::pow(1.5 * kPi * ql, 2.0 / 3.0);
    x = -2.0 + s0 * (1.0 + s0 / 20.0);
  } else {
    x = -2.0 + 4.0 * ql;  // crude but always inside the bracket
  }
  double lo = -2.0, hi = 0.0;
  for (int it = 0; it < 200; ++it) {
    double g = cdf(x) - ql;
    if (g > 0.0) hi = x; else lo = x;
    double d = density(x);
    double step = d > 1e-18 ? g / d : 0.0;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= 1e-13 && std::abs(g) <= 1e-13) {
      x = xn;
      break;
    }
    x = xn;
  }
  return flip ? -x : x;
}

}  // namespace semicircle
}  // namespace wigner
