#pragma once

// Eigenvalue-side statistics: decomposition with always-on sanity guards,
// counting, empirical Stieltjes transform, Kolmogorov distance to the
// semicircle law, Lindeberg ratios, rigidity residuals, delocalization and
// short-scale density estimates.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "wigner/ensemble.hpp"
#include "wigner/errors.hpp"
#include "wigner/io.hpp"
#include "wigner/semicircle.hpp"

namespace wigner {

struct SpectralDecomposition {
  int n = 0;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalue order
};

namespace detail {

inline void check_sorted(const Eigen::VectorXd& lam, std::uint64_t seed) {
  for (Eigen::Index j = 1; j < lam.size(); ++j)
    if (!(lam(j) >= lam(j - 1)))
      throw NumericError("eigenvalues not sorted (seed " + std::to_string(seed) +
                         ")");
}

inline void check_trace(const Eigen::VectorXd& lam, const Eigen::MatrixXd& W,
                        std::uint64_t seed) {
  const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * static_cast<double>(W.rows()) * scale;
  if (std::abs(lam.sum() - W.trace()) > tol)
    throw NumericError("eigenvalue sum drifts from trace (seed " +
                       std::to_string(seed) + ")");
}

}  // namespace detail

// Full decomposition. Verifies orthonormality and reconstruction before
// returning; failures indicate a corrupted input rather than a tolerance
// issue, so they throw.
inline SpectralDecomposition decompose(const WignerSample& s) {
  const int n = s.spec.n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.W);
  if (es.info() != Eigen::Success)
    throw NumericError("eigensolver failed (n " + std::to_string(n) + ", seed " +
                       std::to_string(s.seed) + ")");
  SpectralDecomposition dec{n, es.eigenvalues(), es.eigenvectors()};
  detail::check_sorted(dec.eigenvalues, s.seed);
  detail::check_trace(dec.eigenvalues, s.W, s.seed);
  const Eigen::MatrixXd& U = dec.eigenvectors;
  const double orth =
      (U.transpose() * U - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (orth > 1e-9)
    throw NumericError("eigenvector orthonormality off by " +
                       fmt_double(orth) + " (seed " + std::to_string(s.seed) + ")");
  const double lam_max = dec.eigenvalues.cwiseAbs().maxCoeff();
  const double rec =
      (U * dec.eigenvalues.asDiagonal() * U.transpose() - s.W).cwiseAbs().maxCoeff();
  if (rec > 1e-8 * std::max(lam_max, 1.0))
    throw NumericError("spectral reconstruction off by " + fmt_double(rec) +
                       " (seed " + std::to_string(s.seed) + ")");
  return dec;
}

// Eigenvalues only; cheaper guards (sortedness and trace preservation).
inline Eigen::VectorXd eigenvalues_of(const WignerSample& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.W, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("eigensolver failed (n " + std::to_string(s.spec.n) +
                       ", seed " + std::to_string(s.seed) + ")");
  Eigen::VectorXd lam = es.eigenvalues();
  detail::check_sorted(lam, s.seed);
  detail::check_trace(lam, s.W, s.seed);
  return lam;
}

// Number of eigenvalues in the closed interval [a,b]. Input must be sorted.
inline long counting(const Eigen::VectorXd& lam, double a, double b) {
  if (a > b) throw ArgumentError("counting interval has a > b");
  const double* begin = lam.data();
  const double* end = begin + lam.size();
  return std::upper_bound(begin, end, b) - std::lower_bound(begin, end, a);
}

// m_n(z) = (1/n) sum_j 1/(lambda_j - z) for nonreal z.
inline std::complex<double> stieltjes_empirical(const Eigen::VectorXd& lam,
                                                std::complex<double> z) {
  if (z.imag() == 0.0)
    throw ArgumentError("empirical stieltjes transform needs nonreal z");
  std::complex<double> acc = 0.0;
  for (Eigen::Index j = 0; j < lam.size(); ++j) acc += 1.0 / (lam(j) - z);
  return acc / static_cast<double>(lam.size());
}

// sup_x |F_n(x) - G(x)| via the jump formula: the supremum of the difference
// against a continuous cdf is attained at the eigenvalues, from above or
// below. Input must be sorted.
inline double kolmogorov_distance_to_semicircle(const Eigen::VectorXd& lam) {
  const auto n = lam.size();
  double best = 0.0;
  for (Eigen::Index j = 1; j <= n; ++j) {
    const double g = semicircle::cdf(lam(j - 1));
    best = std::max(best, std::abs(static_cast<double>(j) / n - g));
    best = std::max(best, std::abs(static_cast<double>(j - 1) / n - g));
  }
  return best;
}

// (1/n^2) sum_{j,k} X_jk^2 1[|X_jk| >= tau sqrt(n)] over the full index
// square, with X = sqrt(n) W.
inline double lindeberg_ratio(const WignerSample& s, double tau) {
  if (tau < 0.0) throw ArgumentError("lindeberg threshold must be >= 0");
  const int n = s.spec.n;
  const double root_n = std::sqrt(static_cast<double>(n));
  const double cut = tau * root_n;
  double acc = 0.0;
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      const double x = s.W(j, k) * root_n;
      if (std::abs(x) >= cut) acc += (j == k ? 1.0 : 2.0) * x * x;
    }
  return acc / (static_cast<double>(n) * n);
}

// Classical location of the j-th eigenvalue: the j/n quantile, with the top
// location clamped to the spectral edge.
inline double classical_location(int j, int n) {
  if (j < 1 || j > n) throw ArgumentError("classical location index out of range");
  return j < n ? semicircle::quantile(static_cast<double>(j) / n) : 2.0;
}

struct RigidityResult {
  int n = 0;
  Eigen::VectorXd lambda;
  Eigen::VectorXd gamma;
  Eigen::VectorXd residual;    // lambda_j - gamma_j
  Eigen::VectorXd normalized;  // residual * n^{2/3} min(j, n-j+1)^{1/3}
  double max_normalized = 0.0;
  int argmax_j = 0;        // 1-based index attaining the maximum
  bool edge_included = false;  // whether j = n entered the maximum
};

inline RigidityResult rigidity_residuals(const Eigen::VectorXd& lam,
                                         bool include_edge = false) {
  const int n = static_cast<int>(lam.size());
  if (n < 1) throw ArgumentError("rigidity needs a nonempty spectrum");
  RigidityResult r;
  r.n = n;
  r.lambda = lam;
  r.gamma.resize(n);
  r.residual.resize(n);
  r.normalized.resize(n);
  r.edge_included = include_edge;
  const double n23 = std::pow(static_cast<double>(n), 2.0 / 3.0);
  for (int j = 1; j <= n; ++j) {
    r.gamma(j - 1) = classical_location(j, n);
    r.residual(j - 1) = lam(j - 1) - r.gamma(j - 1);
    r.normalized(j - 1) =
        r.residual(j - 1) * n23 *
        std::cbrt(static_cast<double>(std::min(j, n - j + 1)));
  }
  const int top = include_edge ? n : std::max(1, n - 1);
  for (int j = 1; j <= top; ++j) {
    const double a = std::abs(r.normalized(j - 1));
    if (a > r.max_normalized || r.argmax_j == 0) {
      r.max_normalized = a;
      r.argmax_j = j;
    }
  }
  return r;
}

// n max_{j,k} |u_jk|^2: order one for delocalized eigenvectors, order n for
// localized ones.
inline double delocalization_stat(const SpectralDecomposition& dec) {
  const double m = dec.eigenvectors.cwiseAbs().maxCoeff();
  return static_cast<double>(dec.n) * m * m;
}

// Eigenvalue count in the window x +- xi/(2n), per unit of xi. Input must be
// sorted.
inline double short_scale_density(const Eigen::VectorXd& lam, double x,
                                  double xi) {
  if (xi <= 0.0) throw ArgumentError("short scale window must be positive");
  const double half = xi / (2.0 * static_cast<double>(lam.size()));
  return static_cast<double>(counting(lam, x - half, x + half)) / xi;
}

// (1/n) sum_j lambda_j^k.
inline double esd_moment(const Eigen::VectorXd& lam, int k) {
  if (k < 0) throw ArgumentError("moment order must be >= 0");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < lam.size(); ++j) acc += std::pow(lam(j), k);
  return acc / static_cast<double>(lam.size());
}

inline void write_spectrum_csv(const std::string& path, std::uint64_t seed,
                               const Eigen::VectorXd& lam) {
  CsvWriter w(path);
  w.row({"seed", "n", "j", "lambda"});
  const auto n = lam.size();
  for (Eigen::Index j = 1; j <= n; ++j)
    w.row({std::to_string(seed), std::to_string(n), std::to_string(j),
           fmt_double(lam(j - 1))});
}

inline void write_rigidity_csv(const std::string& path, std::uint64_t seed,
                               const RigidityResult& r) {
  CsvWriter w(path);
  w.row({"seed", "n", "j", "lambda", "gamma", "residual", "normalized"});
  for (int j = 1; j <= r.n; ++j)
    w.row({std::to_string(seed), std::to_string(r.n), std::to_string(j),
           fmt_double(r.lambda(j - 1)), fmt_double(r.gamma(j - 1)),
           fmt_double(r.residual(j - 1)), fmt_double(r.normalized(j - 1))});
}

}  // namespace wigner
