#pragma once

// Resolvent-side machinery: R = (W - zI)^{-1} with always-on guards, minor
// resolvents R^(J), the row decomposition eps_1..eps_4, the quadratic form
// split eta_0, eta_1, eta_2, the self-consistency quantities T_n, Lambda_n,
// b_n, and validators that report every exact identity and inequality with
// numeric residuals or margins.
//
// Tolerance policy: identity residuals are O(machine eps / v) through the
// denominator conditioning, so base tolerances hold for v >= 0.1 and widen
// proportionally to 1/v below that. Inequality checks that are attained as
// equalities (columns sums, diagonal matrices) carry a 1e-10 roundoff
// allowance, scaled by the magnitude of the bound.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "wigner/ensemble.hpp"
#include "wigner/errors.hpp"
#include "wigner/io.hpp"
#include "wigner/rng.hpp"
#include "wigner/semicircle.hpp"
#include "wigner/spectral.hpp"

namespace wigner {

struct MinorResolvent {
  std::vector<int> removed;  // sorted original indices
  std::vector<int> kept;     // minor row -> original index
  Eigen::MatrixXcd R;
  std::complex<double> trace;
};

// Resolvent of the principal submatrix with rows/columns J deleted. |J| <= 2.
inline MinorResolvent minor_resolvent(const Eigen::MatrixXd& W,
                                      std::complex<double> z,
                                      std::vector<int> J) {
  if (z.imag() <= 0.0) throw ArgumentError("resolvent needs Im z > 0");
  const int n = static_cast<int>(W.rows());
  std::sort(J.begin(), J.end());
  if (J.size() > 2) throw ArgumentError("minor supports at most two removals");
  for (std::size_t i = 0; i < J.size(); ++i) {
    if (J[i] < 0 || J[i] >= n) throw ArgumentError("minor index out of range");
    if (i > 0 && J[i] == J[i - 1]) throw ArgumentError("minor index repeated");
  }
  MinorResolvent m;
  m.removed = J;
  m.kept.reserve(n - J.size());
  for (int k = 0; k < n; ++k)
    if (std::find(J.begin(), J.end(), k) == J.end()) m.kept.push_back(k);
  const int nm = static_cast<int>(m.kept.size());
  if (nm == 0) {
    m.R.resize(0, 0);
    m.trace = 0.0;
    return m;
  }
  Eigen::MatrixXcd A(nm, nm);
  for (int r = 0; r < nm; ++r)
    for (int c = 0; c < nm; ++c)
      A(r, c) = W(m.kept[r], m.kept[c]) - (r == c ? z : std::complex<double>(0));
  m.R = A.partialPivLu().inverse();
  m.trace = m.R.trace();
  return m;
}

struct ResolventBundle {
  int n = 0;
  std::uint64_t seed = 0;
  std::complex<double> z;
  Eigen::MatrixXcd R;
  std::complex<double> m;         // (1/n) Tr R
  std::complex<double> trace_sq;  // Tr R^2
  std::map<std::vector<int>, MinorResolvent> minors;

  std::complex<double> m_prime() const { return trace_sq / static_cast<double>(n); }

  // (1/n) Tr R^(J) with the full-size normalization.
  std::complex<double> minor_m(const std::vector<int>& J) const {
    std::vector<int> key = J;
    std::sort(key.begin(), key.end());
    auto it = minors.find(key);
    if (it == minors.end()) throw ArgumentError("minor not attached to bundle");
    return it->second.trace / static_cast<double>(n);
  }
};

// Direct pivoted solve. Guards: complex symmetry, residual of the defining
// equation, and Im m_n > 0. The residual is checked column-exactly up to
// n = 512 and on 16 probe columns above that (cost control).
inline ResolventBundle resolvent_at(const Eigen::MatrixXd& W,
                                    std::complex<double> z,
                                    std::uint64_t seed = 0) {
  if (z.imag() <= 0.0) throw ArgumentError("resolvent needs Im z > 0");
  const int n = static_cast<int>(W.rows());
  ResolventBundle b;
  b.n = n;
  b.seed = seed;
  b.z = z;
  Eigen::MatrixXcd A = W.cast<std::complex<double>>();
  A.diagonal().array() -= z;
  b.R = A.partialPivLu().inverse();

  const double rmax = std::max(1.0, b.R.cwiseAbs().maxCoeff());
  const double sym = (b.R - b.R.transpose()).cwiseAbs().maxCoeff();
  if (sym > 1e-10 * rmax)
    throw NumericError("resolvent symmetry off by " + fmt_double(sym) +
                       " (seed " + std::to_string(seed) + ")");
  if (n <= 512) {
    const double res =
        (A * b.R - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (res > 1e-9 * rmax)
      throw NumericError("resolvent residual " + fmt_double(res) + " (seed " +
                         std::to_string(seed) + ")");
  } else {
    Stream probe(split(seed, 0x5e5));
    for (int t = 0; t < 16; ++t) {
      const int c = static_cast<int>(probe.next_u64() % n);
      Eigen::VectorXcd col = A * b.R.col(c);
      col(c) -= 1.0;
      const double res = col.cwiseAbs().maxCoeff();
      if (res > 1e-9 * rmax)
        throw NumericError("resolvent residual " + fmt_double(res) +
                           " on column " + std::to_string(c) + " (seed " +
                           std::to_string(seed) + ")");
    }
  }
  b.m = b.R.trace() / static_cast<double>(n);
  if (!(b.m.imag() > 0.0))
    throw NumericError("Im m_n <= 0 (seed " + std::to_string(seed) + ")");
  b.trace_sq = b.R.cwiseProduct(b.R.transpose()).sum();
  return b;
}

inline ResolventBundle resolvent_of(
    const WignerSample& s, std::complex<double> z,
    const std::vector<std::vector<int>>& minor_sets = {}) {
  ResolventBundle b = resolvent_at(s.W, z, s.seed);
  for (const auto& J : minor_sets) {
    MinorResolvent m = minor_resolvent(s.W, z, J);
    std::vector<int> key = m.removed;
    b.minors.emplace(std::move(key), std::move(m));
  }
  return b;
}

// Second route: R = U diag(1/(lambda - z)) U^T from the eigendecomposition.
inline Eigen::MatrixXcd resolvent_via_eigen(const WignerSample& s,
                                            std::complex<double> z) {
  if (z.imag() <= 0.0) throw ArgumentError("resolvent needs Im z > 0");
  auto dec = decompose(s);
  Eigen::VectorXcd kernel =
      (dec.eigenvalues.cast<std::complex<double>>().array() - z).inverse();
  Eigen::MatrixXcd U = dec.eigenvectors.cast<std::complex<double>>();
  return U * kernel.asDiagonal() * U.transpose();
}

struct EpsilonRow {
  std::complex<double> eps1, eps2, eps3, eps4;
  std::complex<double> r_jj;   // diagonal resolvent entry of the full matrix
  std::complex<double> a_n_j;  // 1/(z + (1/n) Tr R^(j))
  std::complex<double> eps() const { return eps1 + eps2 + eps3 + eps4; }
};

struct EpsilonDecomposition {
  int n = 0;
  std::uint64_t seed = 0;
  std::complex<double> z;
  std::complex<double> m;    // (1/n) Tr R
  std::complex<double> a_n;  // 1/(z + m)
  std::vector<EpsilonRow> rows;
};

// Row decomposition: eps1 = X_jj/sqrt(n), eps2 = -(1/n) sum_{k != l} X_jk X_jl
// R^(j)_kl, eps3 = -(1/n) sum_k (X_jk^2 - 1) R^(j)_kk, eps4 = (1/n)(Tr R -
// Tr R^(j)). In W units the 1/n on the quadratic forms cancels.
inline EpsilonDecomposition epsilon_terms(const WignerSample& s,
                                          std::complex<double> z) {
  const int n = s.spec.n;
  ResolventBundle b = resolvent_at(s.W, z, s.seed);
  const std::complex<double> tr = b.R.trace();
  EpsilonDecomposition d;
  d.n = n;
  d.seed = s.seed;
  d.z = z;
  d.m = b.m;
  d.a_n = 1.0 / (z + b.m);
  d.rows.resize(n);
  for (int j = 0; j < n; ++j) {
    MinorResolvent mj = minor_resolvent(s.W, z, {j});
    const int nm = n - 1;
    Eigen::VectorXcd w(nm);
    for (int k = 0; k < nm; ++k) w(k) = s.W(j, mj.kept[k]);
    std::complex<double> qf = 0.0, diag = 0.0;
    if (nm > 0) {
      qf = (w.transpose() * (mj.R * w)).value();
      for (int k = 0; k < nm; ++k) diag += w(k) * w(k) * mj.R(k, k);
    }
    EpsilonRow& row = d.rows[j];
    row.eps1 = s.W(j, j);
    row.eps2 = -(qf - diag);
    row.eps3 = -diag + mj.trace / static_cast<double>(n);
    row.eps4 = (tr - mj.trace) / static_cast<double>(n);
    row.r_jj = b.R(j, j);
    row.a_n_j = 1.0 / (z + mj.trace / static_cast<double>(n));
  }
  return d;
}

struct EtaTerms {
  std::complex<double> eta0, eta1, eta2;
  std::complex<double> total() const { return eta0 + eta1 + eta2; }
};

namespace detail {

struct EtaBundle {
  EtaTerms eta;
  MinorResolvent minor;
  Eigen::MatrixXcd square;  // (R^(j))^2
};

inline EtaBundle eta_bundle(const WignerSample& s, int j,
                            std::complex<double> z) {
  const int n = s.spec.n;
  if (j < 0 || j >= n) throw ArgumentError("eta row index out of range");
  EtaBundle b;
  b.minor = minor_resolvent(s.W, z, {j});
  const int nm = n - 1;
  b.square = b.minor.R * b.minor.R;
  b.eta.eta0 = b.square.trace() / static_cast<double>(n);
  std::complex<double> bilinear = 0.0, diag = 0.0, centered = 0.0;
  if (nm > 0) {
    Eigen::VectorXcd w(nm);
    for (int k = 0; k < nm; ++k) w(k) = s.W(j, b.minor.kept[k]);
    bilinear = (w.transpose() * (b.square * w)).value();
    for (int k = 0; k < nm; ++k) {
      diag += w(k) * w(k) * b.square(k, k);
      centered += (w(k) * w(k) - 1.0 / static_cast<double>(n)) * b.square(k, k);
    }
  }
  b.eta.eta1 = bilinear - diag;
  b.eta.eta2 = centered;
  return b;
}

// Deterministic pair of distinct rows derived from the sample seed.
inline std::pair<int, int> pick_rows(std::uint64_t seed, int n) {
  const int j0 = static_cast<int>(split(seed, 0xE7A) % static_cast<std::uint64_t>(n));
  if (n < 2) return {j0, j0};
  int j1 = static_cast<int>(split(seed, 0xE7B) %
                            static_cast<std::uint64_t>(n - 1));
  if (j1 >= j0) ++j1;
  return {j0, j1};
}

}  // namespace detail

// Quadratic form split on (R^(j))^2: eta0 the normalized trace, eta1 the
// off-diagonal form, eta2 the variance-centered diagonal form.
inline EtaTerms eta_terms(const WignerSample& s, int j, std::complex<double> z) {
  return detail::eta_bundle(s, j, z).eta;
}

struct SelfConsistencyState {
  std::complex<double> z;
  std::complex<double> m;       // (1/n) Tr R
  std::complex<double> s;       // semicircle transform at z
  std::complex<double> T;       // (1/n) sum eps_j R_jj
  std::complex<double> Lambda;  // m - s
  std::complex<double> b;       // z + 2s
  std::complex<double> b_n;     // b + Lambda
  std::complex<double> a;       // z^2/4 - 1
};

inline double identity_tol(double base, double v) {
  return base * std::max(1.0, 0.1 / v);
}

// Assembles T_n, Lambda_n, b_n and verifies the closed identities linking
// them; a breach means a bug, not unusual data, hence InternalError.
inline SelfConsistencyState self_consistency(const WignerSample& smp,
                                             std::complex<double> z) {
  EpsilonDecomposition d = epsilon_terms(smp, z);
  SelfConsistencyState st;
  st.z = z;
  st.m = d.m;
  st.s = semicircle::stieltjes(z);
  std::complex<double> T = 0.0;
  for (const auto& row : d.rows) T += row.eps() * row.r_jj;
  st.T = T / static_cast<double>(d.n);
  st.Lambda = st.m - st.s;
  st.b = z + 2.0 * st.s;
  st.b_n = st.b + st.Lambda;
  st.a = z * z / 4.0 - 1.0;
  const double tol = identity_tol(1e-9, z.imag());
  const std::complex<double> root = semicircle::sqrt_upper(st.a + st.T);
  const double res1 = std::abs(st.T - (z + st.m + st.s) * st.Lambda);
  const double res2 = std::abs(st.m - (-z / 2.0 + root));
  const double res3 = std::abs(st.Lambda - (root - semicircle::sqrt_upper(st.a)));
  if (res1 > tol || res2 > tol || res3 > tol)
    throw InternalError("self-consistency residuals " + fmt_double(res1) + ", " +
                        fmt_double(res2) + ", " + fmt_double(res3) + " at seed " +
                        std::to_string(smp.seed));
  return st;
}

struct IdentityResult {
  std::string id;
  double residual = 0.0;
  double tol = 0.0;
  bool passed = false;
  int n = 0;
  std::uint64_t seed = 0;
  double u = 0.0, v = 0.0;
};

struct IdentityReport {
  std::vector<IdentityResult> items;
  bool all_passed() const {
    for (const auto& i : items)
      if (!i.passed) return false;
    return true;
  }
};

// Evaluates every exact identity on one (sample, z) pair and reports
// residuals. The derivative check uses central finite differences from two
// extra solves; the eta checks run on two seed-derived rows.
inline IdentityReport validate_identities(const WignerSample& smp,
                                          std::complex<double> z) {
  const int n = smp.spec.n;
  const double v = z.imag();
  IdentityReport rep;
  auto push = [&](const std::string& id, double residual, double tol) {
    rep.items.push_back(
        {id, residual, tol, residual <= tol, n, smp.seed, z.real(), v});
  };
  const double tol9 = identity_tol(1e-9, v);
  const double tol10 = identity_tol(1e-10, v);

  ResolventBundle b = resolvent_at(smp.W, z, smp.seed);
  EpsilonDecomposition d = epsilon_terms(smp, z);

  double schur = 0.0, repr = 0.0, eps4_max = 0.0;
  std::complex<double> T = 0.0, deriv_sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const EpsilonRow& row = d.rows[j];
    schur = std::max(schur, std::abs(row.r_jj * (row.eps() - z - d.m) - 1.0));
    repr = std::max(repr, std::abs(row.r_jj - (-d.a_n + d.a_n * row.eps() *
                                                            row.r_jj)));
    T += row.eps() * row.r_jj;
    deriv_sum += row.eps4 * row.r_jj;
    eps4_max = std::max(eps4_max, std::abs(row.eps4));
  }
  T /= static_cast<double>(n);
  push("schur_identity", schur, tol9);
  push("representation_identity", repr, tol9);
  push("t_consistency", std::abs(T - (1.0 + z * d.m + d.m * d.m)), tol9);

  const std::complex<double> s = semicircle::stieltjes(z);
  const std::complex<double> Lambda = d.m - s;
  const std::complex<double> a = z * z / 4.0 - 1.0;
  const std::complex<double> root = semicircle::sqrt_upper(a + T);
  push("lambda_T", std::abs(T - (z + d.m + s) * Lambda), tol9);
  push("sqrt_representation", std::abs(d.m - (-z / 2.0 + root)), tol9);
  push("sqrt_lambda",
       std::abs(Lambda - (root - semicircle::sqrt_upper(a))), tol9);
  push("derivative_trace",
       std::abs(deriv_sum - b.trace_sq / static_cast<double>(n)), tol9);

  const double h = 1e-5 * v;
  const std::complex<double> m_plus =
      resolvent_at(smp.W, z + std::complex<double>(h, 0.0), smp.seed).m;
  const std::complex<double> m_minus =
      resolvent_at(smp.W, z - std::complex<double>(h, 0.0), smp.seed).m;
  const std::complex<double> m_prime = b.trace_sq / static_cast<double>(n);
  push("derivative_fd",
       std::abs(m_prime - (m_plus - m_minus) / (2.0 * h)) / std::abs(m_prime),
       1e-5);

  const auto [j0, j1] = detail::pick_rows(smp.seed, n);
  const std::complex<double> tr = b.R.trace();
  double trace_diff = 0.0, eta_split = 0.0;
  for (int j : {j0, j1}) {
    auto eb = detail::eta_bundle(smp, j, z);
    trace_diff = std::max(
        trace_diff, std::abs((tr - eb.minor.trace) -
                             (1.0 + eb.eta.total()) * b.R(j, j)));
    // Brute-force total in a different accumulation order.
    std::complex<double> brute = 0.0;
    const int nm = n - 1;
    for (int r = 0; r < nm; ++r)
      for (int c = 0; c < nm; ++c)
        brute += smp.W(j, eb.minor.kept[r]) * smp.W(j, eb.minor.kept[c]) *
                 eb.square(r, c);
    eta_split = std::max(eta_split, std::abs(eb.eta.total() - brute));
    if (j0 == j1) break;
  }
  push("trace_difference", trace_diff, tol9);
  push("eta_split", eta_split, tol10);
  push("eps4_bound",
       std::max(0.0, eps4_max - 1.0 / (static_cast<double>(n) * v)), 1e-12);
  return rep;
}

struct CheckResult {
  std::string check_id;
  bool passed = false;
  double margin = 0.0;
  int n = 0;
  std::uint64_t seed = 0;
  double u = 0.0, v = 0.0;
  double extra = 0.0;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

namespace detail {

// Worst column-sum equality violation for one resolvent matrix.
inline double column_norm_gap(const Eigen::MatrixXcd& R, double v,
                              double* scale) {
  double gap = 0.0;
  for (Eigen::Index l = 0; l < R.cols(); ++l) {
    const double lhs = R.col(l).squaredNorm();
    const double rhs = R(l, l).imag() / v;
    gap = std::max(gap, std::abs(lhs - rhs));
    *scale = std::max(*scale, rhs);
  }
  return gap;
}

struct SquareStats {
  double f1, f2, f3, f4, f5;  // margins of the five square inequalities
};

inline SquareStats square_margins(const Eigen::MatrixXcd& R,
                                  std::complex<double> trace, int n_full,
                                  double v) {
  const Eigen::MatrixXcd S = R * R;
  const double n = static_cast<double>(n_full);
  const double im_m = (trace / n).imag();
  SquareStats st{};
  st.f1 = im_m / v - std::abs(S.trace()) / n;
  st.f2 = im_m / (v * v * v) - S.cwiseAbs2().sum() / n;
  double diag_sq = 0.0;
  st.f4 = std::numeric_limits<double>::infinity();
  for (const double p : {1.0, 2.0, 4.0}) {
    double lhs = 0.0, rhs = 0.0;
    for (Eigen::Index k = 0; k < R.rows(); ++k) {
      lhs += std::pow(std::abs(S(k, k)), p);
      rhs += std::pow(R(k, k).imag(), p);
      if (p == 2.0) diag_sq += std::norm(S(k, k));
    }
    st.f4 = std::min(st.f4, rhs / (n * std::pow(v, p)) - lhs / n);
  }
  st.f3 = im_m / (v * v * v) - diag_sq / n;
  st.f5 = std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < R.rows(); ++l)
    st.f5 = std::min(st.f5,
                     R(l, l).imag() / (v * v * v) - S.row(l).squaredNorm());
  if (R.rows() == 0) st.f4 = st.f5 = im_m / v + 1.0;  // vacuous on empty minors
  return st;
}

}  // namespace detail

// Inequality checks (a)-(g), reported with margins. Margins for the equality
// checks (a), (b) already fold in the 1e-10 roundoff allowance, so margin
// >= 0 means pass there; one-sided checks report the raw minimum slack and
// pass unless it dips below the scaled allowance.
inline ValidationReport validate_inequalities(const WignerSample& smp,
                                              std::complex<double> z) {
  const int n = smp.spec.n;
  const double u = z.real(), v = z.imag();
  ValidationReport rep;
  auto push = [&](const std::string& id, bool passed, double margin,
                  double extra) {
    rep.checks.push_back({id, passed, margin, n, smp.seed, u, v, extra});
  };

  ResolventBundle b = resolvent_at(smp.W, z, smp.seed);
  const auto [j0, j1] = detail::pick_rows(smp.seed, n);
  MinorResolvent m0 = minor_resolvent(smp.W, z, {j0});
  MinorResolvent m01 = n >= 2 ? minor_resolvent(smp.W, z, {j0, j1}) : m0;

  // (a) column sums against Im R_ll / v, full matrix and minors.
  {
    double scale = 1.0;
    double gap = detail::column_norm_gap(b.R, v, &scale);
    gap = std::max(gap, detail::column_norm_gap(m0.R, v, &scale));
    gap = std::max(gap, detail::column_norm_gap(m01.R, v, &scale));
    push("a", gap <= 1e-10 * scale, 1e-10 * scale - gap, gap);
  }

  // (b) normalized double sum against Im m_n / v, same variants. Minor
  // traces keep the full-size 1/n normalization.
  {
    double scale = 1.0, gap = 0.0;
    const double nn = static_cast<double>(n);
    const Eigen::MatrixXcd* variants[3] = {&b.R, &m0.R, &m01.R};
    for (const Eigen::MatrixXcd* mr : variants) {
      const double lhs = mr->cwiseAbs2().sum() / nn;
      const double rhs = (mr->trace() / nn).imag() / v;
      gap = std::max(gap, std::abs(lhs - rhs));
      scale = std::max(scale, rhs);
    }
    push("b", gap <= 1e-10 * scale, 1e-10 * scale - gap, gap);
  }

  // (c) v <= Im R_jj / |R_jj|^2.
  {
    double margin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      margin = std::min(margin, b.R(j, j).imag() / std::norm(b.R(j, j)) - v);
    push("c", margin >= -1e-10 * std::max(1.0, v), margin, 0.0);
  }

  // (d), (e): compare against resolvents at u + iv/s.
  {
    double margin_d = std::numeric_limits<double>::infinity();
    double margin_e = std::numeric_limits<double>::infinity();
    for (const double sfac : {2.0, 4.0, 10.0}) {
      ResolventBundle bs =
          resolvent_at(smp.W, {u, v / sfac}, smp.seed);
      for (int j = 0; j < n; ++j)
        margin_d = std::min(margin_d, sfac * std::abs(b.R(j, j)) -
                                          std::abs(bs.R(j, j)));
      margin_e = std::min({margin_e,
                           sfac * b.m.imag() - bs.m.imag(),
                           sfac * bs.m.imag() - b.m.imag()});
    }
    const double scale = std::max(1.0, 10.0 / v);
    push("d", margin_d >= -1e-10 * scale, margin_d, 0.0);
    push("e", margin_e >= -1e-10 * scale, margin_e, 0.0);
  }

  // (f) the five square inequalities over J in {empty, {j0}, {j0,j1}}.
  {
    double margin = std::numeric_limits<double>::infinity();
    double tightest = 0.0, scale = 1.0;
    for (int which = 0; which < 3; ++which) {
      const Eigen::MatrixXcd& R = which == 0 ? b.R : (which == 1 ? m0.R : m01.R);
      const std::complex<double> tr = which == 0 ? b.R.trace()
                                     : (which == 1 ? m0.trace : m01.trace);
      auto st = detail::square_margins(R, tr, n, v);
      const double vals[5] = {st.f1, st.f2, st.f3, st.f4, st.f5};
      for (int i = 0; i < 5; ++i)
        if (vals[i] < margin) {
          margin = vals[i];
          tightest = static_cast<double>(i + 1);
        }
      scale = std::max(scale, (tr / static_cast<double>(n)).imag() /
                                  (v * v * v));
    }
    push("f", margin >= -1e-10 * scale, margin, tightest);
  }

  // (g) |Lambda_n| <= 4 min(|T_n|/|b|, sqrt|T_n|), inside |u| <= 2 + v. T_n
  // comes from the closed rational form; its agreement with the row
  // decomposition is enforced by validate_identities.
  if (std::abs(u) <= 2.0 + v) {
    const std::complex<double> s = semicircle::stieltjes(z);
    const std::complex<double> T = 1.0 + z * b.m + b.m * b.m;
    const std::complex<double> bb = z + 2.0 * s;
    const double lam = std::abs(b.m - s);
    const double bound =
        std::min(std::abs(T) / std::abs(bb), std::sqrt(std::abs(T)));
    const double ratio = bound > 0.0 ? lam / bound : 0.0;
    push("g", 4.0 * bound - lam >= -1e-10, 4.0 * bound - lam, ratio);
  }
  return rep;
}

inline std::string report_json(const ValidationReport& rep) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : rep.checks) {
    nlohmann::ordered_json row;
    row["check_id"] = c.check_id;
    row["passed"] = c.passed;
    row["margin"] = c.margin;
    row["n"] = c.n;
    row["seed"] = c.seed;
    row["u"] = c.u;
    row["v"] = c.v;
    row["extra"] = c.extra;
    arr.push_back(std::move(row));
  }
  return arr.dump(2);
}

inline std::string report_json(const IdentityReport& rep) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& i : rep.items) {
    nlohmann::ordered_json row;
    row["id"] = i.id;
    row["residual"] = i.residual;
    row["tol"] = i.tol;
    row["passed"] = i.passed;
    row["n"] = i.n;
    row["seed"] = i.seed;
    row["u"] = i.u;
    row["v"] = i.v;
    arr.push_back(std::move(row));
  }
  return arr.dump(2);
}

}  // namespace wigner
