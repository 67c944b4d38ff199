#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "wigner/ensemble.hpp"
#include "wigner/semicircle.hpp"
#include "wigner/spectral.hpp"

using namespace wigner;
using std::complex;

namespace {

WignerSample fixed_sample(const Eigen::MatrixXd& W) {
  WignerSample s;
  s.spec = EnsembleSpec{static_cast<int>(W.rows()), EntryDistribution::gaussian(), 1.0};
  s.seed = 0;
  s.W = W;
  return s;
}

}  // namespace

TEST_CASE("decompose crafted matrices") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3);
  D(0, 0) = 2.0; D(1, 1) = 1.0; D(2, 2) = 3.0;
  auto dec = decompose(fixed_sample(D));
  CHECK(dec.eigenvalues(0) == Catch::Approx(1.0).margin(1e-14));
  CHECK(dec.eigenvalues(1) == Catch::Approx(2.0).margin(1e-14));
  CHECK(dec.eigenvalues(2) == Catch::Approx(3.0).margin(1e-14));
  // Eigenvectors of a diagonal matrix: signed unit vectors.
  for (int c = 0; c < 3; ++c) {
    double mx = dec.eigenvectors.col(c).cwiseAbs().maxCoeff();
    CHECK(mx == Catch::Approx(1.0).margin(1e-12));
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 1) = A(1, 0) = 0.7;
  auto dec2 = decompose(fixed_sample(A));
  CHECK(dec2.eigenvalues(0) == Catch::Approx(-0.7).margin(1e-14));
  CHECK(dec2.eigenvalues(1) == Catch::Approx(0.7).margin(1e-14));
}

TEST_CASE("decompose random sample invariants") {
  EnsembleSpec spec{60, EntryDistribution::gaussian(), 1.0};
  auto s = sample_raw(spec, 17);
  auto dec = decompose(s);
  // Ascending.
  for (int j = 1; j < 60; ++j) REQUIRE(dec.eigenvalues(j) >= dec.eigenvalues(j - 1));
  // Orthonormality and reconstruction at full matrix strength.
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(60, 60);
  double orth = (dec.eigenvectors.transpose() * dec.eigenvectors - I).cwiseAbs().maxCoeff();
  CHECK(orth <= 1e-9);
  Eigen::MatrixXd rec = dec.eigenvectors * dec.eigenvalues.asDiagonal() *
                        dec.eigenvectors.transpose();
  double lam_max = dec.eigenvalues.cwiseAbs().maxCoeff();
  CHECK((rec - s.W).cwiseAbs().maxCoeff() <= 1e-8 * lam_max);
  // Trace preservation.
  CHECK(std::abs(dec.eigenvalues.sum() - s.W.trace()) <=
        1e-9 * 60.0 * s.W.cwiseAbs().maxCoeff());
  // Values-only route agrees.
  auto lam = eigenvalues_of(s);
  CHECK((lam - dec.eigenvalues).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("eigenvalue counting") {
  Eigen::VectorXd lam(5);
  lam << -1.0, 0.0, 0.5, 0.5, 2.0;
  CHECK(counting(lam, -1.0, 2.0) == 5);   // closed on both ends
  CHECK(counting(lam, -0.5, 0.5) == 3);
  CHECK(counting(lam, 0.5, 0.5) == 2);
  CHECK(counting(lam, 3.0, 4.0) == 0);
  CHECK_THROWS_AS(counting(lam, 1.0, 0.0), ArgumentError);

  EnsembleSpec spec{200, EntryDistribution::gaussian(), 1.0};
  auto evals = eigenvalues_of(sample_raw(spec, 23));
  Stream st(split(23, 1));
  for (int i = 0; i < 50; ++i) {
    double a = -2.5 + 5.0 * st.next_unit();
    double b = a + 2.0 * st.next_unit();
    REQUIRE(counting(evals, a, b) == oracle::count_scan(evals, a, b));
  }
}

TEST_CASE("empirical stieltjes transform") {
  Eigen::VectorXd one(1);
  one << 0.0;
  CHECK(std::abs(stieltjes_empirical(one, {0.0, 1.0}) - complex<double>(0.0, 1.0)) <
        1e-15);

  EnsembleSpec spec{80, EntryDistribution::gaussian(), 1.0};
  auto lam = eigenvalues_of(sample_raw(spec, 29));
  for (double u : {-1.0, 0.2, 2.4}) {
    for (double v : {0.05, 0.7}) {
      auto m = stieltjes_empirical(lam, {u, v});
      CHECK(m.imag() > 0.0);
      // Poisson kernel identity: Im m = (1/(nv)) sum 1/(1 + ((u-lam)/v)^2).
      double acc = 0.0;
      for (int j = 0; j < 80; ++j) {
        double t = (u - lam(j)) / v;
        acc += 1.0 / (1.0 + t * t);
      }
      acc /= 80.0 * v;
      CHECK(m.imag() == Catch::Approx(acc).margin(1e-12 / v));
      // Conjugate symmetry through the raw overload.
      auto mc = stieltjes_empirical(lam, std::conj(complex<double>(u, v)));
      CHECK(std::abs(mc - std::conj(m)) < 1e-15);
    }
  }
  CHECK_THROWS_AS(stieltjes_empirical(one, complex<double>(0.5, 0.0)), ArgumentError);
}

TEST_CASE("kolmogorov distance exact jump formula") {
  Eigen::VectorXd one(1);
  one << 0.0;
  CHECK(kolmogorov_distance_to_semicircle(one) == Catch::Approx(0.5).margin(1e-15));

  // Planted mid-level quantiles: distance exactly 1/(2n).
  const int n = 40;
  Eigen::VectorXd planted(n);
  for (int j = 1; j <= n; ++j)
    planted(j - 1) = semicircle::quantile((j - 0.5) / n);
  CHECK(kolmogorov_distance_to_semicircle(planted) ==
        Catch::Approx(1.0 / (2.0 * n)).margin(1e-9));

  EnsembleSpec spec{300, EntryDistribution::gaussian(), 1.0};
  auto lam = eigenvalues_of(sample_raw(spec, 31));
  double d = kolmogorov_distance_to_semicircle(lam);
  CHECK(d >= 0.0);
  CHECK(d <= 1.0);
  double d_oracle = oracle::kolmogorov_grid(
      lam, [](double x) { return semicircle::cdf(x); }, 200000);
  CHECK(d == Catch::Approx(d_oracle).margin(1e-12));
}

TEST_CASE("lindeberg ratio") {
  EnsembleSpec rs{4, EntryDistribution::rademacher(), 1.0};
  auto r = sample_raw(rs, 3);
  CHECK(lindeberg_ratio(r, 1.0) == 0.0);          // tau sqrt(n) = 2 > |X| = 1
  CHECK(lindeberg_ratio(r, 0.25) == Catch::Approx(1.0).margin(1e-12));  // all mass

  // Frozen tail second moment for student t(5), threshold sqrt(400):
  // E X^2 1[|X| >= 20] = 0.00108792986577496162.
  EnsembleSpec ts{400, EntryDistribution::student_t(5.0, 0.5), 1.0};
  const int seeds = 100;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < seeds; ++i) {
    double L = lindeberg_ratio(sample_raw(ts, split(47, i)), 1.0);
    sum += L;
    sum2 += L * L;
  }
  double mean = sum / seeds;
  double se = std::sqrt((sum2 / seeds - mean * mean) / seeds);
  CHECK(std::abs(mean - 0.00108792986577496162) <= 4.0 * se);
}

TEST_CASE("rigidity residuals") {
  // Planted classical locations: residuals vanish identically.
  const int n = 64;
  Eigen::VectorXd planted(n);
  for (int j = 1; j < n; ++j) planted(j - 1) = semicircle::quantile(double(j) / n);
  planted(n - 1) = 2.0;
  auto rr = rigidity_residuals(planted, false);
  REQUIRE(rr.residual.size() == n);
  CHECK(rr.max_normalized == 0.0);
  auto rre = rigidity_residuals(planted, true);
  CHECK(rre.max_normalized == 0.0);

  // Normalization algebra on a random spectrum.
  EnsembleSpec spec{32, EntryDistribution::gaussian(), 1.0};
  auto lam = eigenvalues_of(sample_raw(spec, 53));
  auto rg = rigidity_residuals(lam, true);
  for (int j = 1; j <= 32; ++j) {
    double gamma = j < 32 ? semicircle::quantile(double(j) / 32) : 2.0;
    double res = lam(j - 1) - gamma;
    double norm = res * std::pow(32.0, 2.0 / 3.0) *
                  std::cbrt(static_cast<double>(std::min(j, 32 - j + 1)));
    REQUIRE(rg.residual(j - 1) == Catch::Approx(res).margin(1e-14));
    REQUIRE(rg.normalized(j - 1) == Catch::Approx(norm).margin(1e-12));
  }
  // The default excludes the clamped top edge from the maximum.
  auto rg_no = rigidity_residuals(lam, false);
  double mx = 0.0;
  for (int j = 1; j < 32; ++j) mx = std::max(mx, std::abs(rg_no.normalized(j - 1)));
  CHECK(rg_no.max_normalized == Catch::Approx(mx));

  // Gaussian samples at n=128: the empirical constant is modest.
  EnsembleSpec gs{128, EntryDistribution::gaussian(), 1.0};
  for (int i = 0; i < 10; ++i) {
    auto rv = rigidity_residuals(eigenvalues_of(sample_raw(gs, split(59, i))), false);
    REQUIRE(rv.max_normalized > 0.0);
    REQUIRE(rv.max_normalized < 20.0);
  }
}

TEST_CASE("delocalization statistic") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(8, 8);
  for (int j = 0; j < 8; ++j) D(j, j) = j;
  CHECK(delocalization_stat(decompose(fixed_sample(D))) == Catch::Approx(8.0));

  EnsembleSpec spec{100, EntryDistribution::gaussian(), 1.0};
  double st = delocalization_stat(decompose(sample_raw(spec, 61)));
  CHECK(st >= 1.0);
  CHECK(st <= 100.0);
}

TEST_CASE("short scale eigenvalue density") {
  // Spectrum confined to [-2,2] puts nothing near x=3.
  const int n = 100;
  Eigen::VectorXd inside(n);
  for (int j = 0; j < n; ++j) inside(j) = -1.5 + 3.0 * j / (n - 1);
  CHECK(short_scale_density(inside, 3.0, 20.0) == 0.0);

  // Planted equispaced spectrum of local density 0.3 around zero.
  const double dens = 0.3;
  const int m = 2000;
  Eigen::VectorXd grid(m);
  for (int j = 0; j < m; ++j)
    grid(j) = (j - m / 2) / (static_cast<double>(m) * dens);
  double est = short_scale_density(grid, 0.0, 40.0);
  CHECK(std::abs(est - dens) <= 2.0 / 40.0);
}

TEST_CASE("spectral moments meet the catalan numbers") {
  // (1/n) Tr W^(2m) for m = 1,2,3 across seeds, n = 150.
  EnsembleSpec spec{150, EntryDistribution::gaussian(), 1.0};
  const int seeds = 100;
  double sums[3] = {0, 0, 0}, sums2[3] = {0, 0, 0};
  for (int i = 0; i < seeds; ++i) {
    auto lam = eigenvalues_of(sample_raw(spec, split(67, i)));
    for (int m = 1; m <= 3; ++m) {
      double v = esd_moment(lam, 2 * m);
      sums[m - 1] += v;
      sums2[m - 1] += v * v;
    }
  }
  const double want[3] = {1.0, 2.0, 5.0};
  for (int m = 1; m <= 3; ++m) {
    double mean = sums[m - 1] / seeds;
    double se = std::sqrt((sums2[m - 1] / seeds - mean * mean) / seeds);
    INFO("moment order " << 2 * m);
    CHECK(std::abs(mean - want[m - 1]) <= 4.0 * se);
  }
}

TEST_CASE("csv spectrum exports") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "wigner_spectral_csv";
  fs::create_directories(dir);
  EnsembleSpec spec{24, EntryDistribution::gaussian(), 1.0};
  auto s = sample_raw(spec, 71);
  auto lam = eigenvalues_of(s);

  auto spath = (dir / "spectrum.csv").string();
  write_spectrum_csv(spath, s.seed, lam);
  std::ifstream in(spath);
  std::string header;
  std::getline(in, header);
  CHECK(header == "seed,n,j,lambda");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 24);

  auto rpath = (dir / "rigidity.csv").string();
  write_rigidity_csv(rpath, s.seed, rigidity_residuals(lam, true));
  std::ifstream rin(rpath);
  std::getline(rin, header);
  CHECK(header == "seed,n,j,lambda,gamma,residual,normalized");
  rows = 0;
  for (std::string line; std::getline(rin, line);) ++rows;
  CHECK(rows == 24);
  fs::remove_all(dir);
}
