#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "wigner/ensemble.hpp"
#include "wigner/io.hpp"
#include "wigner/quadrature.hpp"
#include "wigner/rng.hpp"

using namespace wigner;

TEST_CASE("stream determinism and splitting") {
  Stream a(split(7, 3, 4)), b(split(7, 3, 4));
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  // Distinct indices give distinct keys; scan a (block, replica) grid.
  std::vector<std::uint64_t> keys;
  for (std::uint64_t blk = 0; blk < 8; ++blk)
    for (std::uint64_t r = 0; r < 4096; ++r) keys.push_back(split(kDefaultSeed, blk, r));
  // Entry-level keys of a 64x64 upper triangle under two sample seeds.
  for (std::uint64_t s : {split(kDefaultSeed, 0, 0), split(kDefaultSeed, 1, 7)})
    for (std::uint64_t j = 0; j < 64; ++j)
      for (std::uint64_t k = j; k < 64; ++k) keys.push_back(split(s, j, k));
  std::sort(keys.begin(), keys.end());
  CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());

  Stream u(1);
  for (int i = 0; i < 1000; ++i) {
    double x = u.next_unit();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    double y = u.next_unit_pos();
    REQUIRE(y > 0.0);
    REQUIRE(y <= 1.0);
  }
}

namespace {

struct Moments {
  double mean, second, se_mean, se_second;
};

Moments sample_moments(const EntryDistribution& d, std::uint64_t key, int count) {
  Stream s(key);
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < count; ++i) {
    double x = d.sample(s);
    sum += x;
    sum2 += x * x;
    sum4 += x * x * x * x;
  }
  double mean = sum / count;
  double second = sum2 / count;
  double var_of_sq = sum4 / count - second * second;
  return {mean, second, std::sqrt(std::max(second - mean * mean, 0.0) / count),
          std::sqrt(std::max(var_of_sq, 0.0) / count)};
}

}  // namespace

TEST_CASE("entry distributions are standardized") {
  const int N = 400000;
  for (auto d : {EntryDistribution::rademacher(), EntryDistribution::gaussian(),
                 EntryDistribution::student_t(5.0), EntryDistribution::symmetric_pareto(6.0)}) {
    auto m = sample_moments(d, split(11, static_cast<int>(d.family)), N);
    INFO("family " << family_name(d.family));
    CHECK(std::abs(m.mean) <= 4.0 * m.se_mean + 1e-12);
    CHECK(std::abs(m.second - 1.0) <= 4.0 * m.se_second + 1e-12);
  }
}

TEST_CASE("gaussian sampler shape") {
  EntryDistribution d = EntryDistribution::gaussian();
  const int N = 400000;
  Stream s(split(12, 0));
  double sum4 = 0.0;
  int below_half = 0;
  for (int i = 0; i < N; ++i) {
    double x = d.sample(s);
    sum4 += x * x * x * x;
    if (x <= 0.5) ++below_half;
  }
  // E X^4 = 3, Var(X^4) = 105 - 9 = 96.
  CHECK(std::abs(sum4 / N - 3.0) <= 4.0 * std::sqrt(96.0 / N));
  double p = 0.5 * std::erfc(-0.5 / std::sqrt(2.0));
  CHECK(std::abs(static_cast<double>(below_half) / N - p) <=
        4.0 * std::sqrt(p * (1.0 - p) / N));
}

TEST_CASE("student t sampler against quadrature cdf") {
  const double df = 5.0;
  EntryDistribution d = EntryDistribution::student_t(df);
  // Standardized t density.
  const double c = std::sqrt(df / (df - 2.0));
  const double A = std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
                   std::sqrt(df * M_PI);
  auto fX = [&](double x) {
    double t = c * x;
    return c * A * std::pow(1.0 + t * t / df, -(df + 1.0) / 2.0);
  };
  const int N = 300000;
  Stream s(split(13, 0));
  for (double x0 : {-1.0, 0.7, 2.5}) {
    Stream ss = s;
    int cnt = 0;
    for (int i = 0; i < N; ++i)
      if (d.sample(ss) <= x0) ++cnt;
    double F = 0.5 + integrate(fX, std::min(0.0, x0), std::max(0.0, x0)) *
                         (x0 >= 0.0 ? 1.0 : -1.0);
    CHECK(std::abs(static_cast<double>(cnt) / N - F) <=
          4.0 * std::sqrt(F * (1.0 - F) / N));
  }
}

TEST_CASE("pareto sampler support and tail") {
  const double a = 6.0;
  EntryDistribution d = EntryDistribution::symmetric_pareto(a);
  const double xm = std::sqrt((a - 2.0) / a);
  const int N = 300000;
  Stream s(split(14, 0));
  int beyond3 = 0;
  double min_abs = 1e300;
  for (int i = 0; i < N; ++i) {
    double x = d.sample(s);
    min_abs = std::min(min_abs, std::abs(x));
    if (std::abs(x) > 3.0) ++beyond3;
  }
  CHECK(min_abs >= xm);
  double p = std::pow(xm / 3.0, a);  // frozen closed form 4.06442107402326881e-4
  CHECK(std::abs(p - 4.06442107402326881e-4) < 1e-15);
  CHECK(std::abs(static_cast<double>(beyond3) / N - p) <=
        4.0 * std::sqrt(p * (1.0 - p) / N));
}

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(EntryDistribution::student_t(4.0).validate(), ConfigError);
  CHECK_THROWS_AS(EntryDistribution::student_t(3.0).validate(), ConfigError);
  CHECK_THROWS_AS(EntryDistribution::student_t(5.0, 2.0).validate(), ConfigError);
  CHECK_THROWS_AS(EntryDistribution::student_t(5.0, -0.1).validate(), ConfigError);
  CHECK_THROWS_AS(EntryDistribution::symmetric_pareto(4.0).validate(), ConfigError);
  CHECK_THROWS_AS(EntryDistribution::symmetric_pareto(6.0, 2.5).validate(), ConfigError);
  CHECK_NOTHROW(EntryDistribution::student_t(5.0, 0.5).validate());
  CHECK_NOTHROW(EntryDistribution::gaussian().validate());
  CHECK_NOTHROW(EntryDistribution::rademacher().validate());
  CHECK(EntryDistribution::gaussian().claimed_delta == 4.0);
  CHECK(EntryDistribution::student_t(5.0).claimed_delta == Catch::Approx(0.5));
}

TEST_CASE("spec exponent and threshold") {
  EnsembleSpec g{256, EntryDistribution::gaussian(), 1.0};
  CHECK(g.alpha() == Catch::Approx(0.25));
  CHECK(g.threshold() == Catch::Approx(4.0));
  EnsembleSpec t{100, EntryDistribution::student_t(5.0, 0.5), 1.0};
  CHECK(t.alpha() == Catch::Approx(4.0 / 9.0));
  CHECK(t.threshold() == Catch::Approx(7.7426368268112706).margin(1e-12));
  // Oversized delta is capped at 4 in the exponent.
  EnsembleSpec h{256, EntryDistribution{Family::gaussian, 0.0, 7.0}, 1.0};
  CHECK(h.alpha() == Catch::Approx(0.25));
  CHECK_THROWS_AS((EnsembleSpec{0, EntryDistribution::gaussian(), 1.0}.validate()),
                  ConfigError);
  CHECK_THROWS_AS((EnsembleSpec{16, EntryDistribution::gaussian(), 0.0}.validate()),
                  ConfigError);
}

TEST_CASE("raw sampling is symmetric, scaled and reproducible") {
  EnsembleSpec spec{2, EntryDistribution::rademacher(), 1.0};
  auto s1 = sample_raw(spec, 42);
  auto s2 = sample_raw(spec, 42);
  auto s3 = sample_raw(spec, 43);
  REQUIRE(s1.W == s2.W);
  CHECK(s1.W != s3.W);
  const double r = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) {
      CHECK(std::abs(s1.W(j, k)) == Catch::Approx(r));
      CHECK(s1.W(j, k) == s1.W(k, j));
    }
  CHECK(s1.stage == PipelineStage::raw);
  CHECK(s1.seed == 42);

  // Entries are a pure function of (seed, row, column): traversal free.
  EnsembleSpec gs{40, EntryDistribution::gaussian(), 1.0};
  auto g = sample_raw(gs, 9001);
  for (auto [j, k] : {std::pair{0, 0}, {3, 17}, {39, 39}, {12, 5}}) {
    int lo = std::min(j, k), hi = std::max(j, k);
    Stream st(split(static_cast<std::uint64_t>(9001), lo, hi));
    double x = gs.dist.sample(st);
    REQUIRE(g.W(j, k) == x / std::sqrt(40.0));
  }
}

TEST_CASE("off diagonal mean at n=500") {
  EnsembleSpec spec{500, EntryDistribution::gaussian(), 1.0};
  auto s = sample_raw(spec, 2024);
  double sum = 0.0;
  long cnt = 0;
  for (int j = 0; j < 500; ++j)
    for (int k = j + 1; k < 500; ++k) {
      sum += s.W(j, k) * std::sqrt(500.0);
      ++cnt;
    }
  CHECK(std::abs(sum / cnt) <= 4.0 / std::sqrt(static_cast<double>(cnt)));
}

TEST_CASE("truncation zeroes exactly the oversized entries") {
  // Rademacher entries are below any threshold >= 1: identity.
  EnsembleSpec spec{16, EntryDistribution::rademacher(), 1.0};
  auto raw = sample_raw(spec, 5);
  auto tr = truncate(raw);
  CHECK(tr.stage == PipelineStage::truncated);
  CHECK(tr.truncated_count == 0);
  CHECK(tr.W == raw.W);

  // Heavy tail with a tight threshold: entries above T vanish, others survive.
  EnsembleSpec hs{48, EntryDistribution::symmetric_pareto(6.0), 0.25};
  auto hraw = sample_raw(hs, 77);
  auto htr = truncate(hraw);
  const double T = hs.threshold();
  long manual = 0;
  for (int j = 0; j < 48; ++j)
    for (int k = j; k < 48; ++k) {
      double x = hraw.W(j, k) * std::sqrt(48.0);
      if (std::abs(x) > T) {
        ++manual;
        REQUIRE(htr.W(j, k) == 0.0);
      } else {
        REQUIRE(htr.W(j, k) == hraw.W(j, k));
      }
    }
  CHECK(htr.truncated_count == manual);
  CHECK(manual > 0);

  CHECK_THROWS_AS(truncate(htr), ArgumentError);
}

TEST_CASE("truncated count matches the tail probability") {
  // Frozen quadrature values for standardized student t(5), delta 0.5, n=100:
  // threshold 7.7426368268112706, tail probability 1.7130042616809446e-4.
  EnsembleSpec spec{100, EntryDistribution::student_t(5.0, 0.5), 1.0};
  CHECK(spec.dist.tail_prob(spec.threshold()) ==
        Catch::Approx(1.7130042616809446e-4).margin(1e-12));
  const int seeds = 200;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < seeds; ++i) {
    auto tr = truncate(sample_raw(spec, split(31337, i)));
    double c = static_cast<double>(tr.truncated_count);
    sum += c;
    sum2 += c * c;
  }
  double mean = sum / seeds;
  double se = std::sqrt((sum2 / seeds - mean * mean) / seeds);
  double expected = 100.0 * 101.0 / 2.0 * 1.7130042616809446e-4;  // 0.86506715...
  CHECK(std::abs(mean - expected) <= 4.0 * se);
}

TEST_CASE("truncated moments against frozen references") {
  auto g = EntryDistribution::gaussian();
  CHECK(g.truncated_second_moment(2.0) ==
        Catch::Approx(0.738535870050889378).margin(1e-14));
  CHECK(g.truncated_second_moment(5.0) ==
        Catch::Approx(0.999984559501708899).margin(1e-14));
  CHECK(g.truncated_mean(2.0) == 0.0);

  auto p = EntryDistribution::symmetric_pareto(6.0);
  CHECK(p.truncated_second_moment(3.0) ==
        Catch::Approx(0.994513031550068587).margin(1e-14));
  CHECK(p.tail_prob(3.0) == Catch::Approx(4.06442107402326881e-4).margin(1e-16));
  // Below the support floor everything truncates.
  CHECK(p.truncated_second_moment(0.5) == 0.0);
  CHECK(p.tail_prob(0.5) == 1.0);

  auto r = EntryDistribution::rademacher();
  CHECK(r.truncated_second_moment(1.0) == 1.0);
  CHECK(r.truncated_second_moment(0.5) == 0.0);
  CHECK(r.tail_prob(1.0) == 0.0);
  CHECK(r.tail_prob(0.5) == 1.0);

  auto t = EntryDistribution::student_t(5.0, 0.5);
  const double T64 = 6.349604207872797899;  // 64^(4/9)
  CHECK(t.truncated_second_moment(T64) ==
        Catch::Approx(0.969709908952416854).margin(1e-10));
  CHECK(t.tail_prob(T64) == Catch::Approx(4.39622410306525035e-4).margin(1e-12));
  CHECK(t.tail_second_moment(T64) ==
        Catch::Approx(0.0302900910475831465).margin(1e-10));
}

TEST_CASE("recenter and rescale") {
  // Gaussian with threshold 10: sigma is 1 to well below 1e-6.
  EnsembleSpec spec{256, EntryDistribution::gaussian(), 2.5};
  CHECK(spec.threshold() == Catch::Approx(10.0));
  auto out = recenter_rescale(truncate(sample_raw(spec, 3)));
  CHECK(out.stage == PipelineStage::rescaled);
  CHECK(std::abs(out.sigma - 1.0) < 1e-6);
  CHECK(out.trunc_mean == 0.0);

  // Untruncated rademacher passes through bit for bit.
  EnsembleSpec rs{32, EntryDistribution::rademacher(), 1.0};
  auto raw = sample_raw(rs, 4);
  auto fin = recenter_rescale(truncate(raw));
  CHECK(fin.W == raw.W);
  CHECK(fin.sigma == 1.0);

  // Order of operations is enforced.
  CHECK_THROWS_AS(recenter_rescale(raw), ArgumentError);

  // Degenerate truncation (everything removed) is an internal error.
  EnsembleSpec dead{16, EntryDistribution::rademacher(), 0.1};
  CHECK_THROWS_AS(recenter_rescale(truncate(sample_raw(dead, 5))), InternalError);
}

TEST_CASE("variance deficit decays like 1/n for student t") {
  EntryDistribution t = EntryDistribution::student_t(5.0, 0.5);
  const double alpha = 4.0 / 9.0;
  // Frozen: 64 * (1 - sigma^2(64)) = 1.93856582704532.
  const double C = 1.93856582704532 * (1.0 + 1e-9);
  double prev = 1e300;
  for (int n : {64, 128, 256, 512}) {
    double T = std::pow(n, alpha);
    double deficit = 1.0 - t.truncated_second_moment(T);
    REQUIRE(deficit > 0.0);
    CHECK(n * deficit <= C);
    CHECK(n * deficit < prev);
    prev = n * deficit;
  }
}

TEST_CASE("pipeline driver and entry bound") {
  EnsembleSpec spec{64, EntryDistribution::student_t(5.0, 0.5), 1.0};
  auto s = run_pipeline(spec, 99, PipelineStage::rescaled);
  CHECK(s.stage == PipelineStage::rescaled);
  const double T = spec.threshold();
  double mx = 0.0;
  for (int j = 0; j < 64; ++j)
    for (int k = 0; k < 64; ++k) {
      CHECK(s.W(j, k) == s.W(k, j));
      mx = std::max(mx, std::abs(s.W(j, k)) * std::sqrt(64.0));
    }
  CHECK(mx <= s.bound_D_prime() * std::pow(64.0, spec.alpha()) + 1e-12);
  CHECK(s.bound_D_prime() >= 1.0);  // = (D + |mean|)/sigma with sigma < 1

  auto s2 = run_pipeline(spec, 99, PipelineStage::recentered);
  CHECK(s2.stage == PipelineStage::recentered);
  CHECK(s2.sigma == 1.0);  // rescaling not applied yet

  auto s0 = run_pipeline(spec, 99, PipelineStage::raw);
  CHECK(s0.W == sample_raw(spec, 99).W);
}

TEST_CASE("binary sample round trip") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "wigner_io_test";
  fs::create_directories(dir);
  auto path = (dir / "sample.bin").string();

  EnsembleSpec spec{24, EntryDistribution::gaussian(), 1.0};
  auto s = sample_raw(spec, 7);
  write_sample_bin(path, s.W);
  auto back = read_sample_bin(path);
  REQUIRE(back.rows() == 24);
  REQUIRE(back.cols() == 24);
  REQUIRE(back == s.W);

  // 16 byte header: magic then the dimension.
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  std::uint64_t n = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  CHECK(std::string(magic, 8) == "WIGSAMP1");
  CHECK(n == 24);

  // Corruption is detected.
  {
    std::ofstream bad((dir / "bad.bin").string(), std::ios::binary);
    bad.write("NOTMAGIC", 8);
    std::uint64_t m = 4;
    bad.write(reinterpret_cast<const char*>(&m), 8);
  }
  CHECK_THROWS_AS(read_sample_bin((dir / "bad.bin").string()), IoError);
  {
    std::ofstream shrt((dir / "short.bin").string(), std::ios::binary);
    shrt.write("WIGSAMP1", 8);
    std::uint64_t m = 100;
    shrt.write(reinterpret_cast<const char*>(&m), 8);
    double x = 1.0;
    shrt.write(reinterpret_cast<const char*>(&x), 8);
  }
  CHECK_THROWS_AS(read_sample_bin((dir / "short.bin").string()), IoError);
  CHECK_THROWS_AS(read_sample_bin((dir / "missing.bin").string()), IoError);
  fs::remove_all(dir);
}
