#pragma once

// Monte Carlo engine for the resolvent error experiments: grid construction,
// replica sampling, envelope fits, slope regressions and the spectral
// application statistics. A run is a pure function of its plan: replica r of
// size block b always draws from split(base_seed, b, r), results land in
// preallocated per-replica slots, and reductions walk those slots in replica
// order with compensated sums, so reports are byte-identical for any worker
// count.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wigner/config.hpp"
#include "wigner/ensemble.hpp"
#include "wigner/errors.hpp"
#include "wigner/io.hpp"
#include "wigner/pool.hpp"
#include "wigner/resolvent.hpp"
#include "wigner/rng.hpp"
#include "wigner/semicircle.hpp"
#include "wigner/spectral.hpp"

namespace wigner {

struct ExperimentPlan {
  EnsembleSpec ensemble;  // n is taken from n_values block by block
  PipelineStage stage = PipelineStage::raw;
  DomainD domain;
  std::vector<int> n_values;
  std::vector<double> u_values = {0.0};
  std::vector<int> p_values = {1};
  int v_per_decade = 12;
  double v_min_factor = 0.0;  // 0 means the domain floor constant A0
  double v_max = 0.0;         // 0 means the domain ceiling V
  double a1 = 1.0;            // admissibility: p <= a1 (nv)^{(1-2 alpha)/2}
  int replicas = 0;
  std::uint64_t base_seed = kDefaultSeed;
  double app_x = 0.0;    // short-scale window centre
  double app_xi = 50.0;  // short-scale window width

  double v_floor(int n) const {
    const double f = v_min_factor > 0.0 ? v_min_factor : domain.A0;
    return f / static_cast<double>(n);
  }
  double v_ceiling() const { return v_max > 0.0 ? v_max : domain.V; }
  double p_bound(int n, double v) const {
    const double expo = 0.5 * (1.0 - 2.0 * ensemble.alpha());
    return a1 * std::pow(static_cast<double>(n) * v, expo);
  }
};

// Log-spaced grid from the block floor to the ceiling, v_per_decade points
// per decade, both endpoints included.
inline std::vector<double> v_grid_for(const ExperimentPlan& plan, int n) {
  const double lo = plan.v_floor(n);
  const double hi = plan.v_ceiling();
  if (!(lo > 0.0) || !(hi > lo))
    throw ArgumentError("v grid needs 0 < v_min < v_max (n " +
                        std::to_string(n) + ")");
  if (plan.v_per_decade < 1)
    throw ArgumentError("v_per_decade must be >= 1");
  std::vector<double> grid{lo};
  const double l0 = std::log10(lo);
  const double l1 = std::log10(hi);
  const double step = 1.0 / plan.v_per_decade;
  for (int k = 1; l0 + k * step < l1 - 1e-12; ++k)
    grid.push_back(std::pow(10.0, l0 + k * step));
  grid.push_back(hi);
  return grid;
}

struct PlanChecks {
  std::vector<std::string> errors;        // structural problems
  std::vector<std::string> p_violations;  // inadmissible (n, v, p) cells
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty() && p_violations.empty(); }
};

inline PlanChecks validate_plan(const ExperimentPlan& plan) {
  PlanChecks c;
  auto err = [&](std::string s) { c.errors.push_back(std::move(s)); };
  if (plan.n_values.empty()) err("n_values must be nonempty");
  for (int n : plan.n_values)
    if (n < 2) err("n=" + std::to_string(n) + " is too small");
  if (plan.u_values.empty()) err("u_values must be nonempty");
  for (double u : plan.u_values)
    if (std::abs(u) > plan.domain.u0 + 1e-12)
      err("u=" + fmt_double(u) +
          " lies outside |u| <= u0=" + fmt_double(plan.domain.u0));
  if (plan.p_values.empty()) err("p_values must be nonempty");
  for (int p : plan.p_values) {
    if (p < 1)
      err("p=" + std::to_string(p) + " must be >= 1");
    else if (p > 6)
      c.warnings.push_back("p=" + std::to_string(p) +
                           " is large; moment estimates will be noisy");
  }
  if (plan.v_per_decade < 1) err("v_per_decade must be >= 1");
  if (plan.replicas < 2) err("replicas must be at least 2");
  if (!(plan.a1 > 0.0)) err("a1 must be positive");
  if (plan.v_min_factor > 0.0 && plan.v_min_factor < plan.domain.A0 - 1e-12)
    err("v_min_factor=" + fmt_double(plan.v_min_factor) +
        " is below the domain floor constant A0=" + fmt_double(plan.domain.A0));
  if (plan.v_ceiling() > plan.domain.V + 1e-12)
    err("v_max=" + fmt_double(plan.v_ceiling()) +
        " exceeds the domain ceiling V=" + fmt_double(plan.domain.V));
  try {
    plan.ensemble.dist.validate();
  } catch (const ConfigError& e) {
    for (const auto& i : e.issues()) err(i);
  }
  if (!c.errors.empty()) return c;

  for (int n : plan.n_values) {
    std::vector<double> grid;
    try {
      grid = v_grid_for(plan, n);
    } catch (const ArgumentError& e) {
      err(e.what());
      continue;
    }
    for (int p : plan.p_values) {
      for (double v : grid) {  // the smallest v is the tightest
        const double bound = plan.p_bound(n, v);
        if (static_cast<double>(p) > bound + 1e-12) {
          c.p_violations.push_back(
              "p=" + std::to_string(p) + " exceeds the admissible bound " +
              fmt_double(bound) + " at n=" + std::to_string(n) +
              " v=" + fmt_double(v));
          break;
        }
      }
    }
  }
  if (c.errors.empty() &&
      plan.n_values.size() * static_cast<std::size_t>(plan.replicas) <=
          (std::size_t{1} << 22)) {
    std::set<std::uint64_t> seen;
    for (std::size_t b = 0; b < plan.n_values.size(); ++b)
      for (int r = 0; r < plan.replicas; ++r)
        if (!seen.insert(split(plan.base_seed, b, static_cast<std::uint64_t>(r)))
                 .second)
          err("replica seed collision at block " + std::to_string(b) +
              " replica " + std::to_string(r));
  }
  return c;
}

// One grid cell of a local law run: Monte Carlo moments of Lambda = m_n - s
// at z = u + iv, with the fitted envelope value and the group slope echoed.
struct CellStat {
  int n = 0;
  double u = 0.0;
  double v = 0.0;
  int p = 1;
  double nv = 0.0;
  double mean_abs = 0.0;  // E |Lambda|^p
  double se_abs = 0.0;
  double mean_im = 0.0;  // E |Im Lambda|^p
  double se_im = 0.0;
  double envelope = 0.0;
  double psi = 0.0;          // Im s(z) + p^2/(nv)
  double slope = 0.0;        // 0 when the (n,u,p) group has too few points
  int dominant_term = 0;     // edge runs: largest of the four bound terms
};

struct SlopeFit {
  int n = 0;
  double u = 0.0;
  int p = 1;
  double slope = 0.0;
  double half_width = 0.0;  // 1.96 standard errors of the OLS slope
  int points = 0;
};

struct LocalLawReport {
  std::string kind;  // "locallaw" or "edgelaw"
  std::string family;
  std::string stage;
  std::uint64_t base_seed = 0;
  int replicas = 0;
  double fitted_C = 0.0;
  std::vector<std::string> preamble;  // dropped cells and fit notes
  std::vector<CellStat> cells;
  std::vector<SlopeFit> slopes;
};

struct EnvelopeCell {
  double nv = 0.0;
  int p = 1;
  double mean = 0.0;
};

struct EnvelopeFit {
  double C = 0.0;
  std::vector<double> residuals;  // log mean^{1/p} - log(C p^2 / nv), <= 0
};

// Smallest C with mean^{1/p} <= C p^2/(nv) across every cell; the maximum is
// attained with residual zero at the binding cell.
inline EnvelopeFit fit_envelope(const std::vector<EnvelopeCell>& cells) {
  if (cells.size() < 3)
    throw ArgumentError("envelope fit needs at least 3 cells");
  std::set<double> distinct;
  for (const auto& c : cells) {
    if (!(c.mean > 0.0) || !std::isfinite(c.mean))
      throw NumericError("envelope fit needs positive finite cell means");
    if (c.p < 1) throw ArgumentError("envelope fit needs p >= 1");
    distinct.insert(c.nv);
  }
  if (distinct.size() < 2)
    throw NumericError("envelope fit needs at least two distinct nv values");
  double C = 0.0;
  for (const auto& c : cells)
    C = std::max(C, std::pow(c.mean, 1.0 / c.p) * c.nv / (c.p * c.p));
  EnvelopeFit fit;
  fit.C = C;
  fit.residuals.reserve(cells.size());
  for (const auto& c : cells)
    fit.residuals.push_back(std::log(std::pow(c.mean, 1.0 / c.p)) -
                            std::log(C * c.p * c.p / c.nv));
  return fit;
}

namespace detail {

// The four bound terms at the spectral edge, gamma = ||u| - 2|.
inline std::array<double, 4> edge_terms(int n, double gamma, double v, int p) {
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  const double gv = gamma + v;
  std::array<double, 4> t{};
  t[0] = std::pow(pd / (nd * gv), pd);
  t[1] = std::pow(pd, 3.0 * pd) /
         (std::pow(nd * v, 2.0 * pd) * std::pow(gv, pd / 2.0));
  t[2] = 1.0 / (std::pow(nd, pd) * std::pow(v, pd / 2.0) * std::pow(gv, pd / 2.0));
  t[3] = std::pow(pd, pd) /
         (std::pow(nd * v, 1.5 * pd) * std::pow(gv, pd / 4.0));
  return t;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Two-pass compensated mean and standard error, walked in replica order.
inline MeanSe reduce_slots(const double* x, int replicas) {
  KahanSum s1;
  for (int r = 0; r < replicas; ++r) s1.add(x[r]);
  MeanSe m;
  m.mean = s1.value() / replicas;
  KahanSum s2;
  for (int r = 0; r < replicas; ++r) {
    const double d = x[r] - m.mean;
    s2.add(d * d);
  }
  if (replicas > 1)
    m.se = std::sqrt(s2.value() / (replicas - 1) / replicas);
  return m;
}

struct GridCell {
  int block = 0;
  int n = 0;
  double u = 0.0;
  double v = 0.0;
  int p = 1;
  std::size_t z_slot = 0;  // index into the per-run z list
};

struct GridLayout {
  std::vector<std::complex<double>> zs;      // deterministic z order
  std::vector<std::size_t> z_block_offset;   // first z slot of each block
  std::vector<GridCell> cells;
  std::vector<std::string> dropped;
};

inline GridLayout build_grid(const ExperimentPlan& plan) {
  GridLayout g;
  for (std::size_t b = 0; b < plan.n_values.size(); ++b) {
    const int n = plan.n_values[b];
    g.z_block_offset.push_back(g.zs.size());
    const auto vs = v_grid_for(plan, n);
    for (double u : plan.u_values) {
      for (double v : vs) {
        bool any = false;
        const std::size_t slot = g.zs.size();
        for (int p : plan.p_values) {
          if (static_cast<double>(p) > plan.p_bound(n, v) + 1e-12) {
            g.dropped.push_back("dropped cell n=" + std::to_string(n) +
                                " u=" + fmt_double(u) + " v=" + fmt_double(v) +
                                " p=" + std::to_string(p) +
                                ": exceeds the admissible moment bound " +
                                fmt_double(plan.p_bound(n, v)));
            continue;
          }
          GridCell c;
          c.block = static_cast<int>(b);
          c.n = n;
          c.u = u;
          c.v = v;
          c.p = p;
          c.z_slot = slot;
          g.cells.push_back(c);
          any = true;
        }
        if (any) g.zs.push_back({u, v});
      }
    }
  }
  return g;
}

// Lambda(z) for one replica at every z of its block. Small matrices go
// through the resolvent with an eigenvalue crosscheck; large ones use the
// eigenvalue route alone.
inline void replica_lambdas(const ExperimentPlan& plan, int n,
                            std::uint64_t seed,
                            const std::complex<double>* zs, std::size_t nz,
                            std::complex<double>* out) {
  EnsembleSpec spec = plan.ensemble;
  spec.n = n;
  const WignerSample sample = run_pipeline(spec, seed, plan.stage);
  const Eigen::VectorXd lam = eigenvalues_of(sample);
  for (std::size_t i = 0; i < nz; ++i) {
    std::complex<double> m = stieltjes_empirical(lam, zs[i]);
    if (n <= 200) {
      const std::complex<double> mr = resolvent_at(sample.W, zs[i], seed).m;
      if (std::abs(mr - m) > 1e-8)
        throw NumericError("resolvent and eigenvalue routes disagree (n " +
                           std::to_string(n) + ", seed " +
                           std::to_string(seed) + ", z " + fmt_double(zs[i].real()) +
                           "+" + fmt_double(zs[i].imag()) + "i)");
      m = mr;
    }
    out[i] = m - semicircle::stieltjes(zs[i]);
  }
}

// OLS of y on x with a 95% half width for the slope.
inline bool ols_slope(const std::vector<double>& x, const std::vector<double>& y,
                      double& slope, double& half_width) {
  const std::size_t m = x.size();
  if (m < 3) return false;
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  if (!(sxx > 0.0)) return false;
  slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - ybar - slope * (x[i] - xbar);
    ssr += e * e;
  }
  const double s2 = ssr / static_cast<double>(m - 2);
  half_width = 1.96 * std::sqrt(s2 / sxx);
  return true;
}

inline LocalLawReport run_grid(const ExperimentPlan& plan, int workers,
                               bool edge) {
  auto checks = validate_plan(plan);
  if (!checks.errors.empty()) throw ArgumentError(checks.errors.front());
  if (edge) {
    if (plan.stage != PipelineStage::rescaled)
      throw ArgumentError("edge law runs need the rescaled pipeline stage");
    for (double u : plan.u_values)
      if (std::abs(u) < 2.0 - 1e-12 || std::abs(u) > plan.domain.u0 + 1e-12)
        throw ArgumentError("edge law energies need 2 <= |u| <= u0 (got u=" +
                            fmt_double(u) + ")");
  }

  const GridLayout grid = build_grid(plan);
  const int R = plan.replicas;
  const std::size_t blocks = plan.n_values.size();

  // Per-replica slots: lambda values per z, then per-cell moment slots.
  std::vector<std::complex<double>> lambda(grid.zs.size() * static_cast<std::size_t>(R));
  std::vector<std::size_t> z_count(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t end =
        b + 1 < blocks ? grid.z_block_offset[b + 1] : grid.zs.size();
    z_count[b] = end - grid.z_block_offset[b];
  }
  parallel_for(workers, blocks * static_cast<std::size_t>(R),
               [&](std::size_t t) {
                 const std::size_t b = t / static_cast<std::size_t>(R);
                 const int r = static_cast<int>(t % static_cast<std::size_t>(R));
                 const std::uint64_t seed =
                     split(plan.base_seed, b, static_cast<std::uint64_t>(r));
                 const std::size_t off = grid.z_block_offset[b];
                 std::vector<std::complex<double>> vals(z_count[b]);
                 replica_lambdas(plan, plan.n_values[b], seed, grid.zs.data() + off,
                                 z_count[b], vals.data());
                 for (std::size_t i = 0; i < z_count[b]; ++i)
                   lambda[(off + i) * static_cast<std::size_t>(R) +
                          static_cast<std::size_t>(r)] = vals[i];
               });

  LocalLawReport rep;
  rep.kind = edge ? "edgelaw" : "locallaw";
  rep.family = family_name(plan.ensemble.dist.family);
  rep.stage = stage_name(plan.stage);
  rep.base_seed = plan.base_seed;
  rep.replicas = R;
  rep.preamble = grid.dropped;
  for (const auto& w : checks.warnings) rep.preamble.push_back(w);

  std::vector<double> slot_abs(static_cast<std::size_t>(R));
  std::vector<double> slot_im(static_cast<std::size_t>(R));
  rep.cells.reserve(grid.cells.size());
  for (const auto& gc : grid.cells) {
    for (int r = 0; r < R; ++r) {
      const std::complex<double> L =
          lambda[gc.z_slot * static_cast<std::size_t>(R) + static_cast<std::size_t>(r)];
      slot_abs[static_cast<std::size_t>(r)] = std::pow(std::abs(L), gc.p);
      slot_im[static_cast<std::size_t>(r)] = std::pow(std::abs(L.imag()), gc.p);
    }
    const MeanSe a = reduce_slots(slot_abs.data(), R);
    const MeanSe i = reduce_slots(slot_im.data(), R);
    CellStat c;
    c.n = gc.n;
    c.u = gc.u;
    c.v = gc.v;
    c.p = gc.p;
    c.nv = gc.n * gc.v;
    c.mean_abs = a.mean;
    c.se_abs = a.se;
    c.mean_im = i.mean;
    c.se_im = i.se;
    c.psi = semicircle::stieltjes({gc.u, gc.v}).imag() +
            static_cast<double>(gc.p) * gc.p / c.nv;
    rep.cells.push_back(c);
  }

  // Envelope: bulk runs bound E|Lambda|^p by (C p^2/(nv))^p; edge runs bound
  // E|Im Lambda|^p by C^p times the four-term sum.
  if (edge) {
    double C = 0.0;
    for (const auto& c : rep.cells) {
      const auto t = edge_terms(c.n, semicircle::gamma_edge(c.u), c.v, c.p);
      const double s = t[0] + t[1] + t[2] + t[3];
      C = std::max(C, std::pow(c.mean_im / s, 1.0 / c.p));
    }
    rep.fitted_C = C;
    for (auto& c : rep.cells) {
      const auto t = edge_terms(c.n, semicircle::gamma_edge(c.u), c.v, c.p);
      c.envelope = std::pow(C, c.p) * (t[0] + t[1] + t[2] + t[3]);
      c.dominant_term =
          static_cast<int>(std::max_element(t.begin(), t.end()) - t.begin()) + 1;
    }
  } else {
    std::vector<EnvelopeCell> ec;
    ec.reserve(rep.cells.size());
    for (const auto& c : rep.cells) ec.push_back({c.nv, c.p, c.mean_abs});
    try {
      const auto fit = fit_envelope(ec);
      rep.fitted_C = fit.C;
      for (auto& c : rep.cells)
        c.envelope = std::pow(fit.C * c.p * c.p / c.nv, c.p);
    } catch (const std::exception& e) {
      rep.fitted_C = 0.0;
      for (auto& c : rep.cells)
        c.envelope = std::numeric_limits<double>::quiet_NaN();
      rep.preamble.push_back(std::string("envelope fit skipped: ") + e.what());
    }
  }

  // One slope per (n, u, p) group in first-appearance order, regressing
  // log mean^{1/p} on log(nv); the edge statistic is the imaginary part.
  struct GroupKey {
    int n;
    double u;
    int p;
    bool operator==(const GroupKey&) const = default;
  };
  std::vector<GroupKey> keys;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < rep.cells.size(); ++j) {
    const GroupKey k{rep.cells[j].n, rep.cells[j].u, rep.cells[j].p};
    const auto it = std::find(keys.begin(), keys.end(), k);
    if (it == keys.end()) {
      keys.push_back(k);
      groups.emplace_back();
      groups.back().push_back(j);
    } else {
      groups[static_cast<std::size_t>(it - keys.begin())].push_back(j);
    }
  }
  for (std::size_t g = 0; g < keys.size(); ++g) {
    std::vector<double> xs, ys;
    for (std::size_t j : groups[g]) {
      const CellStat& c = rep.cells[j];
      const double mean = edge ? c.mean_im : c.mean_abs;
      if (!(mean > 0.0) || !std::isfinite(mean)) continue;
      xs.push_back(std::log(c.nv));
      ys.push_back(std::log(mean) / c.p);
    }
    double slope = 0.0, half = 0.0;
    if (!ols_slope(xs, ys, slope, half)) continue;
    SlopeFit f;
    f.n = keys[g].n;
    f.u = keys[g].u;
    f.p = keys[g].p;
    f.slope = slope;
    f.half_width = half;
    f.points = static_cast<int>(xs.size());
    rep.slopes.push_back(f);
    for (std::size_t j : groups[g]) rep.cells[j].slope = slope;
  }
  return rep;
}

}  // namespace detail

inline LocalLawReport run_local_law(const ExperimentPlan& plan, int workers = 1) {
  return detail::run_grid(plan, workers, false);
}

inline LocalLawReport run_edge_law(const ExperimentPlan& plan, int workers = 1) {
  return detail::run_grid(plan, workers, true);
}

struct AppSampleRow {
  int n = 0;
  std::uint64_t seed = 0;
  double delta = 0.0;        // Kolmogorov distance to the semicircle cdf
  double rigidity = 0.0;     // max normalized eigenvalue residual, bulk
  double deloc = 0.0;        // n max |u_jk|^2
  double short_scale = 0.0;  // windowed counting density at (x, xi)
};

struct AppRow {
  int n = 0;
  double mean_delta = 0.0, se_delta = 0.0;
  double mean_rigidity = 0.0, se_rigidity = 0.0;
  double mean_deloc = 0.0, se_deloc = 0.0;
  double mean_short = 0.0, se_short = 0.0;
};

struct AppRatio {
  int n_from = 0, n_to = 0;
  double delta_ratio = 0.0;
  double rigidity_ratio = 0.0;
  double deloc_per_log_ratio = 0.0;  // of deloc / log n
};

struct ApplicationsReport {
  std::string family;
  std::string stage;
  std::uint64_t base_seed = 0;
  int replicas = 0;
  double x = 0.0;
  double xi = 0.0;
  std::vector<AppSampleRow> samples;
  std::vector<AppRow> rows;
  std::vector<AppRatio> ratios;
};

inline ApplicationsReport run_applications(const ExperimentPlan& plan,
                                           int workers = 1) {
  std::vector<int> ns = plan.n_values;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 2)
    throw ArgumentError("applications need at least two distinct n values");
  if (plan.replicas < 2) throw ArgumentError("replicas must be at least 2");
  if (!(plan.app_xi > 0.0)) throw ArgumentError("xi must be positive");
  plan.ensemble.dist.validate();

  const int R = plan.replicas;
  ApplicationsReport rep;
  rep.family = family_name(plan.ensemble.dist.family);
  rep.stage = stage_name(plan.stage);
  rep.base_seed = plan.base_seed;
  rep.replicas = R;
  rep.x = plan.app_x;
  rep.xi = plan.app_xi;
  rep.samples.resize(ns.size() * static_cast<std::size_t>(R));

  parallel_for(workers, ns.size() * static_cast<std::size_t>(R),
               [&](std::size_t t) {
                 const std::size_t b = t / static_cast<std::size_t>(R);
                 const int r = static_cast<int>(t % static_cast<std::size_t>(R));
                 const std::uint64_t seed =
                     split(plan.base_seed, b, static_cast<std::uint64_t>(r));
                 EnsembleSpec spec = plan.ensemble;
                 spec.n = ns[b];
                 const WignerSample s = run_pipeline(spec, seed, plan.stage);
                 const SpectralDecomposition dec = decompose(s);
                 AppSampleRow row;
                 row.n = ns[b];
                 row.seed = seed;
                 row.delta = kolmogorov_distance_to_semicircle(dec.eigenvalues);
                 row.rigidity = rigidity_residuals(dec.eigenvalues).max_normalized;
                 row.deloc = delocalization_stat(dec);
                 row.short_scale =
                     short_scale_density(dec.eigenvalues, plan.app_x, plan.app_xi);
                 rep.samples[t] = row;
               });

  std::vector<double> slot(static_cast<std::size_t>(R));
  for (std::size_t b = 0; b < ns.size(); ++b) {
    AppRow row;
    row.n = ns[b];
    auto stat = [&](double AppSampleRow::* field, double& mean, double& se) {
      for (int r = 0; r < R; ++r)
        slot[static_cast<std::size_t>(r)] =
            rep.samples[b * static_cast<std::size_t>(R) +
                        static_cast<std::size_t>(r)].*field;
      const auto ms = detail::reduce_slots(slot.data(), R);
      mean = ms.mean;
      se = ms.se;
    };
    stat(&AppSampleRow::delta, row.mean_delta, row.se_delta);
    stat(&AppSampleRow::rigidity, row.mean_rigidity, row.se_rigidity);
    stat(&AppSampleRow::deloc, row.mean_deloc, row.se_deloc);
    stat(&AppSampleRow::short_scale, row.mean_short, row.se_short);
    rep.rows.push_back(row);
  }
  for (std::size_t b = 1; b < rep.rows.size(); ++b) {
    const AppRow& lo = rep.rows[b - 1];
    const AppRow& hi = rep.rows[b];
    AppRatio ra;
    ra.n_from = lo.n;
    ra.n_to = hi.n;
    ra.delta_ratio = hi.mean_delta / lo.mean_delta;
    ra.rigidity_ratio = hi.mean_rigidity / lo.mean_rigidity;
    ra.deloc_per_log_ratio = (hi.mean_deloc / std::log(hi.n)) /
                             (lo.mean_deloc / std::log(lo.n));
    rep.ratios.push_back(ra);
  }
  return rep;
}

inline std::string report_json(const LocalLawReport& rep) {
  nlohmann::ordered_json j;
  j["kind"] = rep.kind;
  j["family"] = rep.family;
  j["stage"] = rep.stage;
  j["base_seed"] = rep.base_seed;
  j["replicas"] = rep.replicas;
  j["fitted_C"] = rep.fitted_C;
  j["preamble"] = rep.preamble;
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : rep.cells) {
    nlohmann::ordered_json o;
    o["n"] = c.n;
    o["u"] = c.u;
    o["v"] = c.v;
    o["p"] = c.p;
    o["nv"] = c.nv;
    o["mean_abs"] = c.mean_abs;
    o["se_abs"] = c.se_abs;
    o["mean_im"] = c.mean_im;
    o["se_im"] = c.se_im;
    o["envelope"] = c.envelope;
    o["psi"] = c.psi;
    o["slope"] = c.slope;
    if (rep.kind == "edgelaw") o["dominant_term"] = c.dominant_term;
    j["cells"].push_back(o);
  }
  j["slopes"] = nlohmann::ordered_json::array();
  for (const auto& f : rep.slopes) {
    nlohmann::ordered_json o;
    o["n"] = f.n;
    o["u"] = f.u;
    o["p"] = f.p;
    o["slope"] = f.slope;
    o["half_width"] = f.half_width;
    o["points"] = f.points;
    j["slopes"].push_back(o);
  }
  return j.dump(2) + "\n";
}

inline void report_csv(const LocalLawReport& rep, const std::string& path) {
  CsvWriter out(path);
  out.row({"n", "u", "v", "p", "mean", "se", "envelope", "slope"});
  const bool edge = rep.kind == "edgelaw";
  for (const auto& c : rep.cells)
    out.row({std::to_string(c.n), fmt_double(c.u), fmt_double(c.v),
             std::to_string(c.p), fmt_double(edge ? c.mean_im : c.mean_abs),
             fmt_double(edge ? c.se_im : c.se_abs), fmt_double(c.envelope),
             fmt_double(c.slope)});
}

inline std::string report_json(const ApplicationsReport& rep) {
  nlohmann::ordered_json j;
  j["kind"] = "applications";
  j["family"] = rep.family;
  j["stage"] = rep.stage;
  j["base_seed"] = rep.base_seed;
  j["replicas"] = rep.replicas;
  j["x"] = rep.x;
  j["xi"] = rep.xi;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    nlohmann::ordered_json o;
    o["n"] = r.n;
    o["mean_delta"] = r.mean_delta;
    o["se_delta"] = r.se_delta;
    o["mean_rigidity"] = r.mean_rigidity;
    o["se_rigidity"] = r.se_rigidity;
    o["mean_deloc"] = r.mean_deloc;
    o["se_deloc"] = r.se_deloc;
    o["mean_short"] = r.mean_short;
    o["se_short"] = r.se_short;
    j["rows"].push_back(o);
  }
  j["ratios"] = nlohmann::ordered_json::array();
  for (const auto& r : rep.ratios) {
    nlohmann::ordered_json o;
    o["n_from"] = r.n_from;
    o["n_to"] = r.n_to;
    o["delta_ratio"] = r.delta_ratio;
    o["rigidity_ratio"] = r.rigidity_ratio;
    o["deloc_per_log_ratio"] = r.deloc_per_log_ratio;
    j["ratios"].push_back(o);
  }
  j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : rep.samples) {
    nlohmann::ordered_json o;
    o["n"] = s.n;
    o["seed"] = s.seed;
    o["delta"] = s.delta;
    o["rigidity"] = s.rigidity;
    o["deloc"] = s.deloc;
    o["short_scale"] = s.short_scale;
    j["samples"].push_back(o);
  }
  return j.dump(2) + "\n";
}

inline void report_csv(const ApplicationsReport& rep, const std::string& path) {
  CsvWriter out(path);
  out.row({"n", "seed", "delta", "rigidity", "deloc", "short_scale"});
  for (const auto& s : rep.samples)
    out.row({std::to_string(s.n), std::to_string(s.seed), fmt_double(s.delta),
             fmt_double(s.rigidity), fmt_double(s.deloc),
             fmt_double(s.short_scale)});
}

struct PlanBundle {
  ExperimentPlan plan;
  std::string experiment = "locallaw";
  bool has_slope_check = false;
  double slope_target = -1.0;
  double slope_tol = 0.2;
  std::vector<std::string> warnings;
};

// Reads a plan from a config document; collects every problem (unknown keys,
// type errors, structural and admissibility violations) before throwing.
inline PlanBundle load_plan(ConfigDoc& doc) {
  PlanBundle b;
  ExperimentPlan& plan = b.plan;

  const std::string fam = doc.get_string("ensemble", "family", "gaussian");
  const bool has_param = doc.has("ensemble", "param");
  const bool has_delta = doc.has("ensemble", "delta");
  const double param = doc.get_double("ensemble", "param", 0.0);
  const double delta = doc.get_double("ensemble", "delta", 0.0);
  Family family = Family::gaussian;
  if (!family_from_name(fam, family))
    doc.note("[ensemble] family: unknown family '" + fam + "'");
  switch (family) {
    case Family::rademacher:
      plan.ensemble.dist = EntryDistribution::rademacher();
      break;
    case Family::gaussian:
      plan.ensemble.dist = EntryDistribution::gaussian();
      break;
    case Family::student_t:
      if (!has_param) doc.note("[ensemble] param: required for student_t");
      plan.ensemble.dist = has_delta ? EntryDistribution::student_t(param, delta)
                                     : EntryDistribution::student_t(param);
      break;
    case Family::symmetric_pareto:
      if (!has_param)
        doc.note("[ensemble] param: required for symmetric_pareto");
      plan.ensemble.dist = has_delta
                               ? EntryDistribution::symmetric_pareto(param, delta)
                               : EntryDistribution::symmetric_pareto(param);
      break;
  }
  if (has_param && (family == Family::gaussian || family == Family::rademacher))
    doc.note("[ensemble] param: not meaningful for " + fam);
  if (has_delta && (family == Family::gaussian || family == Family::rademacher))
    plan.ensemble.dist.claimed_delta = delta;
  plan.ensemble.truncation_D = doc.get_double("ensemble", "truncation_d", 1.0);
  const std::string stage = doc.get_string("ensemble", "stage", "raw");
  if (!stage_from_name(stage, plan.stage))
    doc.note("[ensemble] stage: unknown stage '" + stage + "'");

  plan.domain.u0 = doc.get_double("domain", "u0", plan.domain.u0);
  plan.domain.V = doc.get_double("domain", "v", plan.domain.V);
  plan.domain.A0 = doc.get_double("domain", "a0", plan.domain.A0);

  plan.n_values = doc.require_ints("grid", "n_values");
  if (doc.has("grid", "u_values"))
    plan.u_values = doc.require_doubles("grid", "u_values");
  if (doc.has("grid", "p_values"))
    plan.p_values = doc.require_ints("grid", "p_values");
  plan.v_per_decade = doc.get_int("grid", "v_per_decade", plan.v_per_decade);
  plan.v_max = doc.get_double("grid", "v_max", 0.0);
  plan.v_min_factor = doc.get_double("grid", "v_min_factor", 0.0);
  plan.a1 = doc.get_double("grid", "a1", plan.a1);

  b.experiment = doc.get_string("run", "experiment", "locallaw");
  if (b.experiment != "locallaw" && b.experiment != "edgelaw" &&
      b.experiment != "applications")
    doc.note("[run] experiment: must be locallaw, edgelaw or applications");
  plan.replicas = doc.get_int("run", "replicas", 0);
  plan.base_seed = doc.get_u64("run", "base_seed", kDefaultSeed);
  plan.app_x = doc.get_double("run", "x", plan.app_x);
  plan.app_xi = doc.get_double("run", "xi", plan.app_xi);

  b.has_slope_check = doc.has("checks", "slope_target");
  if (b.has_slope_check) {
    b.slope_target = doc.require_double("checks", "slope_target");
    b.slope_tol = doc.get_double("checks", "slope_tol", b.slope_tol);
  }

  const auto checks = validate_plan(plan);
  for (const auto& e : checks.errors) doc.note(e);
  for (const auto& v : checks.p_violations) doc.note(v);
  b.warnings = checks.warnings;
  doc.finish();
  return b;
}

// Deterministic rendering of the effective plan; hashing this text gives the
// manifest's config fingerprint, and reloading it reproduces the plan.
inline std::string canonical_config(const PlanBundle& b) {
  const ExperimentPlan& plan = b.plan;
  std::string s;
  auto kv = [&](const std::string& k, const std::string& v) {
    s += k + " = " + v + "\n";
  };
  s += "[ensemble]\n";
  kv("family", family_name(plan.ensemble.dist.family));
  if (plan.ensemble.dist.family == Family::student_t ||
      plan.ensemble.dist.family == Family::symmetric_pareto)
    kv("param", fmt_double(plan.ensemble.dist.param));
  kv("delta", fmt_double(plan.ensemble.dist.claimed_delta));
  kv("truncation_d", fmt_double(plan.ensemble.truncation_D));
  kv("stage", stage_name(plan.stage));
  s += "\n[domain]\n";
  kv("u0", fmt_double(plan.domain.u0));
  kv("v", fmt_double(plan.domain.V));
  kv("a0", fmt_double(plan.domain.A0));
  s += "\n[grid]\n";
  std::string ns;
  for (std::size_t i = 0; i < plan.n_values.size(); ++i)
    ns += (i ? " " : "") + std::to_string(plan.n_values[i]);
  kv("n_values", ns);
  std::string us;
  for (std::size_t i = 0; i < plan.u_values.size(); ++i)
    us += (i ? " " : "") + fmt_double(plan.u_values[i]);
  kv("u_values", us);
  std::string ps;
  for (std::size_t i = 0; i < plan.p_values.size(); ++i)
    ps += (i ? " " : "") + std::to_string(plan.p_values[i]);
  kv("p_values", ps);
  kv("v_per_decade", std::to_string(plan.v_per_decade));
  kv("v_max", fmt_double(plan.v_ceiling()));
  kv("v_min_factor",
     fmt_double(plan.v_min_factor > 0.0 ? plan.v_min_factor : plan.domain.A0));
  kv("a1", fmt_double(plan.a1));
  s += "\n[run]\n";
  kv("experiment", b.experiment);
  kv("replicas", std::to_string(plan.replicas));
  kv("base_seed", std::to_string(plan.base_seed));
  kv("x", fmt_double(plan.app_x));
  kv("xi", fmt_double(plan.app_xi));
  if (b.has_slope_check) {
    s += "\n[checks]\n";
    kv("slope_target", fmt_double(b.slope_target));
    kv("slope_tol", fmt_double(b.slope_tol));
  }
  return s;
}

}  // namespace wigner
