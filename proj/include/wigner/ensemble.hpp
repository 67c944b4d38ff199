#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wigner/errors.hpp"
#include "wigner/quadrature.hpp"
#include "wigner/rng.hpp"

namespace wigner {

// Entry laws. All four families are symmetric and standardized to mean zero,
// unit variance; heavy-tailed families carry the tail parameter and the
// claimed moment surplus delta (finite absolute moment of order 4 + delta).

enum class Family { rademacher, gaussian, student_t, symmetric_pareto };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::rademacher: return "rademacher";
    case Family::gaussian: return "gaussian";
    case Family::student_t: return "student_t";
    case Family::symmetric_pareto: return "symmetric_pareto";
  }
  return "?";
}

inline bool family_from_name(const std::string& s, Family& out) {
  for (Family f : {Family::rademacher, Family::gaussian, Family::student_t,
                   Family::symmetric_pareto}) {
    if (s == family_name(f)) {
      out = f;
      return true;
    }
  }
  return false;
}

namespace detail {
inline constexpr double kPi = 3.14159265358979323846;

// Density of student t with df degrees of freedom rescaled to unit variance.
struct StudentDensity {
  double df;
  double c;     // sqrt(df/(df-2))
  double norm;  // Gamma((df+1)/2) / (sqrt(df pi) Gamma(df/2))
  explicit StudentDensity(double df_)
      : df(df_),
        c(std::sqrt(df_ / (df_ - 2.0))),
        norm(std::exp(std::lgamma((df_ + 1.0) / 2.0) - std::lgamma(df_ / 2.0)) /
             std::sqrt(df_ * kPi)) {}
  double operator()(double x) const {
    const double t = c * x;
    return c * norm * std::pow(1.0 + t * t / df, -(df + 1.0) / 2.0);
  }
};
}  // namespace detail

struct EntryDistribution {
  Family family = Family::gaussian;
  double param = 0.0;  // df for student_t, tail index for symmetric_pareto
  double claimed_delta = 4.0;

  static EntryDistribution rademacher() { return {Family::rademacher, 0.0, 4.0}; }
  static EntryDistribution gaussian() { return {Family::gaussian, 0.0, 4.0}; }
  static EntryDistribution student_t(double df) {
    return {Family::student_t, df, (df - 4.0) / 2.0};
  }
  static EntryDistribution student_t(double df, double delta) {
    return {Family::student_t, df, delta};
  }
  static EntryDistribution symmetric_pareto(double a) {
    return {Family::symmetric_pareto, a, (a - 4.0) / 2.0};
  }
  static EntryDistribution symmetric_pareto(double a, double delta) {
    return {Family::symmetric_pareto, a, delta};
  }

  double delta_cap() const { return std::min(claimed_delta, 4.0); }

  void validate() const {
    std::vector<std::string> issues;
    if (!(claimed_delta > 0.0)) issues.push_back("claimed_delta must be positive");
    if (family == Family::student_t) {
      if (!(param > 4.0)) issues.push_back("student_t requires df > 4");
      else if (!(claimed_delta < param - 4.0))
        issues.push_back("claimed_delta must be below df - 4");
    }
    if (family == Family::symmetric_pareto) {
      if (!(param > 4.0)) issues.push_back("symmetric_pareto requires tail index > 4");
      else if (!(claimed_delta < param - 4.0))
        issues.push_back("claimed_delta must be below tail_index - 4");
    }
    if (!issues.empty()) throw ConfigError(issues);
  }

  // One draw from the entry's own stream. Rejection steps stay inside the
  // stream, so per-entry independence survives them.
  double sample(Stream& s) const {
    switch (family) {
      case Family::rademacher:
        return s.next_bit() ? 1.0 : -1.0;
      case Family::gaussian: {
        const double u1 = s.next_unit_pos();
        const double u2 = s.next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * detail::kPi * u2);
      }
      case Family::student_t: {
        // Bailey's polar method, then rescale to unit variance.
        double u, v, w;
        do {
          u = 2.0 * s.next_unit() - 1.0;
          v = 2.0 * s.next_unit() - 1.0;
          w = u * u + v * v;
        } while (w > 1.0 || w == 0.0);
        const double t =
            u * std::sqrt(param * (std::pow(w, -2.0 / param) - 1.0) / w);
        return t / std::sqrt(param / (param - 2.0));
      }
      case Family::symmetric_pareto: {
        const double xm = std::sqrt((param - 2.0) / param);
        const double mag = xm * std::pow(s.next_unit_pos(), -1.0 / param);
        return s.next_bit() ? mag : -mag;
      }
    }
    throw InternalError("unhandled family");
  }

  // E X 1[|X| <= T]; zero for every supported family by symmetry.
  double truncated_mean(double) const { return 0.0; }

  // E X^2 1[|X| <= T]. Closed forms except student_t, which integrates the
  // density to absolute tolerance 1e-12.
  double truncated_second_moment(double T) const {
    if (T <= 0.0) return 0.0;
    switch (family) {
      case Family::rademacher:
        return T >= 1.0 ? 1.0 : 0.0;
      case Family::gaussian: {
        const double phi = std::exp(-0.5 * T * T) / std::sqrt(2.0 * detail::kPi);
        return 1.0 - 2.0 * T * phi - std::erfc(T / std::sqrt(2.0));
      }
      case Family::symmetric_pareto: {
        const double xm = std::sqrt((param - 2.0) / param);
        if (T <= xm) return 0.0;
        return param * std::pow(xm, param) / (param - 2.0) *
               (std::pow(xm, 2.0 - param) - std::pow(T, 2.0 - param));
      }
      case Family::student_t: {
        detail::StudentDensity f(param);
        return 2.0 * integrate([&](double x) { return x * x * f(x); }, 0.0, T, 5e-13);
      }
    }
    throw InternalError("unhandled family");
  }

  // P(|X| > T).
  double tail_prob(double T) const {
    if (T <= 0.0) return 1.0;
    switch (family) {
      case Family::rademacher:
        return T >= 1.0 ? 0.0 : 1.0;
      case Family::gaussian:
        return std::erfc(T / std::sqrt(2.0));
      case Family::symmetric_pareto: {
        const double xm = std::sqrt((param - 2.0) / param);
        return T <= xm ? 1.0 : std::pow(xm / T, param);
      }
      case Family::student_t: {
        detail::StudentDensity f(param);
        return 2.0 * integrate_tail(f, T, 5e-13);
      }
    }
    throw InternalError("unhandled family");
  }

  // E X^2 1[|X| > T].
  double tail_second_moment(double T) const {
    if (T <= 0.0) return 1.0;
    switch (family) {
      case Family::rademacher:
        return T >= 1.0 ? 0.0 : 1.0;
      case Family::gaussian: {
        const double phi = std::exp(-0.5 * T * T) / std::sqrt(2.0 * detail::kPi);
        return 2.0 * T * phi + std::erfc(T / std::sqrt(2.0));
      }
      case Family::symmetric_pareto: {
        const double xm = std::sqrt((param - 2.0) / param);
        if (T <= xm) return 1.0;
        return param * std::pow(xm, param) / (param - 2.0) * std::pow(T, 2.0 - param);
      }
      case Family::student_t: {
        detail::StudentDensity f(param);
        return 2.0 * integrate_tail([&](double x) { return x * x * f(x); }, T, 5e-13);
      }
    }
    throw InternalError("unhandled family");
  }
};

struct EnsembleSpec {
  int n = 0;
  EntryDistribution dist;
  double truncation_D = 1.0;

  double alpha() const { return 2.0 / (4.0 + dist.delta_cap()); }
  double threshold() const {
    return truncation_D * std::pow(static_cast<double>(n), alpha());
  }

  void validate() const {
    std::vector<std::string> issues;
    if (n < 1) issues.push_back("n must be at least 1");
    if (!(truncation_D > 0.0)) issues.push_back("truncation_D must be positive");
    try {
      dist.validate();
    } catch (const ConfigError& e) {
      issues.insert(issues.end(), e.issues().begin(), e.issues().end());
    }
    if (!issues.empty()) throw ConfigError(issues);
  }
};

enum class PipelineStage { raw, truncated, recentered, rescaled };

inline const char* stage_name(PipelineStage s) {
  switch (s) {
    case PipelineStage::raw: return "raw";
    case PipelineStage::truncated: return "truncated";
    case PipelineStage::recentered: return "recentered";
    case PipelineStage::rescaled: return "rescaled";
  }
  return "?";
}

inline bool stage_from_name(const std::string& s, PipelineStage& out) {
  for (PipelineStage st : {PipelineStage::raw, PipelineStage::truncated,
                           PipelineStage::recentered, PipelineStage::rescaled}) {
    if (s == stage_name(st)) {
      out = st;
      return true;
    }
  }
  return false;
}

// A symmetric matrix W = X / sqrt(n) plus the seed and pipeline stage that produced it.
struct WignerSample {
  EnsembleSpec spec;
  std::uint64_t seed = 0;
  PipelineStage stage = PipelineStage::raw;
  Eigen::MatrixXd W;
  long truncated_count = 0;
  double trunc_mean = 0.0;  // E X-hat of the entry law
  double sigma = 1.0;       // sqrt Var of the recentred truncated entry

  int n() const { return spec.n; }

  // D' such that |sqrt(n) W_jk| <= D' n^alpha holds after truncation.
  double bound_D_prime() const {
    if (stage == PipelineStage::raw) return std::numeric_limits<double>::infinity();
    double d = spec.truncation_D + std::abs(trunc_mean);
    return stage == PipelineStage::rescaled ? d / sigma : d;
  }
};

inline WignerSample sample_raw(const EnsembleSpec& spec, std::uint64_t seed) {
  spec.validate();
  WignerSample s;
  s.spec = spec;
  s.seed = seed;
  s.stage = PipelineStage::raw;
  const int n = spec.n;
  const double scale = std::sqrt(static_cast<double>(n));
  s.W.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      Stream st(split(seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k)));
      const double x = spec.dist.sample(st);
      s.W(j, k) = x / scale;
      s.W(k, j) = s.W(j, k);
    }
  }
  return s;
}

// Zero every entry with |X_jk| > D n^alpha; counts the independent entries
// (upper triangle including the diagonal) that were removed.
inline WignerSample truncate(const WignerSample& in) {
  if (in.stage != PipelineStage::raw)
    throw ArgumentError("truncate: expects a raw sample");
  WignerSample s = in;
  s.stage = PipelineStage::truncated;
  const int n = s.n();
  const double T = s.spec.threshold();
  const double scale = std::sqrt(static_cast<double>(n));
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) {
      if (std::abs(s.W(j, k) * scale) > T) {
        s.W(j, k) = 0.0;
        s.W(k, j) = 0.0;
        ++s.truncated_count;
      }
    }
  }
  return s;
}

// Subtract E X-hat from every entry (a no-op for these symmetric families,
// recorded regardless).
inline WignerSample recenter(const WignerSample& in) {
  if (in.stage != PipelineStage::truncated)
    throw ArgumentError("recenter: expects a truncated sample");
  WignerSample s = in;
  s.stage = PipelineStage::recentered;
  s.trunc_mean = s.spec.dist.truncated_mean(s.spec.threshold());
  if (s.trunc_mean != 0.0) {
    const double shift = s.trunc_mean / std::sqrt(static_cast<double>(s.n()));
    s.W.array() -= shift;
  }
  return s;
}

// Divide by sigma = sqrt(E X-hat^2 - (E X-hat)^2) to restore unit variance.
inline WignerSample rescale(const WignerSample& in) {
  if (in.stage != PipelineStage::recentered)
    throw ArgumentError("rescale: expects a recentred sample");
  WignerSample s = in;
  s.stage = PipelineStage::rescaled;
  const double m2 = s.spec.dist.truncated_second_moment(s.spec.threshold());
  const double var = m2 - s.trunc_mean * s.trunc_mean;
  if (!(var > 0.0))
    throw InternalError("rescale: truncated variance is not positive");
  s.sigma = std::sqrt(var);
  if (s.sigma != 1.0) s.W /= s.sigma;
  return s;
}

inline WignerSample recenter_rescale(const WignerSample& in) {
  return rescale(recenter(in));
}

inline WignerSample run_pipeline(const EnsembleSpec& spec, std::uint64_t seed,
                                 PipelineStage target) {
  WignerSample s = sample_raw(spec, seed);
  if (target == PipelineStage::raw) return s;
  s = truncate(s);
  if (target == PipelineStage::truncated) return s;
  s = recenter(s);
  if (target == PipelineStage::recentered) return s;
  return rescale(s);
}

}  // namespace wigner
