#pragma once
// h-sweeps, log-log decay fits, pseudospectrum verdicts and the dense-oracle crosscheck.
// The recorded quantity is ||P u|| / ||u||: smaller means deeper in the pseudospectrum.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "sqm/errors.hpp"
#include "sqm/exponent_calculus.hpp"
#include "sqm/model_symbols.hpp"
#include "sqm/operator_engine.hpp"
#include "sqm/quasimode_builder.hpp"

namespace sqm {

enum class Path { Conjugated, Full, Both };

inline const char* to_string(Path p) {
  switch (p) {
    case Path::Conjugated: return "conjugated";
    case Path::Full: return "full";
    case Path::Both: return "both";
  }
  return "?";
}

struct Sample {
  double h = 0;
  double ratio = 0;
};

struct DecayFit {
  std::vector<Sample> samples;
  double slope = 0;
  double intercept = 0;
  double max_residual = 0;  // natural-log units
  bool reliable = false;
};

inline constexpr double kReliableResidual = 0.5;

inline DecayFit fit_decay_order(std::vector<Sample> samples) {
  if (samples.size() < 2) throw InvalidInput("need at least two samples to fit a decay order");
  for (auto& s : samples)
    if (!(s.ratio > 0) || !(s.h > 0)) throw InvalidInput("nonpositive sample in decay fit");
  const Eigen::Index m = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    A(i, 0) = std::log(samples[i].h);
    A(i, 1) = 1.0;
    y[i] = std::log(samples[i].ratio);
  }
  Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
  DecayFit f;
  f.samples = std::move(samples);
  f.slope = c[0];
  f.intercept = c[1];
  f.max_residual = (A * c - y).cwiseAbs().maxCoeff();
  f.reliable = f.max_residual < kReliableResidual;
  return f;
}

// ---------------------------------------------------------------------------
// Verdict

enum class VerdictKind { InfiniteOrderPseudospectrum, Saturating, Inconclusive };

inline const char* to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::InfiniteOrderPseudospectrum: return "InfiniteOrderPseudospectrum";
    case VerdictKind::Saturating: return "Saturating";
    case VerdictKind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline VerdictKind parse_verdict(const std::string& s) {
  for (auto v : {VerdictKind::InfiniteOrderPseudospectrum, VerdictKind::Saturating, VerdictKind::Inconclusive})
    if (s == to_string(v)) return v;
  throw InvalidInput("unknown verdict '" + s + "'");
}

struct Thresholds {
  double gain = 0.0625;        // per added term; default 0.5 beta
  double saturation = 0.15;    // total slope variation
  double oracle_slack = 0.3;
  double bounded_order = 2.5;  // sigma_min slope bound for factorable specs

  static Thresholds for_beta(double beta) {
    Thresholds t;
    t.gain = 0.5 * beta;
    return t;
  }
};

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::map<int, double> slope_by_N;
  std::string reason;
};

inline Verdict pseudospectrum_verdict(const std::map<int, DecayFit>& fits_by_N, const Thresholds& th) {
  if (fits_by_N.size() < 3) throw InvalidInput("verdict needs at least three term counts");
  Verdict v;
  bool reliable = true;
  for (auto& [N, f] : fits_by_N) {
    v.slope_by_N[N] = f.slope;
    reliable = reliable && f.reliable;
  }
  if (!reliable) {
    v.reason = "at least one fit has max residual >= 0.5";
    return v;
  }
  double lo = 1e300, hi = -1e300, min_gain = 1e300;
  double prev = 0;
  bool first = true;
  for (auto& [N, s] : v.slope_by_N) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    if (!first) min_gain = std::min(min_gain, s - prev);
    prev = s;
    first = false;
  }
  if (min_gain >= th.gain) {
    v.kind = VerdictKind::InfiniteOrderPseudospectrum;
    v.reason = "slopes increase by at least " + std::to_string(th.gain) + " per term";
  } else if (hi - lo < th.saturation) {
    v.kind = VerdictKind::Saturating;
    v.reason = "total slope variation below " + std::to_string(th.saturation);
  } else {
    v.reason = "slopes neither keep increasing nor stay flat";
  }
  return v;
}

// ---------------------------------------------------------------------------
// Ratios and sweeps

struct RatioRecord {
  int N = 0;
  double h = 0;
  double norm_u = 0;
  double norm_Pu = 0;
  double ratio = 0;
  double full_ratio = std::nan("");  // filled for Path::Both
};

namespace detail {

inline AmplitudeSolver make_solver(const QuasimodeRecipe& r, const Grid& g, double h) {
  return AmplitudeSolver(r, g, h, is_factorable(r.spec));
}

inline double prefactor(const QuasimodeRecipe& r, double h) {
  return std::pow(h, 1.0 + r.spec.j * r.params.beta.to_double());
}

inline void measure(const QuasimodeRecipe& r, const AmplitudeSolver& solver, const AmplitudeSet& set, int N,
                    Path path, RatioRecord& rec) {
  Field a = set.partial_sum(N);
  const double h = set.h;
  rec.N = N;
  rec.h = h;
  rec.norm_u = a.norm();
  auto full = [&] {
    check_resolution(set.freq, a.grid);
    Field u = modulate(a, set.freq);
    double d2 = 1.0 - r.params.gamma.to_double();
    return apply_full_operator(r.spec, u, h, d2).norm();
  };
  if (path == Path::Full) {
    rec.norm_Pu = full();
  } else {
    rec.norm_Pu = prefactor(r, h) * apply_conjugated_operator(r.spec, a, h, solver.beta(), set.freq.xi2).norm();
    if (path == Path::Both) rec.full_ratio = full() / rec.norm_u;
  }
  rec.ratio = rec.norm_Pu / rec.norm_u;
}

}  // namespace detail

/// ||P u|| / ||u|| for the quasimode with N corrections.
inline RatioRecord norm_ratio(const QuasimodeRecipe& r, const Grid& g, double h, Path path, int N) {
  auto solver = detail::make_solver(r, g, h);
  auto set = solver.amplitudes(N);
  RatioRecord rec;
  detail::measure(r, solver, set, N, path, rec);
  return rec;
}

struct SweepConfig {
  QuasimodeRecipe recipe;
  Grid grid{8.0, 256};
  std::vector<double> h_values;
  std::vector<int> term_counts{0, 1, 2, 3, 4};
  Path path = Path::Conjugated;
  int jobs = 1;

  static std::vector<double> geometric_h(int e_lo, int e_hi) {
    std::vector<double> h;
    for (int e = e_lo; e <= e_hi; ++e) h.push_back(std::ldexp(1.0, -e));
    return h;
  }
};

struct SweepFailure {
  double h;
  std::string reason;
};

struct SweepResult {
  std::vector<RatioRecord> records;  // ordered by (h index, N)
  std::map<int, DecayFit> fits;
  std::vector<SweepFailure> failures;
  std::vector<std::pair<double, SnappedFrequency>> frequencies;
  std::vector<std::string> warnings;
};

inline void validate(const SweepConfig& c) {
  if (c.h_values.empty()) throw InvalidInput("no h values");
  for (std::size_t i = 0; i < c.h_values.size(); ++i) {
    if (!(c.h_values[i] > 0 && c.h_values[i] < 1)) throw InvalidInput("h values must lie in (0,1)");
    if (i > 0 && !(c.h_values[i] < c.h_values[i - 1])) throw InvalidInput("h values must be strictly decreasing");
  }
  if (c.term_counts.empty()) throw InvalidInput("no term counts");
  for (int N : c.term_counts)
    if (N < 0) throw InvalidInput("term counts must be nonnegative");
}

/// Parallel map over h; each task builds the amplitudes once and measures every N.
inline SweepResult h_sweep(const SweepConfig& cfg) {
  validate(cfg);
  const std::size_t nh = cfg.h_values.size();
  const int nmax = *std::max_element(cfg.term_counts.begin(), cfg.term_counts.end());
  struct Slot {
    std::vector<RatioRecord> recs;
    std::string error;
    SnappedFrequency freq;
    bool clamped = false;
  };
  std::vector<Slot> slots(nh);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < nh;) {
      double h = cfg.h_values[i];
      try {
        auto solver = detail::make_solver(cfg.recipe, cfg.grid, h);
        slots[i].freq = solver.frequency();
        auto set = solver.amplitudes(nmax);
        for (int N : cfg.term_counts) {
          RatioRecord rec;
          detail::measure(cfg.recipe, solver, set, N, cfg.path, rec);
          if (!(rec.ratio > 0) || !std::isfinite(rec.ratio)) throw IllConditioned("non-finite ratio");
          slots[i].recs.push_back(rec);
        }
      } catch (const Error& e) {
        slots[i].recs.clear();
        slots[i].error = e.what();
      }
    }
  };
  int jobs = std::max(1, cfg.jobs);
  std::vector<std::thread> pool;
  for (int k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepResult res;
  for (std::size_t i = 0; i < nh; ++i) {
    if (!slots[i].error.empty()) {
      res.failures.push_back({cfg.h_values[i], slots[i].error});
      continue;
    }
    res.frequencies.emplace_back(cfg.h_values[i], slots[i].freq);
    if (slots[i].freq.clamped)
      res.warnings.push_back("h = " + std::to_string(cfg.h_values[i]) + ": frequency snapped to the first mode");
    for (auto& r : slots[i].recs) res.records.push_back(r);
  }
  if (res.records.empty()) {
    std::string why = res.failures.empty() ? "" : ": " + res.failures.front().reason;
    throw SweepError("every h value failed" + why);
  }
  for (int N : cfg.term_counts) {
    std::vector<Sample> s;
    for (auto& r : res.records)
      if (r.N == N) s.push_back({r.h, r.ratio});
    if (s.size() >= 2) res.fits[N] = fit_decay_order(s);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Dense oracle crosscheck

struct OracleRow {
  double h = 0;
  double sigma_min = 0;          // whole discretized space
  double sigma_min_sector = 0;   // nonzero transverse modes only
  double ratio = 0;              // ||A u|| / ||u|| for the quasimode on the small grid
  double fft_ratio = 0;          // same with the FFT operator
};

struct OracleReport {
  std::vector<OracleRow> rows;
  int violations = 0;
  bool factorable = false;
  std::optional<DecayFit> sigma_fit;  // fitted on sigma_min_sector
  std::optional<DecayFit> ratio_fit;
  bool bounded_order_ok = true;       // factorable: sigma slope <= bound
  bool slope_consistent = true;       // beta condition: sigma slope >= ratio slope - slack
};

inline OracleReport oracle_crosscheck(const QuasimodeRecipe& r, const Grid& g, const std::vector<double>& h_values,
                                      const Thresholds& th = {}, int N = 0) {
  detail::check_dense_size(g);
  OracleReport rep;
  rep.factorable = is_factorable(r.spec);
  const double d2 = 1.0 - r.params.gamma.to_double();
  for (double h : h_values) {
    MatrixC A = assemble_dense(r.spec, g, h, d2);
    OracleRow row;
    row.h = h;
    row.sigma_min = smallest_singular_value(A);
    row.sigma_min_sector = smallest_singular_value_nonzero_y_modes(A, g);
    auto solver = detail::make_solver(r, g, h);
    Field u = modulate(solver.amplitudes(N).partial_sum(N), solver.frequency());
    VectorC uv = flatten(u);
    row.ratio = (A * uv).norm() / uv.norm();
    row.fft_ratio = apply_full_operator(r.spec, u, h, d2).norm() / u.norm();
    if (row.sigma_min > row.ratio * (1.0 + 1e-9)) ++rep.violations;
    rep.rows.push_back(row);
  }
  if (h_values.size() >= 2) {
    std::vector<Sample> s, q;
    for (auto& row : rep.rows) {
      s.push_back({row.h, std::max(row.sigma_min_sector, 1e-300)});
      q.push_back({row.h, row.ratio});
    }
    rep.sigma_fit = fit_decay_order(s);
    rep.ratio_fit = fit_decay_order(q);
    if (rep.factorable) rep.bounded_order_ok = rep.sigma_fit->slope <= th.bounded_order;
    else rep.slope_consistent = rep.sigma_fit->slope >= rep.ratio_fit->slope - th.oracle_slack;
  }
  if (rep.violations > 0)
    throw OracleViolation("variational bound sigma_min <= ||Au||/||u|| violated " + std::to_string(rep.violations) +
                          " times");
  return rep;
}

}  // namespace sqm
