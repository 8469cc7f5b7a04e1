#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "subsetlab/design.hpp"
#include "subsetlab/estimators.hpp"
#include "subsetlab/sampler.hpp"

namespace subsetlab {

/// Flat `key = value` experiment description. Recognised keys:
///
///   design.kind      identity | equicorrelation | twobytwo | file
///   design.d         dimension (ignored for twobytwo)
///   design.omega     equicorrelation parameter
///   design.b         twobytwo parameter
///   design.path      covariance file for kind = file
///   instance.s       sparsity
///   instance.support one-based indices, default 1..s
///   instance.betamin coefficient magnitude
///   instance.signs   positive | alternating
///   instance.sigma2  noise variance
///   sweep.ngrid      strictly increasing sample sizes
///   sweep.trials     trials per grid point
///   sweep.seed       master seed
///   sweep.estimators comma-separated: bss, bssu, aic, bic, lasso, omp, marginal
///   sweep.delta      target error probability for n*
///   sweep.threads    default worker count
///   sweep.out        CSV output path
///   sweep.record_timing  true | false
///   estimator.sbar   sparsity bound for bssu/aic/bic
///   estimator.tau    bssu penalty; defaults to omega * betamin^2 / 4
///   gap.omegas       omega grid for the gap experiment
///   verify.omegas    omega grid for bound verification
///   verify.constant  constant passed to the upper-bound calculators
///
/// Lines starting with '#' and blank lines are ignored.
struct SweepConfig {
  CovarianceKind design_kind = CovarianceKind::EquiCorrelation;
  std::size_t d = 0;
  double omega = 1.0;
  double b = 0.0;
  std::string design_path;

  std::size_t s = 0;
  std::vector<Index> support;  // zero-based; empty means 0..s-1
  double beta_min = 1.0;
  bool alternating_signs = false;
  double sigma2 = 1.0;

  std::vector<std::size_t> n_grid;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::vector<EstimatorKind> estimators{EstimatorKind::Bss};
  double delta = 0.05;
  unsigned threads = 1;
  std::string out_path;
  bool record_timing = false;

  std::size_t sbar = 0;
  std::optional<double> tau;

  std::vector<double> gap_omegas;
  std::vector<double> verify_omegas;
  double verify_constant = 1.0;

  /// Throws Config on any violated invariant.
  void validate() const;
  /// Canonical `key = value` text; equal configs give equal text.
  std::string canonical() const;
  std::uint64_t hash() const;
};

SweepConfig parse_config(std::string_view text);
SweepConfig load_config(const std::filesystem::path& path);

Covariance build_design(const SweepConfig& config);
ProblemInstance build_instance(const SweepConfig& config);
ProblemInstance build_instance(const SweepConfig& config, Covariance design);
std::vector<EstimatorSpec> build_estimators(const SweepConfig& config);

/// Seed of the dataset for grid point n and trial t. Every estimator sees the
/// same dataset in a given cell, so rate differences are paired comparisons.
std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t trial);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};

/// 95% Wilson score interval.
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials);

struct SweepRow {
  std::string estimator;
  std::size_t n = 0;
  std::size_t successes = 0;
  std::size_t trials = 0;
  double rate = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double mean_runtime_ms = 0.0;
  /// Not part of the CSV.
  std::size_t failures = 0;
  std::size_t max_support_size = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  std::vector<SweepRow> rows_for(std::string_view estimator) const;
};

SweepResult run_phase_sweep(const SweepConfig& config, unsigned threads);
/// As above on an explicit instance, for callers varying the design.
SweepResult run_phase_sweep(const SweepConfig& config, const ProblemInstance& instance,
                            unsigned threads);

inline constexpr std::string_view kCsvHeader =
    "estimator,n,successes,trials,rate,wilson_lo,wilson_hi,mean_runtime_ms";

std::string format_csv(const SweepResult& result);
void emit_csv(const SweepResult& result, const std::filesystem::path& path);
SweepResult parse_csv(std::string_view text);
SweepResult read_csv(const std::filesystem::path& path);

/// Matplotlib script plotting rate against n per estimator with Wilson bands.
/// `csv_path` is written into the script as given, normally relative to it.
std::string plot_script(const std::string& csv_path);
void emit_plot_script(const std::filesystem::path& csv, const std::filesystem::path& script);

struct Crossing {
  std::optional<double> n50;
  /// "ok", "no-crossing" or "below-grid" (already >= 0.5 at the first n).
  std::string status;
};

/// Linear interpolation of the first upward crossing of rate 0.5.
Crossing interpolate_n50(const SweepResult& result, std::string_view estimator);

/// Smallest grid n with rate >= level.
std::optional<std::size_t> first_n_reaching(const SweepResult& result, std::string_view estimator,
                                            double level);

struct BoundRow {
  double omega = 0.0;
  std::optional<std::size_t> empirical_n;  // smallest grid n with BSS rate >= 1 - delta
  double upper_known = 0.0;
  std::optional<double> lower_equicorr;  // omega < 1 only
  double lower_dimension = 0.0;
  std::optional<double> calibrated_constant;  // empirical_n / upper_known
};

/// One BSS sweep per omega in verify.omegas (or design.omega when empty),
/// compared with the bound calculators.
std::vector<BoundRow> verify_bounds(const SweepConfig& config, unsigned threads);
std::string format_bound_table(const std::vector<BoundRow>& rows);

struct GapSweep {
  double omega = 0.0;
  SweepResult result;
};

/// One sweep per omega in gap.omegas on the equicorrelation design.
std::vector<GapSweep> run_gap_experiment(const SweepConfig& config, unsigned threads);

}  // namespace subsetlab
