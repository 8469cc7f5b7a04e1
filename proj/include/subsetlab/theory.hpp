#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subsetlab/design.hpp"
#include "subsetlab/sampler.hpp"
#include "subsetlab/support_set.hpp"

namespace subsetlab {

/// beta_{S*\T}^T Sigma_{S*\T|T} beta_{S*\T} / sigma^2. Zero when S* is inside T.
double pairwise_delta(const ProblemInstance& instance, const SupportSet& t);

struct SignalReport {
  double delta = 0.0;
  SupportSet witness_t;
  /// ell -> min over |S* \ T| = ell of Delta(S*, T) / ell
  std::map<std::size_t, double> per_ell;
  /// min over the same T of lambda_min(Sigma_{S*\T|T}); at least the class omega.
  double local_omega = 0.0;
  std::uint64_t alternatives = 0;
};

/// Delta = min over T of size s, T != S*, of Delta(S*, T) / |S* \ T|.
/// Throws Internal if Delta < beta_min^2 * local_omega / sigma^2 (the lower
/// bound that every instance of the class must satisfy).
SignalReport signal_delta(const ProblemInstance& instance,
                          std::uint64_t budget = 10'000'000);

struct FixedDesignDeltas {
  double delta_u = 0.0;
  double delta_l = 0.0;
  /// max over T of ||Pi_T^perp X_{S*\T} beta_{S*\T}||^2 / (n sigma^2), unscaled.
  double max_excess = 0.0;
  SupportSet witness_u;
  SupportSet witness_l;
  std::uint64_t skipped_singular = 0;
};

/// Delta_u (max) and Delta_l (min) over T of size s, T != S*, of
/// ||Pi_T^perp X_{S*\T} beta_{S*\T}||^2 / (|S* \ T| n sigma^2).
FixedDesignDeltas fixed_design_deltas(const Eigen::MatrixXd& x, const ProblemInstance& instance,
                                      std::uint64_t budget = 10'000'000);

enum class BoundKind {
  UpperKnown,
  UpperGeneric,
  UpperUnknown,
  LowerEquiCorr,
  LowerDimension,
  LowerUnknown,
  PolyEfficient,
};

const char* to_string(BoundKind kind);

struct BoundReport {
  BoundKind kind = BoundKind::UpperKnown;
  double n_value = 0.0;
  double delta_confidence = 0.05;
  double constant_used = 1.0;
  /// Lower bounds: the guaranteed error floor below n_value.
  std::optional<double> error_floor;
  std::vector<std::string> warnings;
};

/// constant * max{(log(d-s) + log(1/delta)) / (beta_min^2 omega / sigma^2),
///                 log C(d-s, s) + log(1/delta)}; requires s <= d/2.
BoundReport bound_upper_known(const ClassParams& params, double delta_conf, double constant = 1.0);

/// constant * max_{ell in [s]} (log C(d-s, ell) + log(1/delta)) / min(ell * signal, 1).
BoundReport bound_upper_generic(double signal, std::size_t d, std::size_t s, double delta_conf,
                                double constant = 1.0);

/// constant * max{(log d + log(1/delta)) / (beta_min^2 omega / sigma^2),
///                 log C(d, sbar) + log(1/delta)}; requires sbar <= d/2.
BoundReport bound_upper_unknown(const ClassParams& params, double delta_conf,
                                double constant = 1.0);

/// ((1 - 2 delta) / 2) * max_ell log C(d-s, ell) / (ell beta_min^2 omega / sigma^2);
/// requires omega < 1. Error floor delta - log 2 / log C(d-s, s).
BoundReport bound_lower_equicorr(const ClassParams& params, double delta_conf);

/// 2 (1 - delta) (log C(d, s) - 1) / log(1 + s * snr), snr = beta_min^2 / sigma^2.
/// Warns when snr > 1.
BoundReport bound_lower_dimension(std::size_t d, std::size_t s, double snr, double delta_conf);

/// (1 - 2 delta) log d / (beta_min^2 omega / sigma^2); error floor delta - log 2 / log d.
BoundReport bound_lower_unknown(std::size_t d, double beta_min, double omega, double sigma2,
                                double delta_conf);

/// KL(P_S || P_T) = v^T Sigma v / (2 sigma^2), v = beta_S - beta_T as length-d
/// vectors. `beta_s` and `beta_t` hold values aligned with the index sets.
double kl_between_supports(const Covariance& sigma, const SupportSet& s_set,
                           const Eigen::VectorXd& beta_s, const SupportSet& t_set,
                           const Eigen::VectorXd& beta_t, double sigma2);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

/// Average of log p_S(Y|X) / p_T(Y|X) over (X, Y) drawn from P_S.
MonteCarloEstimate empirical_kl(const Covariance& sigma, const SupportSet& s_set,
                                const Eigen::VectorXd& beta_s, const SupportSet& t_set,
                                const Eigen::VectorXd& beta_t, double sigma2, std::size_t samples,
                                std::uint64_t seed);

struct FanoResult {
  double n_threshold = 0.0;
  double error_floor = 0.0;
  /// True when the floor is nonpositive, i.e. the bound says nothing.
  bool vacuous = false;
};

/// n <= (1 - 2 delta) log M / alpha implies error >= delta - log 2 / log M.
FanoResult fano_threshold(std::uint64_t m_count, double alpha, double delta_conf);

/// exp(-m min(t, t^2)), the bound on P(|Z - m| / m >= 4t) for Z ~ chi^2_m.
double chisq_tail_bound(std::size_t m, double t);

/// Monte Carlo estimate of P(|Z - m| / m >= 4t), Z a sum of m squared normals.
MonteCarloEstimate empirical_chisq_tail(std::size_t m, double t, std::size_t trials,
                                        std::uint64_t seed);

}  // namespace subsetlab
