#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subsetlab/sampler.hpp"
#include "subsetlab/support_set.hpp"
#include "subsetlab/theory.hpp"

namespace subsetlab {

/// A feasible point of the restricted-eigenvalue program. Since gamma(X) is a
/// minimum, the ratio at any feasible point bounds it from above.
struct ReCertificate {
  double gamma_upper = 0.0;
  Eigen::VectorXd witness_theta;
  SupportSet witness_s;
  std::size_t restarts_used = 0;
  bool converged = false;
  std::uint64_t supports_scanned = 0;
  /// Only a random subset of supports was searched.
  bool sampled_supports = false;
};

struct ReOptions {
  std::size_t restarts = 64;
  std::size_t iters = 500;
  double step = 1e-2;
  double step_decay = 0.99;
  std::uint64_t seed = 0;
  /// 0 searches every support of size s; otherwise this many random supports.
  std::size_t sample_supports = 0;
  std::uint64_t support_budget = 1'000'000;
};

/// ||X theta||^2 / (n ||theta||^2)
double re_ratio(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta);

/// Whether ||theta_{S^c}||_1 <= 3 ||theta_S||_1 + tol.
bool in_re_cone(const Eigen::VectorXd& theta, const SupportSet& s, double tol = 1e-9);

/// Projected gradient over the unit sphere intersected with the l1 cone of
/// each support, from random, canonical and bottom-eigenvector starts.
ReCertificate re_constant(const Eigen::MatrixXd& x, std::size_t s, const ReOptions& options = {});

/// s log d / max_T(||Pi_T^perp X_{S*\T} beta_{S*\T}||^2 / (n sigma^2)) / gamma^2.
/// Warns when gamma lies outside (0, 1/(24 sqrt 2)).
BoundReport poly_lower_bound(const Eigen::MatrixXd& x, const ProblemInstance& instance,
                             double gamma, std::uint64_t budget = 10'000'000);

struct GapReport {
  FixedDesignDeltas deltas;
  double gamma = 0.0;
  double optimal = 0.0;         // log d / Delta_l
  double poly_efficient = 0.0;  // log d / Delta_u / gamma^2
  double ratio = 0.0;           // poly_efficient / optimal
};

GapReport gap_comparison(const Eigen::MatrixXd& x, const ProblemInstance& instance, double gamma,
                         std::uint64_t budget = 10'000'000);

struct SrcReport {
  bool holds = false;
  bool sampled = false;
  double worst_ratio_low = 0.0;
  double worst_ratio_high = 0.0;
  SupportSet witness_low;
  SupportSet witness_high;
  Eigen::VectorXd witness_low_u;
  Eigen::VectorXd witness_high_u;
  std::uint64_t supports_checked = 0;
};

/// Checks c_minus <= ||X_T u||^2 / (n ||u||^2) <= c_plus over |T| <= 2s. Both
/// extremes over u are eigenvalues of X_T^T X_T / n; by eigenvalue interlacing
/// the sets with |T| = 2s carry the extremes. Above `budget` sets, `budget`
/// random sets are checked and "holds" can no longer be certified.
SrcReport check_src(const Eigen::MatrixXd& x, std::size_t s, double c_minus, double c_plus,
                    std::uint64_t budget = 1'000'000, std::uint64_t seed = 0);

}  // namespace subsetlab
