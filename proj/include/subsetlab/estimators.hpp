#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "subsetlab/sampler.hpp"
#include "subsetlab/support_set.hpp"

namespace subsetlab {

/// Sufficient statistics for every least-squares fit on column subsets:
/// X^T X, X^T Y and Y^T Y. Per-support work is independent of n.
class RssEngine {
 public:
  explicit RssEngine(const DataSet& data);
  RssEngine(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

  std::size_t n() const noexcept { return n_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(gram_.rows()); }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::VectorXd& xty() const noexcept { return xty_; }
  double yty() const noexcept { return yty_; }

  /// ||Pi_S^perp Y||^2 by Cholesky on the Gram submatrix. Throws Singular
  /// naming S when the selected columns are numerically collinear.
  double rss(const SupportSet& s) const;

 private:
  std::size_t n_ = 0;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  double yty_ = 0.0;
};

/// Incremental Cholesky factor of a Gram submatrix, grown one column at a
/// time. Row k depends only on rows < k, so a prefix shared across many
/// supports is factored once and the result is bit-identical to factoring
/// each support from scratch in the same column order.
class CholeskyPath {
 public:
  CholeskyPath(const RssEngine& engine, std::size_t capacity);

  /// Appends column j. Returns false (leaving the path unchanged) when the
  /// new pivot is numerically zero.
  bool push(Index j);
  void pop();
  std::size_t size() const noexcept { return members_.size(); }
  const std::vector<Index>& members() const noexcept { return members_; }
  /// ||Pi_S^perp Y||^2 for the current members, clamped at zero.
  double rss() const;
  /// Least-squares coefficients on the current members, in member order.
  Eigen::VectorXd coefficients() const;

 private:
  const RssEngine& engine_;
  std::size_t capacity_;
  std::vector<double> lower_;      // capacity x capacity, row-major
  std::vector<double> z_;          // L^{-1} (X^T Y)_S
  std::vector<double> projected_;  // running ||z||^2 per depth
  std::vector<Index> members_;
};

struct EstimateResult {
  SupportSet support;
  double objective = 0.0;
  std::uint64_t evaluated = 0;
  /// Supports skipped because their Gram submatrix was singular.
  std::uint64_t singular = 0;
  /// Baselines that ran short of s variables and padded by screening order.
  bool padded = false;
  /// Lasso only: whether coordinate descent converged at the selected lambda.
  bool converged = true;
};

struct EnumerationOptions {
  unsigned threads = 1;
};

/// argmin of rss over supports of size s; ties go to the lexicographically
/// smallest support.
EstimateResult bss(const RssEngine& engine, std::size_t s, const EnumerationOptions& options = {});

enum class ResidualScale {
  DegreesOfFreedom,  // rss / (n - |S|)
  SampleSize,        // rss / n
};

struct PenalizedSearch {
  std::size_t max_size = 0;
  std::size_t min_size = 0;
  double penalty_per_variable = 0.0;
  ResidualScale scale = ResidualScale::DegreesOfFreedom;
};

/// argmin of rss/scale + |S| * penalty over min_size <= |S| <= max_size.
/// Ties: smaller |S|, then lexicographic.
EstimateResult penalized_best_subset(const RssEngine& engine, const PenalizedSearch& search,
                                     const EnumerationOptions& options = {});

/// rss/(n-|S|) + |S| tau over |S| <= sbar; requires sbar < n and tau > 0.
EstimateResult bssu(const RssEngine& engine, std::size_t sbar, double tau,
                    const EnumerationOptions& options = {});
/// The default tau = omega * beta_min^2 / 4.
double default_bssu_tau(double omega, double beta_min);
/// rss/n + |S| 2/n.
EstimateResult aic(const RssEngine& engine, std::size_t sbar, const EnumerationOptions& options = {});
/// rss/n + |S| log(n)/n.
EstimateResult bic(const RssEngine& engine, std::size_t sbar, const EnumerationOptions& options = {});

struct LassoFit {
  Eigen::VectorXd coef;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Cyclic coordinate descent on (1/2n)||Y - X theta||^2 + lambda ||theta||_1
/// using covariance updates. `warm_start`, when given, seeds theta.
LassoFit lasso_cd(const RssEngine& engine, double lambda, double tol = 1e-8,
                  std::size_t max_iter = 10'000, const Eigen::VectorXd* warm_start = nullptr);
LassoFit lasso_cd(const DataSet& data, double lambda, double tol = 1e-8,
                  std::size_t max_iter = 10'000);

/// max_j |X^T Y|_j / n: the smallest lambda with an all-zero solution.
double lasso_lambda_max(const RssEngine& engine);

/// Indices sorted by decreasing |X_j^T Y|, ties by index.
std::vector<Index> screening_order(const RssEngine& engine);

/// The s largest |coef|, ties lexicographic. If fewer than s entries are
/// nonzero, the rest are filled from `padding_order` and `padded` is set.
SupportSet lasso_support(const Eigen::VectorXd& coef, std::size_t s,
                         std::span<const Index> padding_order, bool* padded = nullptr);

/// Lasso + top-s thresholding. Walks 50 log-spaced lambdas from lambda_max
/// down to lambda_max * 1e-3 and stops at the first with >= s nonzeros.
EstimateResult lasso_select(const RssEngine& engine, std::size_t s);

/// Orthogonal matching pursuit for s steps.
EstimateResult omp(const RssEngine& engine, std::size_t s);

/// Top-s by |X_j^T Y|.
EstimateResult marginal_screening(const RssEngine& engine, std::size_t s);

enum class EstimatorKind { Bss, Bssu, Aic, Bic, Lasso, Omp, Marginal };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Bss;
  std::size_t s = 0;     // Bss, Lasso, Omp, Marginal
  std::size_t sbar = 0;  // Bssu, Aic, Bic
  double tau = 0.0;      // Bssu

  std::string name() const;
  /// Throws InvalidParameter when a required parameter is missing or out of
  /// range for dimension d.
  void validate(std::size_t d) const;
};

EstimatorKind parse_estimator_kind(std::string_view name);
std::string_view to_string(EstimatorKind kind);

EstimateResult run_estimator(const EstimatorSpec& spec, const RssEngine& engine,
                             const EnumerationOptions& options = {});

}  // namespace subsetlab
