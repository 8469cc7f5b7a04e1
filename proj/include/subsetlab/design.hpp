#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

#include "subsetlab/support_set.hpp"

namespace subsetlab {

enum class CovarianceKind { Identity, EquiCorrelation, TwoByTwo, FromFile };

struct CovarianceTag {
  CovarianceKind kind = CovarianceKind::FromFile;
  double parameter = 0.0;  // omega for EquiCorrelation, b for TwoByTwo
  std::string path;        // FromFile only
};

/// Symmetric positive-definite design covariance. Construction validates
/// symmetry and runs a Cholesky factorization; the lower factor is kept for
/// sampling.
class Covariance {
 public:
  /// Throws Asymmetric when entries differ from their transpose by more than
  /// 1e-12 relative, NotPositiveDefinite when Cholesky fails.
  Covariance(Eigen::MatrixXd entries, CovarianceTag tag);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return entries_; }
  const Eigen::MatrixXd& cholesky_lower() const noexcept { return lower_; }
  const CovarianceTag& tag() const noexcept { return tag_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }

  std::string describe() const;

 private:
  Eigen::MatrixXd entries_;
  Eigen::MatrixXd lower_;
  CovarianceTag tag_;
};

Covariance make_identity(std::size_t d);
/// omega*I + (1 - omega)*11^T, omega in (0, 1].
Covariance make_equicorrelation(std::size_t d, double omega);
/// [[1, b], [b, 1 + b^2]]; determinant one for every b.
Covariance make_two_by_two(double b);

/// Text matrix: first line the dimension(s), then one row per line.
/// A single header value d means a d x d matrix; "n d" gives n x d.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Reads a square matrix file, symmetrizes it, and verifies it is PD.
/// Asymmetry above 1e-8 is rejected; a non-PD matrix is rejected with its
/// smallest eigenvalue in the message.
Covariance load_covariance(const std::filesystem::path& path);
void save_covariance(const std::filesystem::path& path, const Covariance& sigma);

/// Schur complement Sigma_{D,D} - Sigma_{D,T} Sigma_{T,T}^{-1} Sigma_{T,D}
/// with D = S \ T. Throws EmptyDifference when S is contained in T.
Eigen::MatrixXd conditional_covariance(const Covariance& sigma, const SupportSet& s,
                                       const SupportSet& t);

/// Smallest eigenvalue of a small symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& m);

struct OmegaReport {
  double omega = 0.0;
  SupportSet witness_s;
  SupportSet witness_t;
  std::uint64_t pairs_scanned = 0;
};

struct OmegaOptions {
  /// Upper limit on the number of (S \ T, T) pairs evaluated.
  std::uint64_t pair_budget = 10'000'000;
  unsigned threads = 1;
};

/// Number of distinct (S \ T, T) pairs evaluated by compute_omega_known.
std::uint64_t omega_known_pair_count(std::size_t d, std::size_t s);
std::uint64_t omega_unknown_pair_count(std::size_t d, std::size_t sbar);

/// min over S != T of size s of lambda_min(Sigma_{S\T|T}). Exact; throws
/// BudgetExceeded instead of sampling.
OmegaReport compute_omega_known(const Covariance& sigma, std::size_t s,
                                const OmegaOptions& options = {});
/// min over |S|, |T| <= sbar with S not inside T.
OmegaReport compute_omega_unknown(const Covariance& sigma, std::size_t sbar,
                                  const OmegaOptions& options = {});

}  // namespace subsetlab
