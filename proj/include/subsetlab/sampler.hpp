#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "subsetlab/design.hpp"
#include "subsetlab/support_set.hpp"

namespace subsetlab {

/// One ground-truth model: Y = X beta + eps, X ~ N(0, design), eps ~ N(0, sigma2).
class ProblemInstance {
 public:
  /// Throws InvalidParameter if sigma2 <= 0 or dimensions disagree.
  ProblemInstance(Eigen::VectorXd beta, double sigma2, Covariance design);

  const Eigen::VectorXd& beta() const noexcept { return beta_; }
  const SupportSet& support() const noexcept { return support_; }
  double sigma2() const noexcept { return sigma2_; }
  const Covariance& design() const noexcept { return design_; }
  std::size_t dim() const noexcept { return design_.dim(); }
  /// min |beta_j| over the support; +inf for beta = 0.
  double beta_min() const;

 private:
  Eigen::VectorXd beta_;
  SupportSet support_;
  double sigma2_;
  Covariance design_;
};

struct DataSet {
  std::size_t n = 0;
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd y;  // n
  std::uint64_t seed = 0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(x.cols()); }
};

struct ClassParams {
  std::size_t d = 0;
  std::size_t s = 0;     // exact sparsity when known_sparsity
  std::size_t sbar = 0;  // sparsity bound otherwise
  double beta_min = 0.0;
  double omega = 0.0;
  double sigma2 = 1.0;
  bool known_sparsity = true;

  /// Throws InvalidParameter on s > d/2, nonpositive beta_min/omega/sigma2.
  void validate() const;
  double snr_floor() const { return beta_min * beta_min * omega / sigma2; }
};

/// Places `values` at `support` in a length-d vector. Zero values are rejected
/// so the nonzero set is exactly the support.
Eigen::VectorXd make_beta(std::size_t d, const SupportSet& support,
                          std::span<const double> values);

/// Parses "support=1,3;values=1,-1" or "support=1,3;betamin=1" (one-based).
Eigen::VectorXd parse_beta_spec(std::string_view spec, std::size_t d);

struct MembershipReport {
  bool in_class = false;
  /// Set when the omega enumeration could not run within budget.
  bool indeterminate = false;
  std::optional<double> computed_omega;
  std::vector<std::string> violations;
};

MembershipReport check_membership(const ProblemInstance& instance, const ClassParams& params,
                                  std::uint64_t pair_budget = 10'000'000);

/// Draws n rows X = Z L^T and Y = X beta + eps. The design and noise use
/// separate streams derived from `seed`.
DataSet sample_dataset(const ProblemInstance& instance, std::size_t n, std::uint64_t seed);
/// As above with the noise stream seeded independently of the design stream.
DataSet sample_dataset(const ProblemInstance& instance, std::size_t n, std::uint64_t design_seed,
                       std::uint64_t noise_seed);

/// CSV with header "y,x1,...,xd", 17 significant digits.
void write_dataset_csv(const std::filesystem::path& path, const DataSet& data);
DataSet read_dataset_csv(const std::filesystem::path& path);

}  // namespace subsetlab
