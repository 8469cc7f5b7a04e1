#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "subsetlab/error.hpp"
#include "subsetlab/re_certifier.hpp"

using namespace subsetlab;

namespace {

ReOptions quick(std::uint64_t seed = 0) {
  ReOptions o;
  o.restarts = 4;
  o.iters = 100;
  o.seed = seed;
  return o;
}

double min_column_norm(const Eigen::MatrixXd& x) {
  return x.colwise().squaredNorm().minCoeff() / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("orthonormal design has RE constant one") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd g = oracle::gaussian_matrix(40, 8, rng);
  const Eigen::MatrixXd q = g.householderQr().householderQ() * Eigen::MatrixXd::Identity(40, 8);
  const Eigen::MatrixXd x = q * std::sqrt(40.0);
  const ReCertificate cert = re_constant(x, 2, quick());
  CHECK(cert.gamma_upper >= 0.98);
  CHECK(cert.gamma_upper <= 1.0 + 1e-12);
}

TEST_CASE("certificate lies between the smallest eigenvalue and the smallest column norm") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd x = oracle::gaussian_matrix(30, 10, rng);
    const ReCertificate cert = re_constant(x, 2, quick(static_cast<std::uint64_t>(rep)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x / 30.0);
    CHECK(cert.gamma_upper >= eig.eigenvalues()(0) - 1e-9);
    CHECK(cert.gamma_upper <= min_column_norm(x) + 1e-9);
    CHECK(in_re_cone(cert.witness_theta, cert.witness_s));
    CHECK(cert.witness_s.size() == 2);
    CHECK(re_ratio(x, cert.witness_theta) == doctest::Approx(cert.gamma_upper).epsilon(1e-12));
  }
}

TEST_CASE("wide designs push the certificate toward zero") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(6, 12, rng);
  const ReCertificate cert = re_constant(x, 3, quick());
  CHECK(cert.gamma_upper < 0.5 * min_column_norm(x));
  CHECK(in_re_cone(cert.witness_theta, cert.witness_s));
}

TEST_CASE("cone membership") {
  Eigen::VectorXd theta(4);
  theta << 1.0, 1.0, 3.0, 3.0;
  CHECK(in_re_cone(theta, SupportSet{0, 1}));
  theta(3) = 3.1;
  CHECK_FALSE(in_re_cone(theta, SupportSet{0, 1}));
}

TEST_CASE("sampled supports and determinism") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(20, 9, rng);
  ReOptions o = quick(7);
  o.sample_supports = 5;
  const ReCertificate a = re_constant(x, 2, o);
  const ReCertificate b = re_constant(x, 2, o);
  CHECK(a.sampled_supports);
  CHECK(a.supports_scanned == 5);
  CHECK(a.gamma_upper == b.gamma_upper);
  CHECK(a.witness_theta == b.witness_theta);
  o.sample_supports = 0;
  o.support_budget = 3;
  CHECK_THROWS_AS(re_constant(x, 2, o), Error);
}

TEST_CASE("RE preconditions") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(4, 4);
  CHECK_THROWS_AS(re_constant(x, 0), Error);
  CHECK_THROWS_AS(re_constant(x, 5), Error);
  ReOptions o;
  o.restarts = 0;
  CHECK_THROWS_AS(re_constant(x, 2, o), Error);
}

TEST_CASE("restricted eigenvalue check") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = oracle::gaussian_matrix(200, 8, rng);
  const SrcReport wide = check_src(x, 2, 0.0, 100.0);
  CHECK(wide.holds);
  CHECK(wide.supports_checked == binomial(8, 4));
  const SrcReport tight = check_src(x, 2, 0.99, 1.01);
  CHECK_FALSE(tight.holds);
  // The witness vectors attain the reported extremes.
  CHECK(re_ratio(x, tight.witness_low_u) == doctest::Approx(tight.worst_ratio_low).epsilon(1e-10));
  CHECK(re_ratio(x, tight.witness_high_u) == doctest::Approx(tight.worst_ratio_high).epsilon(1e-10));
  CHECK_THROWS_AS(check_src(x, 2, 2.0, 1.0), Error);
  CHECK_THROWS_AS(check_src(x, 5, 0.0, 1.0), Error);
  const SrcReport sampled = check_src(x, 2, 0.0, 100.0, 10, 1);
  CHECK(sampled.sampled);
  CHECK_FALSE(sampled.holds);
}

TEST_CASE("equicorrelation population check") {
  // Population Sigma_omega blocks of size 2s: extremes omega and
  // omega + 2s(1 - omega).
  const double omega = 0.1;
  const Covariance sigma = make_equicorrelation(8, omega);
  const Eigen::MatrixXd root = std::sqrt(8.0) * sigma.cholesky_lower().transpose();  // root^T root / 8 = Sigma
  const SrcReport r = check_src(root, 2, 0.0, 100.0);
  CHECK(r.worst_ratio_low == doctest::Approx(omega).epsilon(1e-10));
  CHECK(r.worst_ratio_high == doctest::Approx(omega + 4.0 * (1.0 - omega)).epsilon(1e-10));
  CHECK(r.worst_ratio_high == doctest::Approx(3.7).epsilon(1e-10));
}

TEST_CASE("polynomial-efficient bound and gap ratio") {
  const ProblemInstance inst(parse_beta_spec("support=1,2;betamin=1", 8), 1.0, make_equicorrelation(8, 0.5));
  const DataSet data = sample_dataset(inst, 50, 3);
  const BoundReport small = poly_lower_bound(data.x, inst, 0.01);
  const FixedDesignDeltas fd = fixed_design_deltas(data.x, inst);
  CHECK(small.n_value == doctest::Approx(2.0 * std::log(8.0) / fd.max_excess / 1e-4).epsilon(1e-12));
  CHECK(small.warnings.empty());
  CHECK_FALSE(poly_lower_bound(data.x, inst, 0.5).warnings.empty());
  CHECK_THROWS_AS(poly_lower_bound(data.x, inst, 0.0), Error);

  const GapReport gap = gap_comparison(data.x, inst, 0.02);
  CHECK(gap.ratio == doctest::Approx(fd.delta_l / fd.delta_u / 4e-4).epsilon(1e-12));
  CHECK(gap.ratio > 1.0);
}
