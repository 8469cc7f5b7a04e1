#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "subsetlab/error.hpp"
#include "subsetlab/sampler.hpp"

using namespace subsetlab;

namespace {

ProblemInstance equicorr_instance(std::size_t d, double omega, double sigma2 = 1.0) {
  return ProblemInstance(parse_beta_spec("support=1,3;values=1,-1", d), sigma2,
                         make_equicorrelation(d, omega));
}

}  // namespace

TEST_CASE("beta specs") {
  const Eigen::VectorXd a = parse_beta_spec("support=1,3;values=1.5,-2", 5);
  CHECK(a(0) == 1.5);
  CHECK(a(2) == -2.0);
  CHECK(a.cwiseAbs().sum() == 3.5);
  const Eigen::VectorXd b = parse_beta_spec("support=2,4;betamin=0.5", 4);
  CHECK(b(1) == 0.5);
  CHECK(b(3) == 0.5);
  CHECK_THROWS_AS(parse_beta_spec("support=1,2;values=1", 4), Error);
  CHECK_THROWS_AS(parse_beta_spec("support=1,5;betamin=1", 4), Error);
  CHECK_THROWS_AS(parse_beta_spec("support=1;values=0", 4), Error);
  CHECK_THROWS_AS(parse_beta_spec("values=1", 4), Error);
}

TEST_CASE("problem instance") {
  const ProblemInstance inst = equicorr_instance(6, 0.5, 2.0);
  CHECK(inst.support() == SupportSet{0, 2});
  CHECK(inst.beta_min() == 1.0);
  CHECK(inst.dim() == 6);
  CHECK_THROWS_AS(ProblemInstance(Eigen::VectorXd::Ones(3), 0.0, make_identity(3)), Error);
  CHECK_THROWS_AS(ProblemInstance(Eigen::VectorXd::Ones(4), 1.0, make_identity(3)), Error);
}

TEST_CASE("class membership") {
  const ProblemInstance inst = equicorr_instance(8, 0.3);
  ClassParams params{8, 2, 0, 1.0, 0.3, 1.0, true};
  MembershipReport ok = check_membership(inst, params);
  CHECK(ok.in_class);
  CHECK(ok.computed_omega.has_value());
  CHECK(*ok.computed_omega == doctest::Approx(0.3));

  params.beta_min = 1.5;
  params.omega = 0.5;
  const MembershipReport bad = check_membership(inst, params);
  CHECK_FALSE(bad.in_class);
  CHECK(bad.violations.size() == 2);

  const MembershipReport unknown = check_membership(inst, params, 10);
  CHECK(unknown.indeterminate);
}

TEST_CASE("sampling is deterministic and seed-sensitive") {
  const ProblemInstance inst = equicorr_instance(6, 0.5);
  const DataSet a = sample_dataset(inst, 40, 17);
  const DataSet b = sample_dataset(inst, 40, 17);
  const DataSet c = sample_dataset(inst, 40, 18);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.x != c.x);
  CHECK(a.seed == 17);
  CHECK(a.n == 40);
}

TEST_CASE("design and noise streams are independent") {
  const ProblemInstance inst = equicorr_instance(6, 0.5);
  const DataSet a = sample_dataset(inst, 30, 1, 2);
  const DataSet b = sample_dataset(inst, 30, 1, 3);
  CHECK(a.x == b.x);
  CHECK(a.y != b.y);
}

TEST_CASE("sample moments match the population") {
  const std::size_t d = 5;
  const ProblemInstance inst = equicorr_instance(d, 0.4, 0.25);
  const DataSet data = sample_dataset(inst, 200000, 99);
  const Eigen::MatrixXd emp = data.x.transpose() * data.x / static_cast<double>(data.n);
  CHECK((emp - inst.design().matrix()).cwiseAbs().maxCoeff() < 0.02);
  const Eigen::VectorXd resid = data.y - data.x * inst.beta();
  CHECK(resid.squaredNorm() / static_cast<double>(data.n) == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("regression residual variance matches the Schur complement") {
  // Var(X_D | X_T) estimated by regressing column D on columns T.
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd m = oracle::random_spd(5, rng);
  const ProblemInstance inst(parse_beta_spec("support=1;betamin=1", 5), 1.0, Covariance(m, {}));
  const DataSet data = sample_dataset(inst, 200000, 4);
  const std::vector<std::size_t> t{1, 3, 4};
  const Eigen::MatrixXd xt = oracle::columns(data.x, t);
  const Eigen::VectorXd x0 = data.x.col(0);
  const Eigen::VectorXd coef = xt.householderQr().solve(x0);
  const double mc = (x0 - xt * coef).squaredNorm() / static_cast<double>(data.n);
  const double exact = oracle::schur(m, {0}, t)(0, 0);
  CHECK(mc == doctest::Approx(exact).epsilon(0.02));
}

TEST_CASE("dataset CSV round trip") {
  const ProblemInstance inst = equicorr_instance(4, 0.7);
  const DataSet data = sample_dataset(inst, 12, 5);
  const auto path = std::filesystem::temp_directory_path() / "subsetlab_sampler_data.csv";
  write_dataset_csv(path, data);
  const DataSet back = read_dataset_csv(path);
  CHECK(back.n == 12);
  CHECK(back.x == data.x);
  CHECK(back.y == data.y);
  std::filesystem::remove(path);
}
