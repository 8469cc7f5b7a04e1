#include "subsetlab/re_certifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "subsetlab/error.hpp"
#include "subsetlab/rng.hpp"

namespace subsetlab {

namespace {

constexpr double kConeRadius = 3.0;

struct ConeSplit {
  double head = 0.0;  // ||theta_S||_1
  double tail = 0.0;  // ||theta_{S^c}||_1
};

ConeSplit split_l1(const Eigen::VectorXd& theta, const std::vector<bool>& in_s) {
  ConeSplit c;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    (in_s[static_cast<std::size_t>(j)] ? c.head : c.tail) += std::abs(theta(j));
  }
  return c;
}

// Scales the off-support block so the point lies in the cone. Returns false
// if the point has no mass on the support (the cone then contains only 0).
bool project_to_cone(Eigen::VectorXd& theta, const std::vector<bool>& in_s) {
  const ConeSplit c = split_l1(theta, in_s);
  if (c.head == 0.0) return false;
  if (c.tail > kConeRadius * c.head) {
    const double factor = kConeRadius * c.head / c.tail * (1.0 - 1e-12);
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      if (!in_s[static_cast<std::size_t>(j)]) theta(j) *= factor;
    }
  }
  return true;
}

double quotient(const Eigen::MatrixXd& g, const Eigen::VectorXd& theta) {
  return theta.dot(g * theta) / theta.squaredNorm();
}

SupportSet smallest_support_containing(Index j, std::size_t s) {
  std::vector<Index> members{j};
  for (Index k = 0; members.size() < s; ++k) {
    if (k != j) members.push_back(k);
  }
  return SupportSet(std::move(members));
}

struct Descent {
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd theta;
  bool converged = false;
};

Descent descend(const Eigen::MatrixXd& g, Eigen::VectorXd theta, const std::vector<bool>& in_s,
                const ReOptions& options) {
  Descent best;
  theta.normalize();
  if (!project_to_cone(theta, in_s)) return best;
  double value = quotient(g, theta);
  best.value = value;
  best.theta = theta;
  double step = options.step;
  double previous = value;
  for (std::size_t it = 0; it < options.iters; ++it) {
    const double norm2 = theta.squaredNorm();
    const Eigen::VectorXd grad = 2.0 * (g * theta - value * theta) / norm2;
    Eigen::VectorXd next = theta - step * grad;
    const double norm = next.norm();
    if (!(norm > 0.0)) break;
    next /= norm;
    if (!project_to_cone(next, in_s)) break;
    theta = std::move(next);
    previous = value;
    value = quotient(g, theta);
    if (value < best.value) {
      best.value = value;
      best.theta = theta;
    }
    step *= options.step_decay;
  }
  best.converged = std::abs(value - previous) <= 1e-10 * std::max(1.0, std::abs(value));
  return best;
}

}  // namespace

double re_ratio(const Eigen::MatrixXd& x, const Eigen::VectorXd& theta) {
  return (x * theta).squaredNorm() / (static_cast<double>(x.rows()) * theta.squaredNorm());
}

bool in_re_cone(const Eigen::VectorXd& theta, const SupportSet& s, double tol) {
  std::vector<bool> in_s(static_cast<std::size_t>(theta.size()), false);
  for (Index j : s) in_s[j] = true;
  const ConeSplit c = split_l1(theta, in_s);
  return c.tail <= kConeRadius * c.head + tol;
}

ReCertificate re_constant(const Eigen::MatrixXd& x, std::size_t s, const ReOptions& options) {
  const auto d = static_cast<std::size_t>(x.cols());
  if (x.rows() < 1 || d < 1) throw Error(ErrorCode::InvalidDimension, "design matrix is empty");
  if (s < 1 || s > d) throw Error(ErrorCode::InvalidParameter, "need 1 <= s <= d");
  if (options.restarts < 1 || options.iters < 1) {
    throw Error(ErrorCode::InvalidParameter, "restarts and iters must be positive");
  }
  if (!(options.step > 0.0)) throw Error(ErrorCode::InvalidParameter, "step must be positive");

  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd g = x.transpose() * x / n;
  const auto dd = static_cast<Eigen::Index>(d);

  ReCertificate cert;
  double best_value = std::numeric_limits<double>::infinity();
  auto consider = [&](double value, const Eigen::VectorXd& theta, const SupportSet& support,
                      bool converged) {
    if (value < best_value) {
      best_value = value;
      cert.witness_theta = theta;
      cert.witness_s = support;
      cert.converged = converged;
    }
  };

  // Every e_j is feasible for any support holding j.
  for (std::size_t j = 0; j < d; ++j) {
    consider(g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)),
             Eigen::VectorXd::Unit(dd, static_cast<Eigen::Index>(j)),
             smallest_support_containing(j, s), true);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  const Eigen::VectorXd bottom = eig.eigenvectors().col(0);

  std::vector<SupportSet> supports;
  const std::uint64_t total = binomial(d, s);
  if (options.sample_supports == 0) {
    if (total > options.support_budget) {
      throw Error(ErrorCode::BudgetExceeded,
                  fmt::format("{} supports exceed the budget {}; request sampled supports", total,
                              options.support_budget));
    }
    for_each_combination(d, s, [&](const std::vector<Index>& c) { supports.emplace_back(c); });
  } else {
    cert.sampled_supports = true;
    Engine pick(derive_stream(options.seed, "re-supports"));
    std::set<SupportSet> seen;
    const std::uint64_t want = std::min<std::uint64_t>(options.sample_supports, total);
    std::vector<Index> pool(d);
    for (std::size_t i = 0; i < d; ++i) pool[i] = i;
    while (seen.size() < want) {
      std::shuffle(pool.begin(), pool.end(), pick);
      seen.insert(SupportSet(std::vector<Index>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(s))));
    }
    supports.assign(seen.begin(), seen.end());
  }

  Engine rng(derive_stream(options.seed, "re-restarts"));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const SupportSet& support : supports) {
    std::vector<bool> in_s(d, false);
    for (Index j : support) in_s[j] = true;
    auto run = [&](const Eigen::VectorXd& start) {
      Descent r = descend(g, start, in_s, options);
      if (r.theta.size() > 0) consider(r.value, r.theta, support, r.converged);
    };
    for (Index j : support) run(Eigen::VectorXd::Unit(dd, static_cast<Eigen::Index>(j)));
    run(bottom);
    for (std::size_t r = 0; r < options.restarts; ++r) {
      Eigen::VectorXd start(dd);
      for (Eigen::Index j = 0; j < dd; ++j) start(j) = normal(rng);
      run(start);
    }
    ++cert.supports_scanned;
  }
  cert.restarts_used = options.restarts;
  // Report the ratio evaluated on X itself so the certificate checks out
  // against the raw data.
  cert.gamma_upper = re_ratio(x, cert.witness_theta);
  return cert;
}

BoundReport poly_lower_bound(const Eigen::MatrixXd& x, const ProblemInstance& instance,
                             double gamma, std::uint64_t budget) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidParameter, "gamma must be positive");
  const FixedDesignDeltas deltas = fixed_design_deltas(x, instance, budget);
  const double s = static_cast<double>(instance.support().size());
  const double log_d = std::log(static_cast<double>(instance.dim()));
  BoundReport report{BoundKind::PolyEfficient, s * log_d / deltas.max_excess / (gamma * gamma),
                     0.0, 1.0, std::nullopt, {}};
  const double gamma_cap = 1.0 / (24.0 * std::sqrt(2.0));
  if (gamma >= gamma_cap) {
    report.warnings.push_back(
        fmt::format("gamma = {} is outside the hard-instance range (0, {:.6f})", gamma, gamma_cap));
  }
  return report;
}

GapReport gap_comparison(const Eigen::MatrixXd& x, const ProblemInstance& instance, double gamma,
                         std::uint64_t budget) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidParameter, "gamma must be positive");
  GapReport report;
  report.deltas = fixed_design_deltas(x, instance, budget);
  report.gamma = gamma;
  const double log_d = std::log(static_cast<double>(instance.dim()));
  report.optimal = log_d / report.deltas.delta_l;
  report.poly_efficient = log_d / report.deltas.delta_u / (gamma * gamma);
  report.ratio = report.poly_efficient / report.optimal;
  return report;
}

SrcReport check_src(const Eigen::MatrixXd& x, std::size_t s, double c_minus, double c_plus,
                    std::uint64_t budget, std::uint64_t seed) {
  if (c_minus > c_plus) throw Error(ErrorCode::InvalidParameter, "need c_minus <= c_plus");
  const auto d = static_cast<std::size_t>(x.cols());
  if (s < 1 || 2 * s > d) throw Error(ErrorCode::InvalidParameter, "need 1 <= 2s <= d");
  if (budget < 1) throw Error(ErrorCode::InvalidParameter, "budget must be positive");
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd g = x.transpose() * x / n;
  const std::size_t k = 2 * s;

  SrcReport report;
  report.worst_ratio_low = std::numeric_limits<double>::infinity();
  report.worst_ratio_high = -std::numeric_limits<double>::infinity();
  auto inspect = [&](const std::vector<Index>& members) {
    Eigen::MatrixXd block(k, k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            g(static_cast<Eigen::Index>(members[i]), static_cast<Eigen::Index>(members[j]));
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(static_cast<Eigen::Index>(k) - 1);
    auto embed = [&](const Eigen::VectorXd& u) {
      Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < k; ++i) {
        full(static_cast<Eigen::Index>(members[i])) = u(static_cast<Eigen::Index>(i));
      }
      return full;
    };
    if (lo < report.worst_ratio_low) {
      report.worst_ratio_low = lo;
      report.witness_low = SupportSet(members);
      report.witness_low_u = embed(eig.eigenvectors().col(0));
    }
    if (hi > report.worst_ratio_high) {
      report.worst_ratio_high = hi;
      report.witness_high = SupportSet(members);
      report.witness_high_u = embed(eig.eigenvectors().col(static_cast<Eigen::Index>(k) - 1));
    }
    ++report.supports_checked;
  };

  if (binomial(d, k) <= budget) {
    for_each_combination(d, k, inspect);
  } else {
    report.sampled = true;
    Engine rng(derive_stream(seed, "src-supports"));
    std::vector<Index> pool(d);
    for (std::size_t i = 0; i < d; ++i) pool[i] = i;
    for (std::uint64_t i = 0; i < budget; ++i) {
      std::shuffle(pool.begin(), pool.end(), rng);
      std::vector<Index> members(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
      std::sort(members.begin(), members.end());
      inspect(members);
    }
  }
  const bool violated = report.worst_ratio_low < c_minus || report.worst_ratio_high > c_plus;
  report.holds = !violated && !report.sampled;
  return report;
}

}  // namespace subsetlab
