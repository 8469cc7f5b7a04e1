#include "subsetlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "subsetlab/error.hpp"
#include "subsetlab/rng.hpp"

namespace subsetlab {

namespace {

void check_confidence(double delta_conf, bool lower) {
  const double upper_limit = lower ? 0.5 : 1.0;
  if (!(delta_conf > 0.0 && delta_conf < upper_limit)) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("delta must lie in (0, {}), got {}", upper_limit, delta_conf));
  }
}

void check_constant(double constant) {
  if (!(constant > 0.0) || !std::isfinite(constant)) {
    throw Error(ErrorCode::InvalidParameter, "the bound constant must be positive");
  }
}

void check_half_dimension(std::size_t d, std::size_t s, const char* name) {
  if (s < 1 || 2 * s > d) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("the bound assumes 1 <= {} <= d/2 (d = {}, {} = {})", name, d, name,
                            s));
  }
}

void check_snr_inputs(double beta_min, double omega, double sigma2) {
  if (!(beta_min > 0.0) || !(omega > 0.0) || !(sigma2 > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "beta_min, omega and sigma2 must be positive");
  }
}

std::vector<std::vector<Index>> size_s_alternatives(std::size_t d, std::size_t s,
                                                    std::uint64_t budget) {
  const std::uint64_t count = binomial(d, s);
  if (count > budget) {
    throw Error(ErrorCode::BudgetExceeded,
                fmt::format("enumerating {} alternatives exceeds the budget {}", count, budget));
  }
  std::vector<std::vector<Index>> out;
  out.reserve(count);
  for_each_combination(d, s, [&](const std::vector<Index>& c) { out.push_back(c); });
  return out;
}

Eigen::VectorXd restrict(const Eigen::VectorXd& beta, const SupportSet& set) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = beta(static_cast<Eigen::Index>(set[i]));
  }
  return out;
}

Eigen::VectorXd scatter(std::size_t d, const SupportSet& set, const Eigen::VectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != set.size()) {
    throw Error(ErrorCode::InvalidDimension, "coefficient count differs from support size");
  }
  if (set.bound() > d) throw Error(ErrorCode::InvalidDimension, "support index out of range");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < set.size(); ++i) {
    out(static_cast<Eigen::Index>(set[i])) = values(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace

double pairwise_delta(const ProblemInstance& instance, const SupportSet& t) {
  const SupportSet& truth = instance.support();
  const SupportSet diff = truth.minus(t);
  if (diff.empty()) return 0.0;
  const Eigen::MatrixXd cond = conditional_covariance(instance.design(), truth, t);
  const Eigen::VectorXd b = restrict(instance.beta(), diff);
  return b.dot(cond * b) / instance.sigma2();
}

SignalReport signal_delta(const ProblemInstance& instance, std::uint64_t budget) {
  const SupportSet& truth = instance.support();
  const std::size_t d = instance.dim();
  const std::size_t s = truth.size();
  if (s < 1 || s >= d) {
    throw Error(ErrorCode::InvalidParameter, "signal needs 1 <= |S*| < d");
  }
  SignalReport report;
  report.delta = std::numeric_limits<double>::infinity();
  report.local_omega = std::numeric_limits<double>::infinity();
  for (const auto& members : size_s_alternatives(d, s, budget)) {
    SupportSet t(members);
    if (t == truth) continue;
    ++report.alternatives;
    const SupportSet diff = truth.minus(t);
    const Eigen::MatrixXd cond = conditional_covariance(instance.design(), truth, t);
    const Eigen::VectorXd b = restrict(instance.beta(), diff);
    const double ell = static_cast<double>(diff.size());
    const double scaled = b.dot(cond * b) / instance.sigma2() / ell;
    report.local_omega = std::min(report.local_omega, min_eigenvalue(cond));
    auto [it, inserted] = report.per_ell.emplace(diff.size(), scaled);
    if (!inserted) it->second = std::min(it->second, scaled);
    if (scaled < report.delta) {
      report.delta = scaled;
      report.witness_t = t;
    }
  }
  const double beta_min = instance.beta_min();
  const double floor = beta_min * beta_min * report.local_omega / instance.sigma2();
  if (report.delta < floor * (1.0 - 1e-10)) {
    throw Error(ErrorCode::Internal,
                fmt::format("signal {} falls below beta_min^2 omega / sigma^2 = {}", report.delta,
                            floor));
  }
  return report;
}

FixedDesignDeltas fixed_design_deltas(const Eigen::MatrixXd& x, const ProblemInstance& instance,
                                      std::uint64_t budget) {
  const std::size_t d = instance.dim();
  if (static_cast<std::size_t>(x.cols()) != d) {
    throw Error(ErrorCode::InvalidDimension, "design matrix width differs from beta length");
  }
  const SupportSet& truth = instance.support();
  const std::size_t s = truth.size();
  if (s < 1 || s >= d) throw Error(ErrorCode::InvalidParameter, "need 1 <= |S*| < d");
  if (s > static_cast<std::size_t>(x.rows())) {
    throw Error(ErrorCode::InvalidParameter, "|T| = s exceeds n");
  }
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd gram = x.transpose() * x;

  FixedDesignDeltas out;
  out.delta_u = -std::numeric_limits<double>::infinity();
  out.delta_l = std::numeric_limits<double>::infinity();
  out.max_excess = -std::numeric_limits<double>::infinity();
  for (const auto& members : size_s_alternatives(d, s, budget)) {
    SupportSet t(members);
    if (t == truth) continue;
    const SupportSet diff = truth.minus(t);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (Index j : diff) b(static_cast<Eigen::Index>(j)) = instance.beta()(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd gb = gram * b;
    Eigen::MatrixXd gtt(s, s);
    Eigen::VectorXd w(s);
    for (std::size_t i = 0; i < s; ++i) {
      w(static_cast<Eigen::Index>(i)) = gb(static_cast<Eigen::Index>(t[i]));
      for (std::size_t k = 0; k < s; ++k) {
        gtt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            gram(static_cast<Eigen::Index>(t[i]), static_cast<Eigen::Index>(t[k]));
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gtt);
    if (llt.info() != Eigen::Success ||
        llt.matrixLLT().diagonal().minCoeff() <= 1e-7 * std::sqrt(gtt.diagonal().maxCoeff())) {
      ++out.skipped_singular;
      continue;
    }
    const Eigen::VectorXd half = llt.matrixL().solve(w);
    const double excess =
        std::max(0.0, b.dot(gb) - half.squaredNorm()) / (n * instance.sigma2());
    const double scaled = excess / static_cast<double>(diff.size());
    out.max_excess = std::max(out.max_excess, excess);
    if (scaled > out.delta_u) {
      out.delta_u = scaled;
      out.witness_u = t;
    }
    if (scaled < out.delta_l) {
      out.delta_l = scaled;
      out.witness_l = t;
    }
  }
  if (!std::isfinite(out.delta_l)) {
    throw Error(ErrorCode::Singular, "every alternative support has a singular design block");
  }
  return out;
}

const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::UpperKnown: return "upper-known";
    case BoundKind::UpperGeneric: return "upper-generic";
    case BoundKind::UpperUnknown: return "upper-unknown";
    case BoundKind::LowerEquiCorr: return "lower-equicorr";
    case BoundKind::LowerDimension: return "lower-dim";
    case BoundKind::LowerUnknown: return "lower-unknown";
    case BoundKind::PolyEfficient: return "poly-efficient";
  }
  return "unknown";
}

BoundReport bound_upper_known(const ClassParams& params, double delta_conf, double constant) {
  check_confidence(delta_conf, false);
  check_constant(constant);
  check_half_dimension(params.d, params.s, "s");
  check_snr_inputs(params.beta_min, params.omega, params.sigma2);
  const double d = static_cast<double>(params.d);
  const double s = static_cast<double>(params.s);
  const double log_inv = std::log(1.0 / delta_conf);
  const double signal_term = (std::log(d - s) + log_inv) / params.snr_floor();
  const double count_term = log_binomial(d - s, s) + log_inv;
  return BoundReport{BoundKind::UpperKnown, constant * std::max(signal_term, count_term),
                     delta_conf, constant, std::nullopt, {}};
}

BoundReport bound_upper_generic(double signal, std::size_t d, std::size_t s, double delta_conf,
                                double constant) {
  check_confidence(delta_conf, false);
  check_constant(constant);
  check_half_dimension(d, s, "s");
  if (!(signal > 0.0)) throw Error(ErrorCode::InvalidParameter, "signal Delta must be positive");
  const double log_inv = std::log(1.0 / delta_conf);
  double worst = 0.0;
  for (std::size_t ell = 1; ell <= s; ++ell) {
    const double e = static_cast<double>(ell);
    const double term =
        (log_binomial(static_cast<double>(d - s), e) + log_inv) / std::min(e * signal, 1.0);
    worst = std::max(worst, term);
  }
  return BoundReport{BoundKind::UpperGeneric, constant * worst, delta_conf, constant,
                     std::nullopt, {}};
}

BoundReport bound_upper_unknown(const ClassParams& params, double delta_conf, double constant) {
  check_confidence(delta_conf, false);
  check_constant(constant);
  check_half_dimension(params.d, params.sbar, "sbar");
  check_snr_inputs(params.beta_min, params.omega, params.sigma2);
  const double d = static_cast<double>(params.d);
  const double log_inv = std::log(1.0 / delta_conf);
  const double signal_term = (std::log(d) + log_inv) / params.snr_floor();
  const double count_term = log_binomial(d, static_cast<double>(params.sbar)) + log_inv;
  return BoundReport{BoundKind::UpperUnknown, constant * std::max(signal_term, count_term),
                     delta_conf, constant, std::nullopt, {}};
}

BoundReport bound_lower_equicorr(const ClassParams& params, double delta_conf) {
  check_confidence(delta_conf, true);
  check_half_dimension(params.d, params.s, "s");
  check_snr_inputs(params.beta_min, params.omega, params.sigma2);
  if (!(params.omega < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "the equi-correlation lower bound needs omega < 1");
  }
  const double rest = static_cast<double>(params.d - params.s);
  double worst = 0.0;
  for (std::size_t ell = 1; ell <= params.s; ++ell) {
    const double e = static_cast<double>(ell);
    worst = std::max(worst, log_binomial(rest, e) / (e * params.snr_floor()));
  }
  BoundReport report{BoundKind::LowerEquiCorr, (1.0 - 2.0 * delta_conf) / 2.0 * worst,
                     delta_conf, 1.0, std::nullopt, {}};
  report.error_floor =
      delta_conf - std::log(2.0) / log_binomial(rest, static_cast<double>(params.s));
  if (*report.error_floor <= 0.0) report.warnings.push_back("error floor is vacuous");
  return report;
}

BoundReport bound_lower_dimension(std::size_t d, std::size_t s, double snr, double delta_conf) {
  if (!(delta_conf > 0.0 && delta_conf < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "delta must lie in (0, 1)");
  }
  if (s < 1 || s > d) throw Error(ErrorCode::InvalidParameter, "need 1 <= s <= d");
  const double ss = static_cast<double>(s);
  if (!(snr * ss > 0.0) || !std::isfinite(snr)) {
    throw Error(ErrorCode::InvalidParameter, "s * snr must be positive (log(1 + s snr) = 0)");
  }
  BoundReport report{BoundKind::LowerDimension,
                     2.0 * (1.0 - delta_conf) *
                         (log_binomial(static_cast<double>(d), ss) - 1.0) /
                         std::log(1.0 + ss * snr),
                     delta_conf, 1.0, delta_conf, {}};
  if (snr > 1.0) {
    report.warnings.push_back("snr > 1: the dimension lower bound assumes bounded snr");
  }
  if (report.n_value <= 0.0) report.warnings.push_back("log C(d, s) <= 1: bound is vacuous");
  return report;
}

BoundReport bound_lower_unknown(std::size_t d, double beta_min, double omega, double sigma2,
                                double delta_conf) {
  check_confidence(delta_conf, true);
  check_snr_inputs(beta_min, omega, sigma2);
  if (d < 2) throw Error(ErrorCode::InvalidParameter, "need d >= 2");
  if (!(omega < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "the unknown-sparsity lower bound needs omega < 1");
  }
  const double log_d = std::log(static_cast<double>(d));
  const double alpha = beta_min * beta_min * omega / sigma2;
  BoundReport report{BoundKind::LowerUnknown, (1.0 - 2.0 * delta_conf) * log_d / alpha,
                     delta_conf, 1.0, delta_conf - std::log(2.0) / log_d, {}};
  if (*report.error_floor <= 0.0) report.warnings.push_back("error floor is vacuous");
  return report;
}

double kl_between_supports(const Covariance& sigma, const SupportSet& s_set,
                           const Eigen::VectorXd& beta_s, const SupportSet& t_set,
                           const Eigen::VectorXd& beta_t, double sigma2) {
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::InvalidParameter, "sigma2 must be positive");
  const std::size_t d = sigma.dim();
  const Eigen::VectorXd v = scatter(d, s_set, beta_s) - scatter(d, t_set, beta_t);
  return std::max(0.0, v.dot(sigma.matrix() * v)) / (2.0 * sigma2);
}

MonteCarloEstimate empirical_kl(const Covariance& sigma, const SupportSet& s_set,
                                const Eigen::VectorXd& beta_s, const SupportSet& t_set,
                                const Eigen::VectorXd& beta_t, double sigma2, std::size_t samples,
                                std::uint64_t seed) {
  if (samples < 2) throw Error(ErrorCode::InvalidParameter, "need at least two samples");
  const std::size_t d = sigma.dim();
  const Eigen::VectorXd bs = scatter(d, s_set, beta_s);
  const Eigen::VectorXd bt = scatter(d, t_set, beta_t);
  const Eigen::MatrixXd& lower = sigma.cholesky_lower();
  Engine rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(sigma2);
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = normal(rng);
    const Eigen::VectorXd x = lower * z;
    const double mean_s = x.dot(bs);
    const double y = mean_s + sd * normal(rng);
    const double rs = y - mean_s;
    const double rt = y - x.dot(bt);
    const double llr = (rt * rt - rs * rs) / (2.0 * sigma2);
    sum += llr;
    sum_sq += llr * llr;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n), samples};
}

FanoResult fano_threshold(std::uint64_t m_count, double alpha, double delta_conf) {
  if (m_count < 2) throw Error(ErrorCode::InvalidParameter, "Fano needs M >= 2");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidParameter, "KL bound alpha must be positive");
  if (!(delta_conf > 0.0 && delta_conf < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "delta must lie in (0, 1)");
  }
  const double log_m = std::log(static_cast<double>(m_count));
  FanoResult out;
  out.n_threshold = (1.0 - 2.0 * delta_conf) * log_m / alpha;
  out.error_floor = delta_conf - std::log(2.0) / log_m;
  out.vacuous = out.error_floor <= 0.0;
  return out;
}

double chisq_tail_bound(std::size_t m, double t) {
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "degrees of freedom must be positive");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidParameter, "t must be nonnegative");
  return std::exp(-static_cast<double>(m) * std::min(t, t * t));
}

MonteCarloEstimate empirical_chisq_tail(std::size_t m, double t, std::size_t trials,
                                        std::uint64_t seed) {
  if (m < 1) throw Error(ErrorCode::InvalidParameter, "degrees of freedom must be positive");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidParameter, "t must be nonnegative");
  if (trials < 1000) throw Error(ErrorCode::InvalidParameter, "need at least 1000 trials");
  Engine rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double mm = static_cast<double>(m);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    double z = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double g = normal(rng);
      z += g * g;
    }
    if (std::abs(z - mm) / mm >= 4.0 * t) ++hits;
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), trials};
}

}  // namespace subsetlab
