#include "subsetlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "subsetlab/error.hpp"
#include "subsetlab/parallel.hpp"

namespace subsetlab {

namespace {

constexpr double kPivotTolerance = 1e-10;
constexpr std::size_t kLassoGridSize = 50;
constexpr double kLassoGridRatio = 1e-3;

// Number of supports of size in [lo, hi] that extend a prefix whose next index
// failed, when `free` indices remain after it.
std::uint64_t skipped_supports(std::size_t prefix, std::size_t free, std::size_t lo,
                               std::size_t hi) {
  std::uint64_t total = 0;
  for (std::size_t size = std::max(lo, prefix); size <= hi; ++size) {
    total += binomial(free, size - prefix);
  }
  return total;
}

struct Best {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<Index> members;
  bool found = false;
  std::uint64_t evaluated = 0;
  std::uint64_t singular = 0;

  // Candidates arrive in lexicographic order, so on equal objective only a
  // strictly smaller size may replace the incumbent.
  void offer(double objective_value, const std::vector<Index>& candidate) {
    ++evaluated;
    if (!found || objective_value < objective ||
        (objective_value == objective && candidate.size() < members.size())) {
      objective = objective_value;
      members = candidate;
      found = true;
    }
  }

  void merge(const Best& later) {
    evaluated += later.evaluated;
    singular += later.singular;
    if (later.found) {
      if (!found || later.objective < objective ||
          (later.objective == objective && later.members.size() < members.size())) {
        objective = later.objective;
        members = later.members;
        found = true;
      }
    }
  }
};

template <class Objective>
void descend(CholeskyPath& path, Index start, std::size_t d, std::size_t lo, std::size_t hi,
             Objective& objective, Best& best) {
  const std::size_t depth = path.size();
  if (depth >= lo) best.offer(objective(path.rss(), depth), path.members());
  if (depth == hi) return;
  const std::size_t needed_after = lo > depth + 1 ? lo - depth - 1 : 0;
  for (Index j = start; j + needed_after < d; ++j) {
    if (!path.push(j)) {
      best.singular += skipped_supports(depth + 1, d - j - 1, lo, hi);
      continue;
    }
    descend(path, j + 1, d, lo, hi, objective, best);
    path.pop();
  }
}

// Exhaustive search split by first index; task 0 is the empty support.
template <class Objective>
EstimateResult enumerate(const RssEngine& engine, std::size_t lo, std::size_t hi,
                         Objective objective, const EnumerationOptions& options) {
  const std::size_t d = engine.dim();
  const std::size_t tasks = d + 1;
  std::vector<Best> partial(tasks);
  parallel_for(tasks, options.threads, [&](std::size_t task, unsigned) {
    CholeskyPath path(engine, std::max<std::size_t>(hi, 1));
    Best& best = partial[task];
    if (task == 0) {
      if (lo == 0) best.offer(objective(path.rss(), 0), path.members());
      return;
    }
    const Index j = task - 1;
    if (hi == 0) return;
    const std::size_t needed_after = lo > 1 ? lo - 1 : 0;
    if (j + needed_after >= d) return;
    if (!path.push(j)) {
      best.singular += skipped_supports(1, d - j - 1, lo, hi);
      return;
    }
    descend(path, j + 1, d, lo, hi, objective, best);
  });
  Best total;
  for (const Best& b : partial) total.merge(b);
  EstimateResult result;
  result.evaluated = total.evaluated;
  result.singular = total.singular;
  if (!total.found) {
    throw Error(ErrorCode::Singular, "every candidate support has a singular Gram submatrix");
  }
  result.support = SupportSet(total.members);
  result.objective = total.objective;
  return result;
}

}  // namespace

RssEngine::RssEngine(const DataSet& data) : RssEngine(data.x, data.y) {}

RssEngine::RssEngine(const Eigen::MatrixXd& x, const Eigen::VectorXd& y)
    : n_(static_cast<std::size_t>(x.rows())) {
  if (x.rows() < 1) throw Error(ErrorCode::InvalidParameter, "need at least one sample");
  if (y.size() != x.rows()) {
    throw Error(ErrorCode::InvalidDimension, "X and Y have different numbers of rows");
  }
  gram_.noalias() = x.transpose() * x;
  gram_ = 0.5 * (gram_ + gram_.transpose()).eval();
  xty_.noalias() = x.transpose() * y;
  yty_ = y.squaredNorm();
}

double RssEngine::rss(const SupportSet& s) const {
  if (s.bound() > dim()) throw Error(ErrorCode::InvalidDimension, "support index out of range");
  CholeskyPath path(*this, std::max<std::size_t>(s.size(), 1));
  for (Index j : s) {
    if (!path.push(j)) {
      throw Error(ErrorCode::Singular,
                  fmt::format("Gram submatrix on support {{{}}} is singular", s.to_string()));
    }
  }
  return path.rss();
}

CholeskyPath::CholeskyPath(const RssEngine& engine, std::size_t capacity)
    : engine_(engine), capacity_(capacity), lower_(capacity * capacity, 0.0), z_(capacity, 0.0),
      projected_(capacity, 0.0) {
  members_.reserve(capacity);
}

bool CholeskyPath::push(Index j) {
  const std::size_t k = members_.size();
  if (k == capacity_) throw Error(ErrorCode::Internal, "Cholesky path capacity exceeded");
  const Eigen::MatrixXd& g = engine_.gram();
  const auto jj = static_cast<Eigen::Index>(j);
  double* row = &lower_[k * capacity_];
  for (std::size_t i = 0; i < k; ++i) {
    const double* other = &lower_[i * capacity_];
    double sum = g(jj, static_cast<Eigen::Index>(members_[i]));
    for (std::size_t m = 0; m < i; ++m) sum -= row[m] * other[m];
    row[i] = sum / other[i];
  }
  const double gjj = g(jj, jj);
  double diag = gjj;
  for (std::size_t m = 0; m < k; ++m) diag -= row[m] * row[m];
  if (!(gjj > 0.0) || !(diag > kPivotTolerance * gjj)) return false;
  row[k] = std::sqrt(diag);
  double zk = engine_.xty()(jj);
  for (std::size_t m = 0; m < k; ++m) zk -= row[m] * z_[m];
  zk /= row[k];
  z_[k] = zk;
  projected_[k] = (k ? projected_[k - 1] : 0.0) + zk * zk;
  members_.push_back(j);
  return true;
}

void CholeskyPath::pop() { members_.pop_back(); }

double CholeskyPath::rss() const {
  const double fitted = members_.empty() ? 0.0 : projected_[members_.size() - 1];
  return std::max(0.0, engine_.yty() - fitted);
}

Eigen::VectorXd CholeskyPath::coefficients() const {
  const std::size_t k = members_.size();
  Eigen::VectorXd beta(static_cast<Eigen::Index>(k));
  for (std::size_t ii = k; ii-- > 0;) {
    double sum = z_[ii];
    for (std::size_t m = ii + 1; m < k; ++m) {
      sum -= lower_[m * capacity_ + ii] * beta(static_cast<Eigen::Index>(m));
    }
    beta(static_cast<Eigen::Index>(ii)) = sum / lower_[ii * capacity_ + ii];
  }
  return beta;
}

EstimateResult bss(const RssEngine& engine, std::size_t s, const EnumerationOptions& options) {
  if (s < 1 || s > std::min(engine.n(), engine.dim())) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("bss needs 1 <= s <= min(n, d) (s = {}, n = {}, d = {})", s,
                            engine.n(), engine.dim()));
  }
  return enumerate(engine, s, s, [](double rss, std::size_t) { return rss; }, options);
}

EstimateResult penalized_best_subset(const RssEngine& engine, const PenalizedSearch& search,
                                     const EnumerationOptions& options) {
  const double n = static_cast<double>(engine.n());
  if (search.max_size > engine.dim() || search.min_size > search.max_size) {
    throw Error(ErrorCode::InvalidParameter, "support size range is invalid for this dimension");
  }
  if (search.scale == ResidualScale::DegreesOfFreedom && search.max_size >= engine.n()) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("sbar = {} must be below n = {} so that n - |S| > 0", search.max_size,
                            engine.n()));
  }
  if (!(search.penalty_per_variable >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "penalty must be nonnegative");
  }
  const double penalty = search.penalty_per_variable;
  if (search.scale == ResidualScale::DegreesOfFreedom) {
    return enumerate(
        engine, search.min_size, search.max_size,
        [n, penalty](double rss, std::size_t k) {
          const double kk = static_cast<double>(k);
          return rss / (n - kk) + kk * penalty;
        },
        options);
  }
  return enumerate(
      engine, search.min_size, search.max_size,
      [n, penalty](double rss, std::size_t k) {
        return rss / n + static_cast<double>(k) * penalty;
      },
      options);
}

EstimateResult bssu(const RssEngine& engine, std::size_t sbar, double tau,
                    const EnumerationOptions& options) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::InvalidParameter, fmt::format("tau must be positive, got {}", tau));
  }
  return penalized_best_subset(engine, {sbar, 0, tau, ResidualScale::DegreesOfFreedom}, options);
}

double default_bssu_tau(double omega, double beta_min) {
  return 0.25 * omega * beta_min * beta_min;
}

EstimateResult aic(const RssEngine& engine, std::size_t sbar, const EnumerationOptions& options) {
  const double n = static_cast<double>(engine.n());
  if (sbar >= engine.n()) {
    throw Error(ErrorCode::InvalidParameter, "sbar must be below n");
  }
  return penalized_best_subset(engine, {sbar, 0, 2.0 / n, ResidualScale::SampleSize}, options);
}

EstimateResult bic(const RssEngine& engine, std::size_t sbar, const EnumerationOptions& options) {
  const double n = static_cast<double>(engine.n());
  if (sbar >= engine.n()) {
    throw Error(ErrorCode::InvalidParameter, "sbar must be below n");
  }
  return penalized_best_subset(engine, {sbar, 0, std::log(n) / n, ResidualScale::SampleSize},
                               options);
}

LassoFit lasso_cd(const RssEngine& engine, double lambda, double tol, std::size_t max_iter,
                  const Eigen::VectorXd* warm_start) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidParameter, "lambda must be nonnegative");
  const auto d = static_cast<Eigen::Index>(engine.dim());
  const double n = static_cast<double>(engine.n());
  const Eigen::MatrixXd& g = engine.gram();
  const Eigen::VectorXd& c = engine.xty();

  LassoFit fit;
  fit.coef = warm_start ? *warm_start : Eigen::VectorXd::Zero(d);
  // residual_corr = (X^T Y - X^T X theta) / n
  Eigen::VectorXd residual_corr = (c - g * fit.coef) / n;
  for (fit.iterations = 0; fit.iterations < max_iter;) {
    ++fit.iterations;
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double gjj = g(j, j) / n;
      const double old = fit.coef(j);
      double updated = 0.0;
      if (gjj > 0.0) {
        const double rho = residual_corr(j) + gjj * old;
        const double shrunk = std::max(std::abs(rho) - lambda, 0.0);
        if (shrunk > 0.0) updated = std::copysign(shrunk, rho) / gjj;
      }
      const double delta = updated - old;
      if (delta != 0.0) {
        fit.coef(j) = updated;
        residual_corr.noalias() -= (delta / n) * g.col(j);
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

LassoFit lasso_cd(const DataSet& data, double lambda, double tol, std::size_t max_iter) {
  return lasso_cd(RssEngine(data), lambda, tol, max_iter);
}

double lasso_lambda_max(const RssEngine& engine) {
  return engine.xty().cwiseAbs().maxCoeff() / static_cast<double>(engine.n());
}

std::vector<Index> screening_order(const RssEngine& engine) {
  std::vector<Index> order(engine.dim());
  std::iota(order.begin(), order.end(), Index{0});
  const Eigen::VectorXd& c = engine.xty();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(c(static_cast<Eigen::Index>(a))) > std::abs(c(static_cast<Eigen::Index>(b)));
  });
  return order;
}

SupportSet lasso_support(const Eigen::VectorXd& coef, std::size_t s,
                         std::span<const Index> padding_order, bool* padded) {
  const auto d = static_cast<std::size_t>(coef.size());
  if (s > d) throw Error(ErrorCode::InvalidParameter, "s exceeds the dimension");
  std::vector<Index> order(d);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(coef(static_cast<Eigen::Index>(a))) >
           std::abs(coef(static_cast<Eigen::Index>(b)));
  });
  std::vector<Index> chosen;
  for (Index j : order) {
    if (chosen.size() == s) break;
    if (coef(static_cast<Eigen::Index>(j)) != 0.0) chosen.push_back(j);
  }
  const bool short_of_s = chosen.size() < s;
  for (Index j : padding_order) {
    if (chosen.size() == s) break;
    if (std::find(chosen.begin(), chosen.end(), j) == chosen.end()) chosen.push_back(j);
  }
  if (chosen.size() < s) {
    throw Error(ErrorCode::InvalidParameter, "padding order too short to fill the support");
  }
  if (padded) *padded = short_of_s;
  return SupportSet(std::move(chosen));
}

EstimateResult lasso_select(const RssEngine& engine, std::size_t s) {
  if (s < 1 || s > engine.dim()) throw Error(ErrorCode::InvalidParameter, "need 1 <= s <= d");
  const double lambda_max = lasso_lambda_max(engine);
  const auto d = static_cast<Eigen::Index>(engine.dim());
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(d);
  bool converged = true;
  if (lambda_max > 0.0) {
    for (std::size_t i = 0; i < kLassoGridSize; ++i) {
      const double frac = static_cast<double>(i) / static_cast<double>(kLassoGridSize - 1);
      const double lambda = lambda_max * std::pow(kLassoGridRatio, frac);
      LassoFit fit = lasso_cd(engine, lambda, 1e-8, 10'000, &coef);
      coef = std::move(fit.coef);
      converged = fit.converged;
      if (static_cast<std::size_t>((coef.array() != 0.0).count()) >= s) break;
    }
  }
  const std::vector<Index> order = screening_order(engine);
  EstimateResult result;
  result.support = lasso_support(coef, s, order, &result.padded);
  result.converged = converged;
  result.objective = engine.rss(result.support);
  result.evaluated = 1;
  return result;
}

EstimateResult omp(const RssEngine& engine, std::size_t s) {
  if (s < 1 || s > std::min(engine.n(), engine.dim())) {
    throw Error(ErrorCode::InvalidParameter, "omp needs 1 <= s <= min(n, d)");
  }
  const auto d = static_cast<Eigen::Index>(engine.dim());
  const Eigen::MatrixXd& g = engine.gram();
  const Eigen::VectorXd& c = engine.xty();
  CholeskyPath path(engine, s);
  std::vector<bool> selected(engine.dim(), false);
  Eigen::VectorXd corr = c;
  EstimateResult result;
  while (path.size() < s) {
    Eigen::Index pick = -1;
    double best = -1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (selected[static_cast<std::size_t>(j)]) continue;
      if (std::abs(corr(j)) > best) {
        best = std::abs(corr(j));
        pick = j;
      }
    }
    if (!path.push(static_cast<Index>(pick))) {
      result.padded = true;
      break;
    }
    selected[static_cast<std::size_t>(pick)] = true;
    // X^T r = X^T Y - X^T X_S beta_S
    const Eigen::VectorXd beta = path.coefficients();
    corr = c;
    for (std::size_t i = 0; i < path.size(); ++i) {
      corr.noalias() -= beta(static_cast<Eigen::Index>(i)) *
                        g.col(static_cast<Eigen::Index>(path.members()[i]));
    }
  }
  std::vector<Index> chosen = path.members();
  if (chosen.size() < s) {
    for (Index j : screening_order(engine)) {
      if (chosen.size() == s) break;
      if (!selected[j]) {
        chosen.push_back(j);
        selected[j] = true;
      }
    }
  }
  result.support = SupportSet(std::move(chosen));
  result.objective = result.padded ? std::numeric_limits<double>::quiet_NaN() : path.rss();
  result.evaluated = s;
  return result;
}

EstimateResult marginal_screening(const RssEngine& engine, std::size_t s) {
  if (s < 1 || s > engine.dim()) throw Error(ErrorCode::InvalidParameter, "need 1 <= s <= d");
  std::vector<Index> order = screening_order(engine);
  order.resize(s);
  EstimateResult result;
  result.support = SupportSet(std::move(order));
  try {
    result.objective = engine.rss(result.support);
  } catch (const Error&) {
    result.objective = std::numeric_limits<double>::quiet_NaN();
  }
  result.evaluated = 1;
  return result;
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Bss: return "bss";
    case EstimatorKind::Bssu: return "bssu";
    case EstimatorKind::Aic: return "aic";
    case EstimatorKind::Bic: return "bic";
    case EstimatorKind::Lasso: return "lasso";
    case EstimatorKind::Omp: return "omp";
    case EstimatorKind::Marginal: return "marginal";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  for (auto kind : {EstimatorKind::Bss, EstimatorKind::Bssu, EstimatorKind::Aic,
                    EstimatorKind::Bic, EstimatorKind::Lasso, EstimatorKind::Omp,
                    EstimatorKind::Marginal}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::InvalidParameter, fmt::format("unknown estimator '{}'", name));
}

std::string EstimatorSpec::name() const { return std::string(to_string(kind)); }

void EstimatorSpec::validate(std::size_t d) const {
  switch (kind) {
    case EstimatorKind::Bss:
    case EstimatorKind::Lasso:
    case EstimatorKind::Omp:
    case EstimatorKind::Marginal:
      if (s < 1 || s > d) {
        throw Error(ErrorCode::InvalidParameter,
                    fmt::format("{} needs 1 <= s <= d (s = {}, d = {})", name(), s, d));
      }
      break;
    case EstimatorKind::Bssu:
      if (!(tau > 0.0)) throw Error(ErrorCode::InvalidParameter, "bssu needs tau > 0");
      [[fallthrough]];
    case EstimatorKind::Aic:
    case EstimatorKind::Bic:
      if (sbar > d) {
        throw Error(ErrorCode::InvalidParameter,
                    fmt::format("{} needs sbar <= d (sbar = {}, d = {})", name(), sbar, d));
      }
      break;
  }
}

EstimateResult run_estimator(const EstimatorSpec& spec, const RssEngine& engine,
                             const EnumerationOptions& options) {
  switch (spec.kind) {
    case EstimatorKind::Bss: return bss(engine, spec.s, options);
    case EstimatorKind::Bssu: return bssu(engine, spec.sbar, spec.tau, options);
    case EstimatorKind::Aic: return aic(engine, spec.sbar, options);
    case EstimatorKind::Bic: return bic(engine, spec.sbar, options);
    case EstimatorKind::Lasso: return lasso_select(engine, spec.s);
    case EstimatorKind::Omp: return omp(engine, spec.s);
    case EstimatorKind::Marginal: return marginal_screening(engine, spec.s);
  }
  throw Error(ErrorCode::Internal, "unhandled estimator kind");
}

}  // namespace subsetlab
