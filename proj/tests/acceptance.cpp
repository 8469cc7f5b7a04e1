// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "subsetlab/design.hpp"
#include "subsetlab/estimators.hpp"
#include "subsetlab/harness.hpp"
#include "subsetlab/re_certifier.hpp"
#include "subsetlab/theory.hpp"

using namespace subsetlab;

namespace {

const std::string kConfigDir = SUBSETLAB_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

SweepConfig config(const std::string& name) { return load_config(kConfigDir + "/" + name); }

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> pick_d(6, 12), pick_s(1, 3);
  std::uniform_real_distribution<double> pick_omega(0.1, 1.0);
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = pick_d(rng);
    const std::size_t s = pick_s(rng);
    const std::vector<double> values(s, 1.0);
    const ProblemInstance inst(make_beta(d, SupportSet::first(s), values), 1.0,
                               make_equicorrelation(d, pick_omega(rng)));
    const DataSet data = sample_dataset(inst, 10 + 2 * d, rng());
    const RssEngine engine(data);
    const auto got = bss(engine, s).support;
    if (std::vector<std::size_t>(got.begin(), got.end()) != oracle::naive_bss(data.x, data.y, s)) ++mismatches;
  }
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = pick_d(rng);
    const std::size_t sbar = pick_s(rng);
    const std::size_t s = std::uniform_int_distribution<std::size_t>(1, sbar)(rng);
    const std::vector<double> values(s, 1.0);
    const double omega = pick_omega(rng);
    const ProblemInstance inst(make_beta(d, SupportSet::first(s), values), 1.0, make_equicorrelation(d, omega));
    const DataSet data = sample_dataset(inst, 10 + 2 * d, rng());
    const RssEngine engine(data);
    const double tau = default_bssu_tau(omega, 1.0);
    const auto got = bssu(engine, sbar, tau).support;
    if (std::vector<std::size_t>(got.begin(), got.end()) != oracle::naive_bssu(data.x, data.y, sbar, tau)) ++mismatches;
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 60.0, fmt::format("{} mismatches in 100 instances, {:.1f} s", mismatches, elapsed)};
}

Outcome closed_form_omega() {
  const double eq = compute_omega_known(make_equicorrelation(8, 0.3), 2).omega;
  const double id = compute_omega_known(make_identity(8), 2).omega;
  const double tb = compute_omega_known(make_two_by_two(1.0), 1).omega;
  const bool ok = std::abs(eq - 0.3) <= 1e-10 && std::abs(id - 1.0) <= 1e-12 && std::abs(tb - 0.5) <= 1e-12;
  return {ok, fmt::format("equicorr {:.15g}, identity {:.15g}, two-by-two {:.15g}", eq, id, tb)};
}

Outcome kl_consistency() {
  const double omega = 0.3, beta = 1.0, sigma2 = 1.0;
  const std::size_t d = 16, s = 3;
  const Covariance sigma = make_equicorrelation(d, omega);
  const Eigen::VectorXd values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s), beta);
  bool ok = true;
  std::string detail;
  for (std::size_t r = 1; r <= s; ++r) {
    std::vector<Index> t;
    for (Index j = 0; j < s - r; ++j) t.push_back(j);
    for (Index j = s; j < s + r; ++j) t.push_back(j);
    const double exact = kl_between_supports(sigma, SupportSet::first(s), values, SupportSet(t), values, sigma2);
    const double expected = static_cast<double>(r) * omega * beta * beta / sigma2;
    const double bound = 2.0 * static_cast<double>(r) * omega * beta * beta / sigma2;
    const MonteCarloEstimate mc =
        empirical_kl(sigma, SupportSet::first(s), values, SupportSet(t), values, sigma2, 100000, 500 + r);
    const bool row = std::abs(exact - expected) <= 1e-10 && exact <= bound &&
                     std::abs(mc.mean - exact) <= 4.0 * mc.standard_error;
    ok = ok && row;
    detail += fmt::format("r={}: {:.6f} vs {:.6f} (mc {:.4f}±{:.4f}); ", r, exact, expected, mc.mean, mc.standard_error);
  }
  return {ok, detail};
}

Outcome chisq_domination() {
  const auto start = std::chrono::steady_clock::now();
  bool ok = true;
  double worst = -1.0;
  for (std::size_t m : {20, 100, 400}) {
    for (double t : {0.1, 0.3, 1.0}) {
      const MonteCarloEstimate mc = empirical_chisq_tail(m, t, 100000, 1000 * m + static_cast<std::uint64_t>(t * 10));
      const double slack = mc.mean - (chisq_tail_bound(m, t) + 3.0 * mc.standard_error);
      worst = std::max(worst, slack);
      ok = ok && slack <= 0.0;
    }
  }
  const double elapsed = seconds_since(start);
  return {ok && elapsed < 120.0, fmt::format("worst empirical - (bound + 3 se) = {:.4g}, {:.1f} s", worst, elapsed)};
}

Outcome phase_transition() {
  const auto start = std::chrono::steady_clock::now();
  const SweepResult r = run_phase_sweep(config("phase_transition.cfg"), 1);
  const auto rows = r.rows_for("bss");
  double max_drop = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) max_drop = std::max(max_drop, rows[i - 1].rate - rows[i].rate);
  const double elapsed = seconds_since(start);
  const bool ok = rows.front().rate <= 0.2 && rows.back().rate >= 0.95 && max_drop <= 0.07 && elapsed < 600.0;
  return {ok, fmt::format("rate {:.3f} at n={}, {:.3f} at n={}, largest drop {:.3f}, {:.1f} s", rows.front().rate,
                          rows.front().n, rows.back().rate, rows.back().n, max_drop, elapsed)};
}

Outcome omega_scaling() {
  const auto sweeps = run_gap_experiment(config("omega_scaling.cfg"), 1);
  const Crossing hi = interpolate_n50(sweeps.at(0).result, "bss");
  const Crossing lo = interpolate_n50(sweeps.at(1).result, "bss");
  if (!hi.n50 || !lo.n50) return {false, fmt::format("n50 status {} / {}", hi.status, lo.status)};
  const double ratio = *lo.n50 / *hi.n50;
  return {ratio >= 2.0 && ratio <= 8.0,
          fmt::format("n50(omega={}) = {:.1f}, n50(omega={}) = {:.1f}, ratio {:.2f}", sweeps[1].omega, *lo.n50,
                      sweeps[0].omega, *hi.n50, ratio)};
}

Outcome unknown_sparsity() {
  const SweepResult bss_sweep = run_phase_sweep(config("phase_transition.cfg"), 1);
  const auto n95 = first_n_reaching(bss_sweep, "bss", 0.95);
  if (!n95) return {false, "BSS never reaches 0.95"};
  SweepConfig c = config("unknown_sparsity.cfg");
  c.estimators = {EstimatorKind::Bssu};
  c.n_grid = {c.n_grid.front(), 2 * *n95};
  const SweepResult r = run_phase_sweep(c, 1);
  std::size_t max_size = 0;
  for (const auto& row : r.rows) max_size = std::max(max_size, row.max_support_size);
  const double rate = r.rows.back().rate;
  return {rate >= 0.9 && max_size <= c.sbar,
          fmt::format("BSS first >= 0.95 at n={}; BSSu rate {:.3f} at n={}; largest output size {} (sbar {})", *n95,
                      rate, 2 * *n95, max_size, c.sbar)};
}

Outcome gap_demo() {
  const auto sweeps = run_gap_experiment(config("gap.cfg"), 1);
  const SweepResult& corr = sweeps.at(0).result;
  const SweepResult& ident = sweeps.at(1).result;
  const auto n95 = first_n_reaching(corr, "bss", 0.95);
  if (!n95) return {false, "BSS never reaches 0.95 at omega = 0.05"};
  auto rate_at = [](const SweepResult& r, const std::string& est, std::size_t n) {
    for (const auto& row : r.rows_for(est)) {
      if (row.n == n) return row.rate;
    }
    return -1.0;
  };
  const double gap = rate_at(corr, "bss", *n95) - rate_at(corr, "marginal", *n95);
  double worst_dominance = 1.0;
  for (const auto& name : {"lasso", "omp", "marginal"}) {
    for (const auto& row : corr.rows_for(name)) {
      worst_dominance = std::min(worst_dominance, rate_at(corr, "bss", row.n) - row.rate);
    }
  }
  bool all_easy = true;
  for (const auto& name : {"bss", "lasso", "omp", "marginal"}) {
    double best = 0.0;
    for (const auto& row : ident.rows_for(name)) best = std::max(best, row.rate);
    all_easy = all_easy && best >= 0.9;
  }
  return {gap >= 0.3 && worst_dominance >= -0.05 && all_easy,
          fmt::format("at n={} bss - marginal = {:.3f}; min(bss - baseline) = {:.3f}; all >= 0.9 at omega=1: {}", *n95,
                      gap, worst_dominance, all_easy)};
}

Outcome re_soundness() {
  std::mt19937_64 rng(909);
  ReOptions options;
  options.restarts = 8;
  options.iters = 200;
  double worst_orth_lo = 1.0, worst_orth_hi = 0.0;
  bool ok = true;
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd g = oracle::gaussian_matrix(40, 10, rng);
    const Eigen::MatrixXd q = g.householderQr().householderQ() * Eigen::MatrixXd::Identity(40, 10);
    const Eigen::MatrixXd x = q * std::sqrt(40.0);
    options.seed = static_cast<std::uint64_t>(rep);
    const ReCertificate c = re_constant(x, 2, options);
    worst_orth_lo = std::min(worst_orth_lo, c.gamma_upper);
    worst_orth_hi = std::max(worst_orth_hi, c.gamma_upper);
    // X^T X / n equals I only up to rounding, so gamma itself is 1 within a few ulp.
    ok = ok && c.gamma_upper >= 0.98 && c.gamma_upper <= 1.0 + 1e-12 && in_re_cone(c.witness_theta, c.witness_s);
  }
  std::size_t random_violations = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index n = 8 + 4 * rep;
    const Eigen::MatrixXd x = oracle::gaussian_matrix(n, 10, rng);
    options.seed = static_cast<std::uint64_t>(100 + rep);
    const ReCertificate c = re_constant(x, 2, options);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x / static_cast<double>(n));
    const double col = x.colwise().squaredNorm().minCoeff() / static_cast<double>(n);
    const bool row = c.gamma_upper >= eig.eigenvalues()(0) - 1e-9 && c.gamma_upper <= col + 1e-9 &&
                     in_re_cone(c.witness_theta, c.witness_s);
    random_violations += row ? 0 : 1;
  }
  ok = ok && random_violations == 0;
  return {ok, fmt::format("orthonormal gamma_upper in [{:.17g}, {:.17g}]; {} violations on 10 random designs",
                          worst_orth_lo, worst_orth_hi, random_violations)};
}

Outcome bound_coherence() {
  const SweepConfig c = config("phase_transition.cfg");
  const auto rows = verify_bounds(c, 1);
  std::size_t checked = 0, violations = 0;
  for (const auto& row : rows) {
    if (!row.empirical_n || !row.lower_equicorr) continue;
    ++checked;
    if (*row.lower_equicorr > static_cast<double>(*row.empirical_n)) ++violations;
  }
  ClassParams p;
  p.d = 64;
  p.s = 2;
  p.beta_min = 1.0;
  p.sigma2 = 1.0;
  bool doubles = true;
  for (double omega : {0.5, 0.25, 0.125}) {
    p.omega = omega;
    const double a = bound_upper_known(p, 0.05).n_value;
    p.omega = omega / 2.0;
    doubles = doubles && std::abs(bound_upper_known(p, 0.05).n_value - 2.0 * a) <= 1e-12 * a;
  }
  double fano_err = 0.0;
  for (std::size_t d : {16, 64, 1000}) {
    for (double omega : {0.05, 0.5}) {
      const double alpha = 1.0 * omega / 1.0;
      const double f = fano_threshold(d, alpha, 0.05).n_threshold;
      fano_err = std::max(fano_err, std::abs(f - bound_lower_unknown(d, 1.0, omega, 1.0, 0.05).n_value));
    }
  }
  const bool ok = checked > 0 && violations == 0 && doubles && fano_err <= 1e-12;
  return {ok, fmt::format("{} rows checked, {} lower > n*; upper doubles: {}; Fano difference {:.2g}", checked,
                          violations, doubles, fano_err)};
}

Outcome determinism() {
  const SweepConfig c = config("phase_transition.cfg");
  const std::string a = format_csv(run_phase_sweep(c, 1));
  const std::string b = format_csv(run_phase_sweep(c, 1));
  const std::string p = format_csv(run_phase_sweep(c, 8));
  const std::string q = format_csv(run_phase_sweep(c, 8));
  return {a == b && a == p && a == q, fmt::format("{} bytes, identical across 1 and 8 workers: {}", a.size(),
                                                  a == b && a == p && a == q)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 oracle equivalence", oracle_equivalence},
      {"2 closed-form omega", closed_form_omega},
      {"3 KL consistency", kl_consistency},
      {"4 chi-square tail domination", chisq_domination},
      {"5 phase transition", phase_transition},
      {"6 omega scaling", omega_scaling},
      {"7 unknown sparsity", unknown_sparsity},
      {"8 computational gap", gap_demo},
      {"9 RE certificate soundness", re_soundness},
      {"10 bound coherence", bound_coherence},
      {"11 determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    fmt::print("{} criterion {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
