#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "subsetlab/design.hpp"
#include "subsetlab/error.hpp"
#include "subsetlab/estimators.hpp"
#include "subsetlab/harness.hpp"
#include "subsetlab/re_certifier.hpp"
#include "subsetlab/sampler.hpp"
#include "subsetlab/theory.hpp"

using namespace subsetlab;

namespace {

void print_bound(const BoundReport& r) {
  std::string line = fmt::format("{} n={:.6g} delta={} constant={}", to_string(r.kind), r.n_value,
                                 r.delta_confidence, r.constant_used);
  if (r.error_floor) line += fmt::format(" error_floor={:.6g}", *r.error_floor);
  fmt::print("{}\n", line);
  for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
}

Eigen::MatrixXd load_x(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".csv") return read_dataset_csv(path).x;
  return read_matrix(path);
}

unsigned default_threads(const SweepConfig& config, std::optional<unsigned> flag) {
  return flag ? std::max(1u, *flag) : config.threads;
}

void print_sweep(const SweepResult& result, const std::string& out) {
  if (out.empty()) {
    fmt::print("{}", format_csv(result));
  } else {
    emit_csv(result, out);
    fmt::print(stderr, "wrote {} (config hash {:016x}, seed {})\n", out, result.config_hash, result.seed);
  }
  for (const auto& row : result.rows) {
    if (row.failures > 0) {
      fmt::print(stderr, "warning: {} failed on {} of {} trials at n={}\n", row.estimator,
                 row.failures, row.trials, row.n);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Best-subset selection: estimators, theory calculators and recovery sweeps"};
  app.require_subcommand(1);

  // gen-design
  auto* gen = app.add_subcommand("gen-design", "Write a covariance matrix");
  std::string gen_kind, gen_in, gen_out;
  std::size_t gen_d = 0;
  double gen_omega = 1.0, gen_b = 0.0;
  gen->add_option("--kind", gen_kind)->required()->check(CLI::IsMember({"identity", "equicorr", "twobytwo", "file"}));
  gen->add_option("--d", gen_d);
  gen->add_option("--omega", gen_omega);
  gen->add_option("--b", gen_b);
  gen->add_option("--in", gen_in);
  gen->add_option("--out", gen_out)->required();

  // omega
  auto* om = app.add_subcommand("omega", "Compute the design constant omega");
  std::string om_design;
  std::optional<std::size_t> om_s, om_sbar;
  std::uint64_t om_budget = 10'000'000;
  unsigned om_threads = 1;
  om->add_option("--design", om_design)->required();
  om->add_option("--s", om_s);
  om->add_option("--sbar", om_sbar);
  om->add_option("--pair-budget", om_budget);
  om->add_option("--threads", om_threads);

  // sample
  auto* smp = app.add_subcommand("sample", "Draw a dataset from a design and coefficient vector");
  std::string smp_design, smp_beta, smp_out;
  double smp_sigma2 = 1.0;
  std::size_t smp_n = 0;
  std::uint64_t smp_seed = 0;
  smp->add_option("--design", smp_design)->required();
  smp->add_option("--beta", smp_beta)->required();
  smp->add_option("--sigma2", smp_sigma2)->required();
  smp->add_option("--n", smp_n)->required();
  smp->add_option("--seed", smp_seed)->required();
  smp->add_option("--out", smp_out)->required();

  // estimate
  auto* est = app.add_subcommand("estimate", "Select a support from a dataset");
  std::string est_data, est_method;
  std::optional<std::size_t> est_s, est_sbar;
  std::optional<double> est_tau, est_omega, est_betamin;
  unsigned est_threads = 1;
  est->add_option("--data", est_data)->required();
  est->add_option("--method", est_method)->required();
  est->add_option("--s", est_s);
  est->add_option("--sbar", est_sbar);
  est->add_option("--tau", est_tau);
  est->add_option("--omega", est_omega);
  est->add_option("--betamin", est_betamin);
  est->add_option("--threads", est_threads);

  // bounds
  auto* bnd = app.add_subcommand("bounds", "Evaluate a sample-complexity bound");
  std::string bnd_kind;
  std::size_t bnd_d = 0, bnd_s = 0, bnd_sbar = 0;
  double bnd_betamin = 1.0, bnd_omega = 1.0, bnd_sigma2 = 1.0, bnd_delta = 0.05, bnd_constant = 1.0;
  std::optional<double> bnd_signal, bnd_snr;
  bnd->add_option("--kind", bnd_kind)->required()->check(CLI::IsMember(
      {"upper-known", "upper-generic", "upper-unknown", "lower-equicorr", "lower-dim", "lower-unknown"}));
  bnd->add_option("--d", bnd_d)->required();
  bnd->add_option("--s", bnd_s);
  bnd->add_option("--sbar", bnd_sbar);
  bnd->add_option("--betamin", bnd_betamin);
  bnd->add_option("--omega", bnd_omega);
  bnd->add_option("--sigma2", bnd_sigma2);
  bnd->add_option("--signal", bnd_signal, "Delta for upper-generic");
  bnd->add_option("--snr", bnd_snr, "beta_min^2/sigma^2 for lower-dim");
  bnd->add_option("--delta", bnd_delta);
  bnd->add_option("--constant", bnd_constant);

  // kl
  auto* kl = app.add_subcommand("kl", "KL divergence between supports on an equicorrelation design");
  std::size_t kl_d = 0, kl_s = 0, kl_r = 1, kl_mc = 0;
  double kl_omega = 1.0, kl_betamin = 1.0, kl_sigma2 = 1.0;
  std::uint64_t kl_seed = 0;
  kl->add_option("--d", kl_d)->required();
  kl->add_option("--s", kl_s)->required();
  kl->add_option("--r", kl_r, "number of swapped indices");
  kl->add_option("--omega", kl_omega);
  kl->add_option("--betamin", kl_betamin);
  kl->add_option("--sigma2", kl_sigma2);
  kl->add_option("--mc", kl_mc, "Monte Carlo samples (0 to skip)");
  kl->add_option("--seed", kl_seed);

  // chisq-check
  auto* chi = app.add_subcommand("chisq-check", "Compare the chi-square tail bound with simulation");
  std::size_t chi_m = 0, chi_trials = 100000;
  double chi_t = 0.0;
  std::uint64_t chi_seed = 0;
  chi->add_option("--m", chi_m)->required();
  chi->add_option("--t", chi_t)->required();
  chi->add_option("--trials", chi_trials);
  chi->add_option("--seed", chi_seed);

  // re
  auto* re = app.add_subcommand("re", "Certified upper bound on the restricted eigenvalue");
  std::string re_x;
  std::size_t re_s = 0;
  ReOptions re_opts;
  re->add_option("--x", re_x)->required();
  re->add_option("--s", re_s)->required();
  re->add_option("--restarts", re_opts.restarts);
  re->add_option("--iters", re_opts.iters);
  re->add_option("--step", re_opts.step);
  re->add_option("--seed", re_opts.seed);
  re->add_option("--sample-supports", re_opts.sample_supports);

  // gap
  auto* gap = app.add_subcommand("gap", "Efficient-versus-optimal comparison");
  std::string gap_config, gap_x, gap_beta, gap_out;
  std::optional<double> gap_sigma2, gap_gamma;
  std::optional<std::size_t> gap_s;
  std::optional<unsigned> gap_threads;
  gap->add_option("--config", gap_config);
  gap->add_option("--x", gap_x);
  gap->add_option("--beta", gap_beta);
  gap->add_option("--sigma2", gap_sigma2);
  gap->add_option("--s", gap_s);
  gap->add_option("--gamma", gap_gamma, "RE constant; certified from X when omitted");
  gap->add_option("--threads", gap_threads);
  gap->add_option("--out", gap_out, "CSV prefix for the config form");

  // sweep / verify-bounds / plot
  auto* swp = app.add_subcommand("sweep", "Run a phase-transition sweep");
  std::string swp_config, swp_out;
  std::optional<unsigned> swp_threads;
  swp->add_option("--config", swp_config)->required();
  swp->add_option("--threads", swp_threads);
  swp->add_option("--out", swp_out, "overrides sweep.out");

  auto* ver = app.add_subcommand("verify-bounds", "Compare empirical n* with the bound calculators");
  std::string ver_config;
  std::optional<unsigned> ver_threads;
  ver->add_option("--config", ver_config)->required();
  ver->add_option("--threads", ver_threads);

  auto* plt = app.add_subcommand("plot", "Write a plotting script for a sweep CSV");
  std::string plt_result, plt_out;
  plt->add_option("--result", plt_result)->required();
  plt->add_option("--out", plt_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto make = [&]() -> Covariance {
        if (gen_kind == "identity") return make_identity(gen_d);
        if (gen_kind == "equicorr") return make_equicorrelation(gen_d, gen_omega);
        if (gen_kind == "twobytwo") return make_two_by_two(gen_b);
        if (gen_in.empty()) throw Error(ErrorCode::InvalidParameter, "--kind file needs --in");
        return load_covariance(gen_in);
      };
      const Covariance sigma = make();
      save_covariance(gen_out, sigma);
      fmt::print("{}\n", sigma.describe());
    } else if (*om) {
      const Covariance sigma = load_covariance(om_design);
      if (om_s.has_value() == om_sbar.has_value()) {
        throw Error(ErrorCode::InvalidParameter, "give exactly one of --s and --sbar");
      }
      const OmegaOptions options{om_budget, om_threads};
      const OmegaReport r = om_s ? compute_omega_known(sigma, *om_s, options)
                                 : compute_omega_unknown(sigma, *om_sbar, options);
      fmt::print("omega={:.17g} witness_S={} witness_T={} pairs={}\n", r.omega,
                 r.witness_s.to_string(), r.witness_t.to_string(), r.pairs_scanned);
    } else if (*smp) {
      const Covariance sigma = load_covariance(smp_design);
      const ProblemInstance instance(parse_beta_spec(smp_beta, sigma.dim()), smp_sigma2, sigma);
      write_dataset_csv(smp_out, sample_dataset(instance, smp_n, smp_seed));
    } else if (*est) {
      const DataSet data = read_dataset_csv(est_data);
      const RssEngine engine(data);
      EstimatorSpec spec;
      spec.kind = parse_estimator_kind(est_method);
      spec.s = est_s.value_or(0);
      spec.sbar = est_sbar.value_or(0);
      if (spec.kind == EstimatorKind::Bssu) {
        if (est_tau) {
          spec.tau = *est_tau;
        } else if (est_omega && est_betamin) {
          spec.tau = default_bssu_tau(*est_omega, *est_betamin);
        } else {
          throw Error(ErrorCode::InvalidParameter, "bssu needs --tau or both --omega and --betamin");
        }
      }
      spec.validate(engine.dim());
      const EstimateResult r = run_estimator(spec, engine, EnumerationOptions{est_threads});
      fmt::print("{} {:.17g}\n", r.support.to_string(), r.objective);
      if (r.padded) fmt::print(stderr, "warning: support padded by screening order\n");
    } else if (*bnd) {
      ClassParams params;
      params.d = bnd_d;
      params.s = bnd_s;
      params.sbar = bnd_sbar;
      params.beta_min = bnd_betamin;
      params.omega = bnd_omega;
      params.sigma2 = bnd_sigma2;
      if (bnd_kind == "upper-known") {
        print_bound(bound_upper_known(params, bnd_delta, bnd_constant));
      } else if (bnd_kind == "upper-generic") {
        if (!bnd_signal) throw Error(ErrorCode::InvalidParameter, "upper-generic needs --signal");
        print_bound(bound_upper_generic(*bnd_signal, bnd_d, bnd_s, bnd_delta, bnd_constant));
      } else if (bnd_kind == "upper-unknown") {
        params.known_sparsity = false;
        print_bound(bound_upper_unknown(params, bnd_delta, bnd_constant));
      } else if (bnd_kind == "lower-equicorr") {
        print_bound(bound_lower_equicorr(params, bnd_delta));
      } else if (bnd_kind == "lower-dim") {
        const double snr = bnd_snr.value_or(bnd_betamin * bnd_betamin / bnd_sigma2);
        print_bound(bound_lower_dimension(bnd_d, bnd_s, snr, bnd_delta));
      } else {
        print_bound(bound_lower_unknown(bnd_d, bnd_betamin, bnd_omega, bnd_sigma2, bnd_delta));
      }
    } else if (*kl) {
      if (kl_r < 1 || kl_r > kl_s || kl_s + kl_r > kl_d) {
        throw Error(ErrorCode::InvalidParameter, "need 1 <= r <= s and s + r <= d");
      }
      const Covariance sigma = make_equicorrelation(kl_d, kl_omega);
      std::vector<Index> t_members;
      for (Index j = 0; j < kl_s - kl_r; ++j) t_members.push_back(j);
      for (Index j = kl_s; j < kl_s + kl_r; ++j) t_members.push_back(j);
      const SupportSet s_set = SupportSet::first(kl_s);
      const SupportSet t_set(t_members);
      const Eigen::VectorXd values = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(kl_s), kl_betamin);
      const double exact = kl_between_supports(sigma, s_set, values, t_set, values, kl_sigma2);
      const double bound = 2.0 * static_cast<double>(kl_r) * kl_omega * kl_betamin * kl_betamin / kl_sigma2;
      fmt::print("S={} T={} kl={:.17g} bound={:.17g}\n", s_set.to_string(), t_set.to_string(), exact, bound);
      if (kl_mc > 0) {
        const MonteCarloEstimate mc = empirical_kl(sigma, s_set, values, t_set, values, kl_sigma2, kl_mc, kl_seed);
        fmt::print("monte_carlo={:.6g} se={:.3g} samples={}\n", mc.mean, mc.standard_error, mc.trials);
      }
    } else if (*chi) {
      const double bound = chisq_tail_bound(chi_m, chi_t);
      const MonteCarloEstimate mc = empirical_chisq_tail(chi_m, chi_t, chi_trials, chi_seed);
      const bool ok = mc.mean <= bound + 3.0 * mc.standard_error;
      fmt::print("m={} t={} bound={:.6g} empirical={:.6g} se={:.3g} {}\n", chi_m, chi_t, bound, mc.mean,
                 mc.standard_error, ok ? "dominated" : "VIOLATED");
      if (!ok) return 1;
    } else if (*re) {
      const Eigen::MatrixXd x = load_x(re_x);
      const ReCertificate cert = re_constant(x, re_s, re_opts);
      fmt::print("gamma_upper={:.17g} witness_S={} supports={}{} converged={}\n", cert.gamma_upper,
                 cert.witness_s.to_string(), cert.supports_scanned,
                 cert.sampled_supports ? " (sampled)" : "", cert.converged);
    } else if (*gap) {
      if (!gap_config.empty()) {
        const SweepConfig config = load_config(gap_config);
        const auto sweeps = run_gap_experiment(config, default_threads(config, gap_threads));
        std::string prefix = gap_out.empty() ? config.out_path : gap_out;
        for (const auto& g : sweeps) {
          if (prefix.empty()) {
            fmt::print("# omega={}\n{}", g.omega, format_csv(g.result));
          } else {
            const std::string path = fmt::format("{}_omega{}.csv", prefix, g.omega);
            emit_csv(g.result, path);
            fmt::print(stderr, "wrote {}\n", path);
          }
        }
      } else {
        if (gap_x.empty() || gap_beta.empty() || !gap_sigma2 || !gap_s) {
          throw Error(ErrorCode::InvalidParameter, "gap needs --config, or --x --beta --sigma2 --s");
        }
        const Eigen::MatrixXd x = load_x(gap_x);
        const auto d = static_cast<std::size_t>(x.cols());
        const ProblemInstance instance(parse_beta_spec(gap_beta, d), *gap_sigma2, make_identity(d));
        if (instance.support().size() != *gap_s) {
          throw Error(ErrorCode::InvalidParameter, "--s does not match the support of --beta");
        }
        const double gamma = gap_gamma ? *gap_gamma : re_constant(x, *gap_s).gamma_upper;
        const GapReport r = gap_comparison(x, instance, gamma);
        fmt::print("quantity,value\n");
        fmt::print("gamma,{:.6g}\n", r.gamma);
        fmt::print("delta_u,{:.6g}\n", r.deltas.delta_u);
        fmt::print("delta_l,{:.6g}\n", r.deltas.delta_l);
        fmt::print("optimal_log_d_over_delta_l,{:.6g}\n", r.optimal);
        fmt::print("poly_log_d_over_delta_u_gamma2,{:.6g}\n", r.poly_efficient);
        fmt::print("ratio,{:.6g}\n", r.ratio);
        print_bound(poly_lower_bound(x, instance, gamma));
      }
    } else if (*swp) {
      const SweepConfig config = load_config(swp_config);
      const SweepResult result = run_phase_sweep(config, default_threads(config, swp_threads));
      print_sweep(result, swp_out.empty() ? config.out_path : swp_out);
    } else if (*ver) {
      const SweepConfig config = load_config(ver_config);
      fmt::print("{}", format_bound_table(verify_bounds(config, default_threads(config, ver_threads))));
    } else if (*plt) {
      emit_plot_script(plt_result, plt_out);
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error ({}): {}\n", to_string(e.code()), e.what());
    switch (e.code()) {
      case ErrorCode::Config: return 2;
      case ErrorCode::BudgetExceeded: return 3;
      default: return 1;
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
