#include "subsetlab/harness.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "subsetlab/error.hpp"
#include "subsetlab/parallel.hpp"
#include "subsetlab/rng.hpp"
#include "subsetlab/theory.hpp"

namespace subsetlab {

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::Config, message); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0' || !std::isfinite(v)) {
    config_error(fmt::format("{}: '{}' is not a number", key, value));
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    config_error(fmt::format("{}: '{}' is not a nonnegative integer", key, value));
  }
  errno = 0;
  const auto v = std::strtoull(value.c_str(), nullptr, 10);
  if (errno == ERANGE) config_error(fmt::format("{}: '{}' is out of range", key, value));
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  config_error(fmt::format("{}: expected true or false, got '{}'", key, value));
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += fmt::format("{}{:.17g}", i ? "," : "", values[i]);
  return out;
}

const char* kind_name(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::Identity: return "identity";
    case CovarianceKind::EquiCorrelation: return "equicorrelation";
    case CovarianceKind::TwoByTwo: return "twobytwo";
    case CovarianceKind::FromFile: return "file";
  }
  return "?";
}

}  // namespace

SweepConfig parse_config(std::string_view text) {
  SweepConfig c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) config_error(fmt::format("line {}: expected key = value", line_no));
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) config_error(fmt::format("line {}: duplicate key {}", line_no, key));

    if (key == "design.kind") {
      if (value == "identity") c.design_kind = CovarianceKind::Identity;
      else if (value == "equicorrelation") c.design_kind = CovarianceKind::EquiCorrelation;
      else if (value == "twobytwo") c.design_kind = CovarianceKind::TwoByTwo;
      else if (value == "file") c.design_kind = CovarianceKind::FromFile;
      else config_error(fmt::format("design.kind: unknown kind '{}'", value));
    } else if (key == "design.d") {
      c.d = to_unsigned(key, value);
    } else if (key == "design.omega") {
      c.omega = to_double(key, value);
    } else if (key == "design.b") {
      c.b = to_double(key, value);
    } else if (key == "design.path") {
      c.design_path = value;
    } else if (key == "instance.s") {
      c.s = to_unsigned(key, value);
    } else if (key == "instance.support") {
      c.support.clear();
      for (const auto& piece : split_list(value)) {
        const auto j = to_unsigned(key, piece);
        if (j == 0) config_error("instance.support: indices are one-based");
        c.support.push_back(j - 1);
      }
    } else if (key == "instance.betamin") {
      c.beta_min = to_double(key, value);
    } else if (key == "instance.signs") {
      if (value == "positive") c.alternating_signs = false;
      else if (value == "alternating") c.alternating_signs = true;
      else config_error(fmt::format("instance.signs: expected positive or alternating, got '{}'", value));
    } else if (key == "instance.sigma2") {
      c.sigma2 = to_double(key, value);
    } else if (key == "sweep.ngrid") {
      c.n_grid.clear();
      for (const auto& piece : split_list(value)) c.n_grid.push_back(to_unsigned(key, piece));
    } else if (key == "sweep.trials") {
      c.trials = to_unsigned(key, value);
    } else if (key == "sweep.seed") {
      c.seed = to_unsigned(key, value);
    } else if (key == "sweep.estimators") {
      c.estimators.clear();
      for (const auto& piece : split_list(value)) {
        try {
          c.estimators.push_back(parse_estimator_kind(piece));
        } catch (const Error& e) {
          config_error(fmt::format("sweep.estimators: {}", e.what()));
        }
      }
    } else if (key == "sweep.delta") {
      c.delta = to_double(key, value);
    } else if (key == "sweep.threads") {
      c.threads = static_cast<unsigned>(to_unsigned(key, value));
    } else if (key == "sweep.out") {
      c.out_path = value;
    } else if (key == "sweep.record_timing") {
      c.record_timing = to_bool(key, value);
    } else if (key == "estimator.sbar") {
      c.sbar = to_unsigned(key, value);
    } else if (key == "estimator.tau") {
      c.tau = to_double(key, value);
    } else if (key == "gap.omegas") {
      c.gap_omegas.clear();
      for (const auto& piece : split_list(value)) c.gap_omegas.push_back(to_double(key, piece));
    } else if (key == "verify.omegas") {
      c.verify_omegas.clear();
      for (const auto& piece : split_list(value)) c.verify_omegas.push_back(to_double(key, piece));
    } else if (key == "verify.constant") {
      c.verify_constant = to_double(key, value);
    } else {
      config_error(fmt::format("line {}: unknown key '{}'", line_no, key));
    }
  }
  c.validate();
  return c;
}

SweepConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, fmt::format("cannot open config {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void SweepConfig::validate() const {
  if (design_kind != CovarianceKind::TwoByTwo && d < 1) config_error("design.d must be positive");
  if (design_kind == CovarianceKind::EquiCorrelation && !(omega > 0.0 && omega <= 1.0)) {
    config_error("design.omega must lie in (0, 1]");
  }
  if (design_kind == CovarianceKind::FromFile && design_path.empty()) {
    config_error("design.path is required for design.kind = file");
  }
  const std::size_t dim = design_kind == CovarianceKind::TwoByTwo ? 2 : d;
  if (s < 1 || s > dim) config_error("instance.s must satisfy 1 <= s <= d");
  if (!support.empty()) {
    if (support.size() != s) config_error("instance.support must list exactly s indices");
    if (std::set<Index>(support.begin(), support.end()).size() != s) {
      config_error("instance.support has duplicates");
    }
    for (Index j : support) {
      if (j >= dim) config_error("instance.support index exceeds d");
    }
  }
  if (!(beta_min > 0.0)) config_error("instance.betamin must be positive");
  if (!(sigma2 > 0.0)) config_error("instance.sigma2 must be positive");
  if (n_grid.empty()) config_error("sweep.ngrid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) config_error("sweep.ngrid entries must be positive");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) config_error("sweep.ngrid must be strictly increasing");
  }
  if (trials < 1) config_error("sweep.trials must be at least 1");
  if (estimators.empty()) config_error("sweep.estimators must not be empty");
  if (!(delta > 0.0 && delta < 1.0)) config_error("sweep.delta must lie in (0, 1)");
  if (threads < 1) config_error("sweep.threads must be at least 1");
  if (tau && !(*tau > 0.0)) config_error("estimator.tau must be positive");
  if (!(verify_constant > 0.0)) config_error("verify.constant must be positive");
  for (double w : gap_omegas) {
    if (!(w > 0.0 && w <= 1.0)) config_error("gap.omegas entries must lie in (0, 1]");
  }
  for (double w : verify_omegas) {
    if (!(w > 0.0 && w <= 1.0)) config_error("verify.omegas entries must lie in (0, 1]");
  }
  for (EstimatorKind kind : estimators) {
    const bool bounded = kind == EstimatorKind::Bssu || kind == EstimatorKind::Aic ||
                         kind == EstimatorKind::Bic;
    if (bounded && (sbar < s || sbar > dim)) {
      config_error(fmt::format("{} needs s <= estimator.sbar <= d", to_string(kind)));
    }
    if (kind == EstimatorKind::Bssu && !tau && design_kind == CovarianceKind::FromFile) {
      config_error("bssu on a file design needs an explicit estimator.tau");
    }
  }
}

std::string SweepConfig::canonical() const {
  std::string out;
  out += fmt::format("design.kind = {}\n", kind_name(design_kind));
  out += fmt::format("design.d = {}\n", d);
  out += fmt::format("design.omega = {:.17g}\n", omega);
  out += fmt::format("design.b = {:.17g}\n", b);
  out += fmt::format("design.path = {}\n", design_path);
  out += fmt::format("instance.s = {}\n", s);
  std::string sup;
  for (std::size_t i = 0; i < support.size(); ++i) sup += fmt::format("{}{}", i ? "," : "", support[i] + 1);
  out += fmt::format("instance.support = {}\n", sup);
  out += fmt::format("instance.betamin = {:.17g}\n", beta_min);
  out += fmt::format("instance.signs = {}\n", alternating_signs ? "alternating" : "positive");
  out += fmt::format("instance.sigma2 = {:.17g}\n", sigma2);
  std::string grid;
  for (std::size_t i = 0; i < n_grid.size(); ++i) grid += fmt::format("{}{}", i ? "," : "", n_grid[i]);
  out += fmt::format("sweep.ngrid = {}\n", grid);
  out += fmt::format("sweep.trials = {}\n", trials);
  out += fmt::format("sweep.seed = {}\n", seed);
  std::string est;
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    est += fmt::format("{}{}", i ? "," : "", to_string(estimators[i]));
  }
  out += fmt::format("sweep.estimators = {}\n", est);
  out += fmt::format("sweep.delta = {:.17g}\n", delta);
  out += fmt::format("sweep.record_timing = {}\n", record_timing);
  out += fmt::format("estimator.sbar = {}\n", sbar);
  if (tau) out += fmt::format("estimator.tau = {:.17g}\n", *tau);
  out += fmt::format("gap.omegas = {}\n", join_doubles(gap_omegas));
  out += fmt::format("verify.omegas = {}\n", join_doubles(verify_omegas));
  out += fmt::format("verify.constant = {:.17g}\n", verify_constant);
  return out;
}

std::uint64_t SweepConfig::hash() const { return derive_stream(0, canonical()); }

Covariance build_design(const SweepConfig& config) {
  switch (config.design_kind) {
    case CovarianceKind::Identity: return make_identity(config.d);
    case CovarianceKind::EquiCorrelation: return make_equicorrelation(config.d, config.omega);
    case CovarianceKind::TwoByTwo: return make_two_by_two(config.b);
    case CovarianceKind::FromFile: return load_covariance(config.design_path);
  }
  throw Error(ErrorCode::Internal, "unhandled design kind");
}

ProblemInstance build_instance(const SweepConfig& config, Covariance design) {
  std::vector<Index> members = config.support;
  if (members.empty()) {
    for (std::size_t j = 0; j < config.s; ++j) members.push_back(j);
  }
  const SupportSet support(members);
  std::vector<double> values(config.s);
  for (std::size_t i = 0; i < config.s; ++i) {
    values[i] = (config.alternating_signs && i % 2 == 1) ? -config.beta_min : config.beta_min;
  }
  const std::size_t d = design.dim();
  return ProblemInstance(make_beta(d, support, values), config.sigma2, std::move(design));
}

ProblemInstance build_instance(const SweepConfig& config) {
  return build_instance(config, build_design(config));
}

namespace {

double design_omega(const Covariance& design) {
  switch (design.tag().kind) {
    case CovarianceKind::Identity: return 1.0;
    case CovarianceKind::EquiCorrelation: return design.tag().parameter;
    default: return 0.0;
  }
}

std::vector<EstimatorSpec> estimator_specs(const SweepConfig& config, const Covariance& design) {
  std::vector<EstimatorSpec> specs;
  for (EstimatorKind kind : config.estimators) {
    EstimatorSpec spec;
    spec.kind = kind;
    spec.s = config.s;
    spec.sbar = config.sbar;
    if (kind == EstimatorKind::Bssu) {
      if (config.tau) {
        spec.tau = *config.tau;
      } else {
        const double omega = design_omega(design);
        if (!(omega > 0.0)) config_error("bssu needs estimator.tau for this design");
        spec.tau = default_bssu_tau(omega, config.beta_min);
      }
    }
    spec.validate(design.dim());
    specs.push_back(spec);
  }
  return specs;
}

}  // namespace

std::vector<EstimatorSpec> build_estimators(const SweepConfig& config) {
  return estimator_specs(config, build_design(config));
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t n, std::size_t trial) {
  return combine(combine(mix64(master), n), trial);
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double t = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / t;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / t;
  const double center = (p + z2 / (2.0 * t)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / t + z2 / (4.0 * t * t)) / denom;
  return {std::max(0.0, std::min(center - half, p)), std::min(1.0, std::max(center + half, p))};
}

std::vector<SweepRow> SweepResult::rows_for(std::string_view estimator) const {
  std::vector<SweepRow> out;
  for (const auto& row : rows) {
    if (row.estimator == estimator) out.push_back(row);
  }
  return out;
}

SweepResult run_phase_sweep(const SweepConfig& config, const ProblemInstance& instance,
                            unsigned threads) {
  config.validate();
  const std::vector<EstimatorSpec> specs = estimator_specs(config, instance.design());
  const std::size_t n_count = config.n_grid.size();
  const std::size_t e_count = specs.size();

  struct Cell {
    bool success = false;
    bool failed = false;
    std::size_t size = 0;
    double runtime_ms = 0.0;
  };
  // cells[(grid * trials + trial) * e_count + estimator]
  std::vector<Cell> cells(n_count * config.trials * e_count);

  parallel_for(n_count * config.trials, threads, [&](std::size_t task, unsigned) {
    const std::size_t grid = task / config.trials;
    const std::size_t trial = task % config.trials;
    const std::size_t n = config.n_grid[grid];
    const DataSet data = sample_dataset(instance, n, trial_seed(config.seed, n, trial));
    const RssEngine engine(data);
    for (std::size_t e = 0; e < e_count; ++e) {
      Cell& cell = cells[task * e_count + e];
      const auto start = std::chrono::steady_clock::now();
      try {
        const EstimateResult r = run_estimator(specs[e], engine);
        cell.success = r.support == instance.support();
        cell.size = r.support.size();
      } catch (const std::exception&) {
        cell.failed = true;
      }
      if (config.record_timing) {
        cell.runtime_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
      }
    }
  });

  SweepResult result;
  result.config_hash = config.hash();
  result.seed = config.seed;
  for (std::size_t e = 0; e < e_count; ++e) {
    for (std::size_t grid = 0; grid < n_count; ++grid) {
      SweepRow row;
      row.estimator = specs[e].name();
      row.n = config.n_grid[grid];
      row.trials = config.trials;
      double runtime = 0.0;
      for (std::size_t trial = 0; trial < config.trials; ++trial) {
        const Cell& cell = cells[(grid * config.trials + trial) * e_count + e];
        row.successes += cell.success ? 1 : 0;
        row.failures += cell.failed ? 1 : 0;
        row.max_support_size = std::max(row.max_support_size, cell.size);
        runtime += cell.runtime_ms;
      }
      row.rate = static_cast<double>(row.successes) / static_cast<double>(row.trials);
      const WilsonInterval w = wilson_interval(row.successes, row.trials);
      row.wilson_lo = w.lo;
      row.wilson_hi = w.hi;
      row.mean_runtime_ms = runtime / static_cast<double>(row.trials);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

SweepResult run_phase_sweep(const SweepConfig& config, unsigned threads) {
  return run_phase_sweep(config, build_instance(config), threads);
}

std::string format_csv(const SweepResult& result) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : result.rows) {
    out += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.3f}\n", r.estimator, r.n, r.successes,
                       r.trials, r.rate, r.wilson_lo, r.wilson_hi, r.mean_runtime_ms);
  }
  return out;
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  out << format_csv(result);
  if (!out) throw Error(ErrorCode::Io, fmt::format("write failed for {}", path.string()));
}

SweepResult parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) {
    throw Error(ErrorCode::Parse, "CSV header does not match the sweep schema");
  }
  SweepResult result;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(trim(line));
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) throw Error(ErrorCode::Parse, fmt::format("line {}: expected 8 fields", line_no));
    try {
      SweepRow row;
      row.estimator = fields[0];
      row.n = std::stoull(fields[1]);
      row.successes = std::stoull(fields[2]);
      row.trials = std::stoull(fields[3]);
      row.rate = std::stod(fields[4]);
      row.wilson_lo = std::stod(fields[5]);
      row.wilson_hi = std::stod(fields[6]);
      row.mean_runtime_ms = std::stod(fields[7]);
      if (row.successes > row.trials) throw Error(ErrorCode::Parse, "successes exceed trials");
      result.rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::Parse, fmt::format("line {}: malformed number", line_no));
    }
  }
  return result;
}

SweepResult read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

std::string plot_script(const std::string& csv_path) {
  std::string quoted;
  for (char c : csv_path) {
    if (c == '\\' || c == '"') quoted += '\\';
    quoted += c;
  }
  return fmt::format(R"(#!/usr/bin/env python3
import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
csv_path = os.path.join(here, "{}")
rows = defaultdict(list)
with open(csv_path, newline="") as f:
    for r in csv.DictReader(f):
        rows[r["estimator"]].append(
            (int(r["n"]), float(r["rate"]), float(r["wilson_lo"]), float(r["wilson_hi"]))
        )

fig, ax = plt.subplots(figsize=(6, 4))
for name, pts in rows.items():
    pts.sort()
    n = [p[0] for p in pts]
    ax.plot(n, [p[1] for p in pts], marker="o", label=name)
    ax.fill_between(n, [p[2] for p in pts], [p[3] for p in pts], alpha=0.2)
ax.set_xlabel("n")
ax.set_ylabel("exact recovery rate")
ax.set_ylim(-0.02, 1.02)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.splitext(csv_path)[0] + ".png", dpi=150)
)",
                     quoted);
}

void emit_plot_script(const std::filesystem::path& csv, const std::filesystem::path& script) {
  read_csv(csv);
  std::filesystem::path base = script.parent_path();
  if (base.empty()) base = ".";
  std::error_code ec;
  std::filesystem::path rel = std::filesystem::relative(std::filesystem::absolute(csv),
                                                        std::filesystem::absolute(base), ec);
  if (ec || rel.empty()) rel = std::filesystem::absolute(csv);
  std::ofstream out(script);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", script.string()));
  out << plot_script(rel.generic_string());
}

Crossing interpolate_n50(const SweepResult& result, std::string_view estimator) {
  const auto rows = result.rows_for(estimator);
  if (rows.empty()) return {std::nullopt, "no-crossing"};
  if (rows.front().rate >= 0.5) return {std::nullopt, "below-grid"};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    if (a.rate < 0.5 && b.rate >= 0.5) {
      const double na = static_cast<double>(a.n);
      const double nb = static_cast<double>(b.n);
      return {na + (0.5 - a.rate) / (b.rate - a.rate) * (nb - na), "ok"};
    }
  }
  return {std::nullopt, "no-crossing"};
}

std::optional<std::size_t> first_n_reaching(const SweepResult& result, std::string_view estimator,
                                            double level) {
  for (const auto& row : result.rows_for(estimator)) {
    if (row.rate >= level) return row.n;
  }
  return std::nullopt;
}

std::vector<BoundRow> verify_bounds(const SweepConfig& config, unsigned threads) {
  config.validate();
  if (config.design_kind != CovarianceKind::EquiCorrelation &&
      config.design_kind != CovarianceKind::Identity) {
    config_error("verify-bounds needs an identity or equicorrelation design");
  }
  std::vector<double> omegas = config.verify_omegas;
  if (omegas.empty()) omegas.push_back(config.design_kind == CovarianceKind::Identity ? 1.0 : config.omega);
  SweepConfig bss_only = config;
  bss_only.estimators = {EstimatorKind::Bss};

  std::vector<BoundRow> rows;
  for (double omega : omegas) {
    const Covariance design = omega == 1.0 ? make_identity(config.d) : make_equicorrelation(config.d, omega);
    const SweepResult sweep = run_phase_sweep(bss_only, build_instance(config, design), threads);
    ClassParams params;
    params.d = config.d;
    params.s = config.s;
    params.beta_min = config.beta_min;
    params.omega = omega;
    params.sigma2 = config.sigma2;

    BoundRow row;
    row.omega = omega;
    row.empirical_n = first_n_reaching(sweep, "bss", 1.0 - config.delta);
    row.upper_known = bound_upper_known(params, config.delta, config.verify_constant).n_value;
    if (omega < 1.0 && config.delta < 0.5) {
      row.lower_equicorr = bound_lower_equicorr(params, config.delta).n_value;
    }
    row.lower_dimension = bound_lower_dimension(config.d, config.s,
                                                config.beta_min * config.beta_min / config.sigma2,
                                                std::min(config.delta, 0.49))
                              .n_value;
    if (row.empirical_n) {
      row.calibrated_constant = static_cast<double>(*row.empirical_n) / row.upper_known;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_bound_table(const std::vector<BoundRow>& rows) {
  auto opt = [](const auto& v) { return v ? fmt::format("{:.6g}", static_cast<double>(*v)) : std::string("NA"); };
  std::string out = "omega,empirical_n,upper_known,lower_equicorr,lower_dimension,calibrated_constant\n";
  for (const auto& r : rows) {
    out += fmt::format("{:.6g},{},{:.6g},{},{:.6g},{}\n", r.omega, opt(r.empirical_n), r.upper_known,
                       opt(r.lower_equicorr), r.lower_dimension, opt(r.calibrated_constant));
  }
  return out;
}

std::vector<GapSweep> run_gap_experiment(const SweepConfig& config, unsigned threads) {
  config.validate();
  if (config.gap_omegas.empty()) config_error("gap.omegas must not be empty");
  std::vector<GapSweep> out;
  for (double omega : config.gap_omegas) {
    const Covariance design = omega == 1.0 ? make_identity(config.d) : make_equicorrelation(config.d, omega);
    SweepConfig local = config;
    local.design_kind = omega == 1.0 ? CovarianceKind::Identity : CovarianceKind::EquiCorrelation;
    local.omega = omega;
    out.push_back({omega, run_phase_sweep(local, build_instance(local, design), threads)});
  }
  return out;
}

}  // namespace subsetlab
