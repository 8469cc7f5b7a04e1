#include "subsetlab/sampler.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "subsetlab/error.hpp"
#include "subsetlab/rng.hpp"

namespace subsetlab {

namespace {

SupportSet nonzero_set(const Eigen::VectorXd& beta) {
  std::vector<Index> idx;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) idx.push_back(static_cast<Index>(j));
  }
  return SupportSet(std::move(idx));
}

double parse_double(std::string_view token, std::string_view what) {
  // std::from_chars for double is missing from older libstdc++; use strtod.
  std::string text(token);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw Error(ErrorCode::Parse, fmt::format("bad {} value '{}'", what, text));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = text.find(sep, pos);
    out.push_back(text.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

ProblemInstance::ProblemInstance(Eigen::VectorXd beta, double sigma2, Covariance design)
    : beta_(std::move(beta)), support_(nonzero_set(beta_)), sigma2_(sigma2),
      design_(std::move(design)) {
  if (!(sigma2_ > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "noise variance sigma2 must be positive");
  }
  if (static_cast<std::size_t>(beta_.size()) != design_.dim()) {
    throw Error(ErrorCode::InvalidDimension,
                fmt::format("beta has length {} but the design is {}-dimensional", beta_.size(),
                            design_.dim()));
  }
}

double ProblemInstance::beta_min() const {
  double m = std::numeric_limits<double>::infinity();
  for (Index j : support_) m = std::min(m, std::abs(beta_(static_cast<Eigen::Index>(j))));
  return m;
}

void ClassParams::validate() const {
  const std::size_t bound = known_sparsity ? s : sbar;
  if (bound < 1 || 2 * bound > d) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("sparsity must satisfy 1 <= s <= d/2 (d = {}, s = {})", d, bound));
  }
  if (!known_sparsity && s > sbar) {
    throw Error(ErrorCode::InvalidParameter, "s must not exceed sbar");
  }
  if (!(beta_min > 0.0)) throw Error(ErrorCode::InvalidParameter, "beta_min must be positive");
  if (!(omega > 0.0)) throw Error(ErrorCode::InvalidParameter, "omega must be positive");
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::InvalidParameter, "sigma2 must be positive");
}

Eigen::VectorXd make_beta(std::size_t d, const SupportSet& support,
                          std::span<const double> values) {
  if (support.size() != values.size()) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("support has {} indices but {} values were given", support.size(),
                            values.size()));
  }
  if (support.bound() > d) throw Error(ErrorCode::InvalidDimension, "support index out of range");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 0.0 || !std::isfinite(values[i])) {
      throw Error(ErrorCode::InvalidParameter,
                  fmt::format("coefficient at index {} must be finite and nonzero",
                              support[i] + 1));
    }
    beta(static_cast<Eigen::Index>(support[i])) = values[i];
  }
  return beta;
}

Eigen::VectorXd parse_beta_spec(std::string_view spec, std::size_t d) {
  std::optional<SupportSet> support;
  std::vector<double> values;
  std::optional<double> betamin;
  for (std::string_view part : split(spec, ';')) {
    part = trim(part);
    if (part.empty()) continue;
    const std::size_t eq = part.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Parse, fmt::format("beta spec clause '{}' lacks '='", part));
    }
    const std::string_view key = trim(part.substr(0, eq));
    const std::string_view value = trim(part.substr(eq + 1));
    if (key == "support") {
      support = SupportSet::parse(value);
    } else if (key == "values") {
      for (std::string_view v : split(value, ',')) values.push_back(parse_double(trim(v), "beta"));
    } else if (key == "betamin") {
      betamin = parse_double(value, "betamin");
    } else {
      throw Error(ErrorCode::Parse, fmt::format("unknown beta spec key '{}'", key));
    }
  }
  if (!support) throw Error(ErrorCode::Parse, "beta spec needs support=...");
  if (betamin && !values.empty()) {
    throw Error(ErrorCode::Parse, "beta spec takes either values= or betamin=, not both");
  }
  if (betamin) values.assign(support->size(), *betamin);
  return make_beta(d, *support, values);
}

MembershipReport check_membership(const ProblemInstance& instance, const ClassParams& params,
                                  std::uint64_t pair_budget) {
  params.validate();
  if (params.d != instance.dim()) {
    throw Error(ErrorCode::InvalidDimension,
                fmt::format("class dimension {} differs from instance dimension {}", params.d,
                            instance.dim()));
  }
  MembershipReport report;
  const std::size_t nnz = instance.support().size();
  if (params.known_sparsity && nnz != params.s) {
    report.violations.push_back(fmt::format("||beta||_0 = {} != s = {}", nnz, params.s));
  }
  if (!params.known_sparsity && nnz > params.sbar) {
    report.violations.push_back(fmt::format("||beta||_0 = {} > sbar = {}", nnz, params.sbar));
  }
  if (nnz > 0 && instance.beta_min() < params.beta_min) {
    report.violations.push_back(
        fmt::format("min |beta_j| {} < beta_min {}", instance.beta_min(), params.beta_min));
  }
  try {
    OmegaOptions options;
    options.pair_budget = pair_budget;
    const OmegaReport omega = params.known_sparsity
                                  ? compute_omega_known(instance.design(), params.s, options)
                                  : compute_omega_unknown(instance.design(), params.sbar, options);
    report.computed_omega = omega.omega;
    // Relative slack so that a closed-form omega equal to the requirement passes.
    if (omega.omega < params.omega * (1.0 - 1e-10)) {
      report.violations.push_back(
          fmt::format("computed omega {} < required {}", omega.omega, params.omega));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BudgetExceeded) throw;
    report.indeterminate = true;
  }
  report.in_class = report.violations.empty() && !report.indeterminate;
  return report;
}

DataSet sample_dataset(const ProblemInstance& instance, std::size_t n, std::uint64_t seed) {
  DataSet data =
      sample_dataset(instance, n, derive_stream(seed, "design"), derive_stream(seed, "noise"));
  data.seed = seed;
  return data;
}

DataSet sample_dataset(const ProblemInstance& instance, std::size_t n, std::uint64_t design_seed,
                       std::uint64_t noise_seed) {
  if (n < 1) throw Error(ErrorCode::InvalidParameter, "sample size n must be at least 1");
  const auto rows = static_cast<Eigen::Index>(n);
  const auto d = static_cast<Eigen::Index>(instance.dim());

  Engine design_rng(design_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(rows, d);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = normal(design_rng);
  }
  DataSet data;
  data.n = n;
  data.seed = design_seed;
  data.x.noalias() = z * instance.design().cholesky_lower().transpose();

  Engine noise_rng(noise_seed);
  normal.reset();
  const double sd = std::sqrt(instance.sigma2());
  data.y.noalias() = data.x * instance.beta();
  for (Eigen::Index i = 0; i < rows; ++i) data.y(i) += sd * normal(noise_rng);
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const DataSet& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << 'y';
  for (std::size_t j = 0; j < data.dim(); ++j) out << ",x" << j + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    out << fmt::format("{:.17g}", data.y(i));
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) out << fmt::format(",{:.17g}", data.x(i, j));
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

DataSet read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "empty dataset file");
  const auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "y") {
    throw Error(ErrorCode::Parse, "dataset header must be y,x1,...,xd");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (trim(header[j]) != "x" + std::to_string(j)) {
      throw Error(ErrorCode::Parse, fmt::format("unexpected column '{}'", header[j]));
    }
  }
  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != d + 1) {
      throw Error(ErrorCode::Parse, fmt::format("row {} has {} cells, expected {}", rows + 1,
                                                cells.size(), d + 1));
    }
    for (auto c : cells) values.push_back(parse_double(trim(c), "dataset"));
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::Parse, "dataset has no rows");
  DataSet data;
  data.n = rows;
  data.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  data.y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    data.y(static_cast<Eigen::Index>(i)) = values[i * (d + 1)];
    for (std::size_t j = 0; j < d; ++j) {
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          values[i * (d + 1) + 1 + j];
    }
  }
  return data;
}

}  // namespace subsetlab
