#include "subsetlab/design.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "subsetlab/error.hpp"
#include "subsetlab/parallel.hpp"

namespace subsetlab {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kFileSymmetryTolerance = 1e-8;

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  const auto max = std::numeric_limits<std::uint64_t>::max();
  return a > max - b ? max : a + b;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  const auto max = std::numeric_limits<std::uint64_t>::max();
  if (a != 0 && b > max / a) return max;
  return a * b;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<Index>& rows,
                          const std::vector<Index>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  }
  return out;
}

struct Candidate {
  double value = std::numeric_limits<double>::infinity();
  SupportSet s;
  SupportSet t;
  std::uint64_t scanned = 0;

  bool better_than(const Candidate& other) const {
    if (value != other.value) return value < other.value;
    if (s != other.s) return s < other.s;
    return t < other.t;
  }
};

// Minimum of lambda_min(Sigma_{D|T}) over nonempty D in the complement of T
// with |D| <= max_diff. `witness_for` maps D to the reported S.
template <class WitnessFn>
Candidate scan_given_t(const Covariance& sigma, const std::vector<Index>& t_indices,
                       std::size_t max_diff, WitnessFn&& witness_for) {
  const std::size_t d = sigma.dim();
  const Eigen::MatrixXd& full = sigma.matrix();
  const std::size_t k = t_indices.size();

  // A = L^{-1} Sigma_{T,:}, so Sigma_{D|T} = Sigma_{DD} - A_D^T A_D.
  Eigen::MatrixXd a(k, d);
  if (k > 0) {
    Eigen::MatrixXd stt = submatrix(full, t_indices, t_indices);
    Eigen::LLT<Eigen::MatrixXd> llt(stt);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::NotPositiveDefinite, "Sigma_TT is not positive definite");
    }
    Eigen::MatrixXd rows(k, d);
    for (std::size_t i = 0; i < k; ++i) rows.row(i) = full.row(t_indices[i]);
    a = llt.matrixL().solve(rows);
  }

  const SupportSet t(t_indices);
  const SupportSet rest = t.complement(d);
  Candidate best;
  for (std::size_t r = 1; r <= std::min(max_diff, rest.size()); ++r) {
    for_each_combination(rest.size(), r, [&](const std::vector<Index>& pos) {
      std::vector<Index> diff(r);
      for (std::size_t i = 0; i < r; ++i) diff[i] = rest[pos[i]];
      Eigen::MatrixXd schur = submatrix(full, diff, diff);
      if (k > 0) {
        Eigen::MatrixXd ad(k, r);
        for (std::size_t i = 0; i < r; ++i) ad.col(i) = a.col(diff[i]);
        schur.noalias() -= ad.transpose() * ad;
      }
      ++best.scanned;
      const double value = min_eigenvalue(schur);
      if (value <= best.value) {
        SupportSet dset(diff);
        Candidate c{value, witness_for(dset, t), t, 0};
        if (c.better_than(best)) {
          c.scanned = best.scanned;
          best = std::move(c);
        }
      }
    });
  }
  return best;
}

OmegaReport reduce(std::vector<Candidate>& per_task) {
  Candidate best;
  std::uint64_t scanned = 0;
  for (auto& c : per_task) {
    scanned += c.scanned;
    if (c.better_than(best)) best = std::move(c);
  }
  if (!std::isfinite(best.value)) {
    throw Error(ErrorCode::Internal, "omega enumeration found no admissible pair");
  }
  return OmegaReport{best.value, std::move(best.s), std::move(best.t), scanned};
}

}  // namespace

Covariance::Covariance(Eigen::MatrixXd entries, CovarianceTag tag)
    : entries_(std::move(entries)), tag_(std::move(tag)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw Error(ErrorCode::InvalidDimension, "covariance must be a nonempty square matrix");
  }
  const double scale = std::max(1.0, max_abs(entries_));
  if (max_abs(entries_ - entries_.transpose()) > kSymmetryTolerance * scale) {
    throw Error(ErrorCode::Asymmetric, "covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(entries_);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite,
                fmt::format("covariance is not positive definite (smallest eigenvalue {:.6g})",
                            min_eigenvalue(entries_)));
  }
  lower_ = llt.matrixL();
}

std::string Covariance::describe() const {
  switch (tag_.kind) {
    case CovarianceKind::Identity: return fmt::format("identity(d={})", dim());
    case CovarianceKind::EquiCorrelation:
      return fmt::format("equicorr(d={}, omega={})", dim(), tag_.parameter);
    case CovarianceKind::TwoByTwo: return fmt::format("twobytwo(b={})", tag_.parameter);
    case CovarianceKind::FromFile: return fmt::format("file({}, d={})", tag_.path, dim());
  }
  return "covariance";
}

Covariance make_identity(std::size_t d) {
  if (d == 0) throw Error(ErrorCode::InvalidDimension, "dimension must be at least 1");
  const auto n = static_cast<Eigen::Index>(d);
  return Covariance(Eigen::MatrixXd::Identity(n, n), {CovarianceKind::Identity, 1.0, {}});
}

Covariance make_equicorrelation(std::size_t d, double omega) {
  if (d == 0) throw Error(ErrorCode::InvalidDimension, "dimension must be at least 1");
  if (!(omega > 0.0 && omega <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("equi-correlation omega must lie in (0, 1], got {}", omega));
  }
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, 1.0 - omega);
  m.diagonal().setOnes();
  return Covariance(std::move(m), {CovarianceKind::EquiCorrelation, omega, {}});
}

Covariance make_two_by_two(double b) {
  if (!std::isfinite(b)) throw Error(ErrorCode::InvalidParameter, "b must be finite");
  Eigen::MatrixXd m(2, 2);
  m << 1.0, b, b, 1.0 + b * b;
  return Covariance(std::move(m), {CovarianceKind::TwoByTwo, b, {}});
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open matrix file " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::Parse, "empty matrix file");
  std::istringstream hs(header);
  long long rows = -1, cols = -1;
  hs >> rows;
  if (!hs || rows <= 0) throw Error(ErrorCode::Parse, "bad matrix header '" + header + "'");
  if (!(hs >> cols)) cols = rows;
  if (cols <= 0) throw Error(ErrorCode::Parse, "bad matrix header '" + header + "'");
  std::string extra;
  if (hs >> extra) throw Error(ErrorCode::Parse, "bad matrix header '" + header + "'");

  Eigen::MatrixXd m(rows, cols);
  std::string line;
  for (long long i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::Parse, fmt::format("matrix file ends after {} of {} rows", i, rows));
    }
    std::istringstream ls(line);
    for (long long j = 0; j < cols; ++j) {
      double v = 0.0;
      if (!(ls >> v)) {
        throw Error(ErrorCode::Parse, fmt::format("row {} has fewer than {} entries", i + 1, cols));
      }
      m(i, j) = v;
    }
    if (ls >> extra) {
      throw Error(ErrorCode::Parse, fmt::format("row {} has more than {} entries", i + 1, cols));
    }
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw Error(ErrorCode::Parse, "trailing content after matrix rows");
    }
  }
  return m;
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  if (m.rows() == m.cols()) {
    out << m.rows() << '\n';
  } else {
    out << m.rows() << ' ' << m.cols() << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << fmt::format("{:.17g}", m(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

Covariance load_covariance(const std::filesystem::path& path) {
  Eigen::MatrixXd m = read_matrix(path);
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::InvalidDimension, "covariance file must hold a square matrix");
  }
  const double scale = std::max(1.0, max_abs(m));
  const double asym = max_abs(m - m.transpose());
  if (asym > kFileSymmetryTolerance * scale) {
    throw Error(ErrorCode::Asymmetric,
                fmt::format("covariance file is asymmetric (max |A - A^T| = {:.3g})", asym));
  }
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return Covariance(std::move(sym), {CovarianceKind::FromFile, 0.0, path.string()});
}

void save_covariance(const std::filesystem::path& path, const Covariance& sigma) {
  write_matrix(path, sigma.matrix());
}

Eigen::MatrixXd conditional_covariance(const Covariance& sigma, const SupportSet& s,
                                       const SupportSet& t) {
  const std::size_t d = sigma.dim();
  if (s.bound() > d || t.bound() > d) {
    throw Error(ErrorCode::InvalidDimension, "support index out of range");
  }
  const SupportSet diff = s.minus(t);
  if (diff.empty()) {
    throw Error(ErrorCode::EmptyDifference, "S is contained in T; S \\ T is empty");
  }
  const Eigen::MatrixXd& full = sigma.matrix();
  Eigen::MatrixXd out = submatrix(full, diff.indices(), diff.indices());
  if (t.empty()) return out;
  Eigen::MatrixXd stt = submatrix(full, t.indices(), t.indices());
  Eigen::MatrixXd std_ = submatrix(full, t.indices(), diff.indices());
  Eigen::LLT<Eigen::MatrixXd> llt(stt);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "Sigma_TT is not positive definite");
  }
  Eigen::MatrixXd a = llt.matrixL().solve(std_);
  out.noalias() -= a.transpose() * a;
  return 0.5 * (out + out.transpose());
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return m(0, 0);
  if (m.rows() == 2) {
    const double mean = 0.5 * (m(0, 0) + m(1, 1));
    const double half = 0.5 * (m(0, 0) - m(1, 1));
    const double off = 0.5 * (m(0, 1) + m(1, 0));
    return mean - std::hypot(half, off);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

std::uint64_t omega_known_pair_count(std::size_t d, std::size_t s) {
  std::uint64_t diffs = 0;
  for (std::size_t r = 1; r <= s; ++r) diffs = saturating_add(diffs, binomial(d - s, r));
  return saturating_mul(binomial(d, s), diffs);
}

std::uint64_t omega_unknown_pair_count(std::size_t d, std::size_t sbar) {
  std::uint64_t total = 0;
  for (std::size_t k = 0; k <= sbar; ++k) {
    std::uint64_t diffs = 0;
    for (std::size_t r = 1; r <= sbar && r <= d - k; ++r) {
      diffs = saturating_add(diffs, binomial(d - k, r));
    }
    total = saturating_add(total, saturating_mul(binomial(d, k), diffs));
  }
  return total;
}

namespace {

void check_sparsity(std::size_t d, std::size_t s, const char* name) {
  if (s < 1 || 2 * s > d) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("{} must satisfy 1 <= {} <= d/2 (d = {}, {} = {})", name, name, d,
                            name, s));
  }
}

void check_budget(std::uint64_t pairs, std::uint64_t budget) {
  if (pairs > budget) {
    throw Error(ErrorCode::BudgetExceeded,
                fmt::format("omega enumeration needs {} pairs, budget is {}", pairs, budget));
  }
}

}  // namespace

OmegaReport compute_omega_known(const Covariance& sigma, std::size_t s,
                                const OmegaOptions& options) {
  const std::size_t d = sigma.dim();
  check_sparsity(d, s, "s");
  check_budget(omega_known_pair_count(d, s), options.pair_budget);

  std::vector<std::vector<Index>> ts;
  for_each_combination(d, s, [&](const std::vector<Index>& c) { ts.push_back(c); });
  std::vector<Candidate> per_task(ts.size());
  parallel_for(ts.size(), options.threads, [&](std::size_t task, unsigned) {
    per_task[task] = scan_given_t(sigma, ts[task], s, [s](const SupportSet& diff,
                                                          const SupportSet& t) {
      // Smallest S of size s with S \ T = diff: pad with the lowest indices of T.
      std::vector<Index> members(diff.begin(), diff.end());
      for (std::size_t i = 0; members.size() < s; ++i) members.push_back(t[i]);
      return SupportSet(std::move(members));
    });
  });
  return reduce(per_task);
}

OmegaReport compute_omega_unknown(const Covariance& sigma, std::size_t sbar,
                                  const OmegaOptions& options) {
  const std::size_t d = sigma.dim();
  check_sparsity(d, sbar, "sbar");
  check_budget(omega_unknown_pair_count(d, sbar), options.pair_budget);

  std::vector<std::vector<Index>> ts;
  for (std::size_t k = 0; k <= sbar; ++k) {
    for_each_combination(d, k, [&](const std::vector<Index>& c) { ts.push_back(c); });
  }
  std::vector<Candidate> per_task(ts.size());
  parallel_for(ts.size(), options.threads, [&](std::size_t task, unsigned) {
    per_task[task] = scan_given_t(sigma, ts[task], sbar,
                                  [](const SupportSet& diff, const SupportSet&) { return diff; });
  });
  return reduce(per_task);
}

}  // namespace subsetlab
