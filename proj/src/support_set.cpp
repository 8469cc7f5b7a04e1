#include "subsetlab/support_set.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "subsetlab/error.hpp"

namespace subsetlab {

SupportSet::SupportSet(std::initializer_list<Index> indices)
    : SupportSet(std::vector<Index>(indices)) {}

SupportSet::SupportSet(std::vector<Index> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw Error(ErrorCode::InvalidParameter, "support set has duplicate indices");
  }
}

SupportSet SupportSet::from_one_based(std::span<const Index> indices) {
  std::vector<Index> zero_based;
  zero_based.reserve(indices.size());
  for (Index j : indices) {
    if (j == 0) throw Error(ErrorCode::InvalidParameter, "support indices are one-based; got 0");
    zero_based.push_back(j - 1);
  }
  return SupportSet(std::move(zero_based));
}

SupportSet SupportSet::parse(std::string_view text) {
  std::vector<Index> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    std::string_view token = text.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) {
      Index value = 0;
      auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || end != token.data() + token.size()) {
        throw Error(ErrorCode::Parse, "bad support index '" + std::string(token) + "'");
      }
      values.push_back(value);
    }
    pos = comma + 1;
  }
  return from_one_based(values);
}

SupportSet SupportSet::first(std::size_t k) {
  std::vector<Index> v(k);
  for (std::size_t i = 0; i < k; ++i) v[i] = i;
  return SupportSet(std::move(v));
}

bool SupportSet::contains(Index j) const {
  return std::binary_search(indices_.begin(), indices_.end(), j);
}

bool SupportSet::is_subset_of(const SupportSet& other) const {
  return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                       indices_.end());
}

SupportSet SupportSet::minus(const SupportSet& other) const {
  SupportSet out;
  std::set_difference(indices_.begin(), indices_.end(), other.indices_.begin(),
                      other.indices_.end(), std::back_inserter(out.indices_));
  return out;
}

SupportSet SupportSet::united(const SupportSet& other) const {
  SupportSet out;
  std::set_union(indices_.begin(), indices_.end(), other.indices_.begin(), other.indices_.end(),
                 std::back_inserter(out.indices_));
  return out;
}

SupportSet SupportSet::complement(std::size_t d) const {
  SupportSet out;
  for (Index j = 0; j < d; ++j) {
    if (!contains(j)) out.indices_.push_back(j);
  }
  return out;
}

std::string SupportSet::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(indices_[i] + 1);
  }
  return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i is exact at every step; split to avoid overflow.
    const std::uint64_t num = n - k + i;
    const std::uint64_t g = std::gcd(result, i);
    const std::uint64_t r = result / g;
    const std::uint64_t q = num / (i / g);
    if (r != 0 && q > kMax / r) return kMax;
    result = r * q;
  }
  return result;
}

double log_binomial(double n, double k) {
  if (k < 0.0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

bool next_combination(std::vector<Index>& combo, std::size_t n) {
  const std::size_t k = combo.size();
  if (k == 0) return false;
  std::size_t i = k;
  while (i > 0) {
    --i;
    if (combo[i] < n - k + i) {
      ++combo[i];
      for (std::size_t j = i + 1; j < k; ++j) combo[j] = combo[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace subsetlab
