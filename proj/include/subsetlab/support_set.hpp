#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace subsetlab {

using Index = std::size_t;

/// Sorted, duplicate-free set of zero-based column indices. Text forms (CLI,
/// files, reports) are one-based; conversion happens only at those edges.
class SupportSet {
 public:
  SupportSet() = default;
  SupportSet(std::initializer_list<Index> indices);
  explicit SupportSet(std::vector<Index> indices);

  /// Builds from one-based indices, as written by users.
  static SupportSet from_one_based(std::span<const Index> indices);
  /// Parses "1,3,5" (one-based). Empty string gives the empty set.
  static SupportSet parse(std::string_view text);
  /// {0, ..., k-1}
  static SupportSet first(std::size_t k);

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  Index operator[](std::size_t i) const { return indices_[i]; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }
  const std::vector<Index>& indices() const noexcept { return indices_; }

  bool contains(Index j) const;
  bool is_subset_of(const SupportSet& other) const;
  /// Largest index + 1, or 0 for the empty set.
  std::size_t bound() const noexcept { return indices_.empty() ? 0 : indices_.back() + 1; }

  SupportSet minus(const SupportSet& other) const;
  SupportSet united(const SupportSet& other) const;
  SupportSet complement(std::size_t d) const;

  /// One-based, comma-separated.
  std::string to_string() const;

  friend bool operator==(const SupportSet&, const SupportSet&) = default;
  /// Lexicographic order on the index sequence.
  friend std::strong_ordering operator<=>(const SupportSet& a, const SupportSet& b) {
    return a.indices_ <=> b.indices_;
  }

 private:
  std::vector<Index> indices_;
};

/// Exact binomial coefficient, saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);
/// log C(n, k) through log-gamma.
double log_binomial(double n, double k);

/// Advances `combo` (strictly increasing, values < n) to the next
/// k-combination in lexicographic order. Returns false after the last one.
bool next_combination(std::vector<Index>& combo, std::size_t n);

/// Calls fn(const std::vector<Index>&) on every k-subset of [n] in
/// lexicographic order. k = 0 visits the empty set once.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<Index> combo(k);
  for (std::size_t i = 0; i < k; ++i) combo[i] = i;
  do {
    fn(static_cast<const std::vector<Index>&>(combo));
  } while (next_combination(combo, n));
}

}  // namespace subsetlab
