#pragma once

// Index translation functions: injective maps from a dense logical index
// range [0, n) to physical array indices.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arrcap/error.hpp"

namespace arrcap {

class IndexMap {
 public:
  IndexMap() = default;

  /// Throws Errc::Overlap if two positions share a target.
  explicit IndexMap(std::vector<std::size_t> targets);
  IndexMap(std::initializer_list<std::size_t> targets)
      : IndexMap(std::vector<std::size_t>(targets)) {}

  std::size_t size() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }
  bool contains(std::size_t logical) const noexcept { return logical < targets_.size(); }

  /// Unchecked translation; callers test `contains` first.
  std::size_t operator[](std::size_t logical) const noexcept { return targets_[logical]; }
  /// Checked translation, throws Errc::OutOfDomain.
  std::size_t at(std::size_t logical) const;

  std::span<const std::size_t> targets() const noexcept { return targets_; }

  /// One past the largest target, 0 for the empty map.
  std::size_t range_bound() const noexcept;
  bool is_identity() const noexcept;
  /// rng(map) == [0, n)
  bool covers(std::size_t n) const noexcept;

  friend bool operator==(const IndexMap&, const IndexMap&) = default;
  friend auto operator<=>(const IndexMap&, const IndexMap&) = default;

 private:
  struct Unchecked {};
  IndexMap(Unchecked, std::vector<std::size_t> targets) : targets_(std::move(targets)) {}
  friend struct SigmaAccess;

  std::vector<std::size_t> targets_;
};

namespace sigma {

IndexMap identity(std::size_t n);

/// result(i) = outer(inner(i)); Errc::OutOfDomain if rng(inner) escapes dom(outer).
IndexMap compose(const IndexMap& outer, const IndexMap& inner);

/// k consecutive parts; the first (n mod k) parts are one element longer.
std::vector<IndexMap> split_consecutive(std::size_t n, std::size_t k);

/// k strided parts; part j maps i to j + i*k.
std::vector<IndexMap> split_strided(std::size_t n, std::size_t k);

/// ([0, i), [i, n)); empty parts allowed.
std::pair<IndexMap, IndexMap> split_at(std::size_t n, std::size_t i);

IndexMap concat(const IndexMap& a, const IndexMap& b);

/// Alternates the first min(|a|, |b|) elements, then appends the tail of the
/// longer map.
IndexMap interleave(const IndexMap& a, const IndexMap& b);

/// Round-robin over all parts, skipping exhausted ones. Agrees with
/// `interleave` for two parts and inverts split_strided for any k.
IndexMap interleave_all(std::span<const IndexMap> parts);
IndexMap concat_all(std::span<const IndexMap> parts);

bool disjoint(const IndexMap& a, const IndexMap& b);
bool pairwise_disjoint(std::span<const IndexMap> parts);

/// Canonical text: `{0->3, 1->4}`; the empty map is `{}`.
std::string format(const IndexMap& m);

/// Accepts `{0->3, 1->4}` (keys must be exactly 0..n-1, any order),
/// `seq(lo, hi)` for [lo, hi), and `stride(start, step, count)`.
/// Throws Errc::ParseError.
IndexMap parse(std::string_view text);

}  // namespace sigma
}  // namespace arrcap
