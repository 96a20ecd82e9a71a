#include "arrcap/sigma.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>
#include <unordered_set>

namespace arrcap {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::InvalidSplit: return "InvalidSplit";
    case Errc::Overlap: return "Overlap";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::Consumed: return "Consumed";
    case Errc::Buried: return "Buried";
    case Errc::ReadOnly: return "ReadOnly";
    case Errc::DifferentArrays: return "DifferentArrays";
    case Errc::Incompatible: return "Incompatible";
    case Errc::HasSiblings: return "HasSiblings";
    case Errc::Partial: return "Partial";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Constructors in this file produce injective maps by construction and skip
// the duplicate scan.
struct SigmaAccess {
  static IndexMap make(std::vector<std::size_t> targets) {
    return IndexMap(IndexMap::Unchecked{}, std::move(targets));
  }
};

namespace {

bool has_duplicates(const std::vector<std::size_t>& targets) {
  std::unordered_set<std::size_t> seen;
  seen.reserve(targets.size());
  for (auto t : targets) {
    if (!seen.insert(t).second) return true;
  }
  return false;
}

}  // namespace

IndexMap::IndexMap(std::vector<std::size_t> targets) : targets_(std::move(targets)) {
  if (has_duplicates(targets_)) {
    throw Error(Errc::Overlap, "index map is not injective");
  }
}

std::size_t IndexMap::at(std::size_t logical) const {
  if (!contains(logical)) {
    throw Error(Errc::OutOfDomain, "index " + std::to_string(logical) + " outside domain of size " +
                                       std::to_string(size()));
  }
  return targets_[logical];
}

std::size_t IndexMap::range_bound() const noexcept {
  if (targets_.empty()) return 0;
  return *std::max_element(targets_.begin(), targets_.end()) + 1;
}

bool IndexMap::is_identity() const noexcept {
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (targets_[i] != i) return false;
  }
  return true;
}

bool IndexMap::covers(std::size_t n) const noexcept {
  // injective, so size n with every target < n means a bijection onto [0, n)
  return targets_.size() == n && range_bound() == n;
}

namespace sigma {

IndexMap identity(std::size_t n) {
  std::vector<std::size_t> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = i;
  return SigmaAccess::make(std::move(t));
}

IndexMap compose(const IndexMap& outer, const IndexMap& inner) {
  std::vector<std::size_t> t;
  t.reserve(inner.size());
  for (auto i : inner.targets()) {
    if (!outer.contains(i)) {
      throw Error(Errc::OutOfDomain, "inner target " + std::to_string(i) +
                                         " outside domain of size " + std::to_string(outer.size()));
    }
    t.push_back(outer[i]);
  }
  return SigmaAccess::make(std::move(t));
}

namespace {

void check_split(std::size_t n, std::size_t k) {
  if (k == 0 || k > n) {
    throw Error(Errc::InvalidSplit,
                "cannot split " + std::to_string(n) + " elements into " + std::to_string(k) + " parts");
  }
}

}  // namespace

std::vector<IndexMap> split_consecutive(std::size_t n, std::size_t k) {
  check_split(n, k);
  std::vector<IndexMap> parts;
  parts.reserve(k);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t offset = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t len = base + (j < extra ? 1 : 0);
    std::vector<std::size_t> t(len);
    for (std::size_t i = 0; i < len; ++i) t[i] = offset + i;
    offset += len;
    parts.push_back(SigmaAccess::make(std::move(t)));
  }
  return parts;
}

std::vector<IndexMap> split_strided(std::size_t n, std::size_t k) {
  check_split(n, k);
  std::vector<IndexMap> parts;
  parts.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<std::size_t> t;
    for (std::size_t p = j; p < n; p += k) t.push_back(p);
    parts.push_back(SigmaAccess::make(std::move(t)));
  }
  return parts;
}

std::pair<IndexMap, IndexMap> split_at(std::size_t n, std::size_t i) {
  if (i > n) {
    throw Error(Errc::InvalidSplit,
                "pivot " + std::to_string(i) + " beyond length " + std::to_string(n));
  }
  std::vector<std::size_t> right(n - i);
  for (std::size_t p = 0; p < n - i; ++p) right[p] = i + p;
  return {identity(i), SigmaAccess::make(std::move(right))};
}

bool disjoint(const IndexMap& a, const IndexMap& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  std::unordered_set<std::size_t> seen(small.targets().begin(), small.targets().end());
  return std::none_of(large.targets().begin(), large.targets().end(),
                      [&](std::size_t t) { return seen.contains(t); });
}

bool pairwise_disjoint(std::span<const IndexMap> parts) {
  std::unordered_set<std::size_t> seen;
  for (const auto& p : parts) {
    for (auto t : p.targets()) {
      if (!seen.insert(t).second) return false;
    }
  }
  return true;
}

IndexMap concat(const IndexMap& a, const IndexMap& b) {
  if (!disjoint(a, b)) throw Error(Errc::Overlap, "cannot concatenate overlapping index maps");
  std::vector<std::size_t> t(a.targets().begin(), a.targets().end());
  t.insert(t.end(), b.targets().begin(), b.targets().end());
  return SigmaAccess::make(std::move(t));
}

IndexMap interleave(const IndexMap& a, const IndexMap& b) {
  const IndexMap parts[] = {a, b};
  return interleave_all(parts);
}

IndexMap interleave_all(std::span<const IndexMap> parts) {
  if (!pairwise_disjoint(parts)) {
    throw Error(Errc::Overlap, "cannot interleave overlapping index maps");
  }
  std::size_t longest = 0;
  std::size_t total = 0;
  for (const auto& p : parts) {
    longest = std::max(longest, p.size());
    total += p.size();
  }
  std::vector<std::size_t> t;
  t.reserve(total);
  for (std::size_t i = 0; i < longest; ++i) {
    for (const auto& p : parts) {
      if (p.contains(i)) t.push_back(p[i]);
    }
  }
  return SigmaAccess::make(std::move(t));
}

IndexMap concat_all(std::span<const IndexMap> parts) {
  if (!pairwise_disjoint(parts)) {
    throw Error(Errc::Overlap, "cannot concatenate overlapping index maps");
  }
  std::vector<std::size_t> t;
  for (const auto& p : parts) t.insert(t.end(), p.targets().begin(), p.targets().end());
  return SigmaAccess::make(std::move(t));
}

std::string format(const IndexMap& m) {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) out << ", ";
    out << i << "->" << m[i];
  }
  out << '}';
  return out.str();
}

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(std::string_view token) {
    skip_ws();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view token) {
    if (!eat(token)) fail("expected '" + std::string(token) + "'");
  }
  std::size_t number() {
    skip_ws();
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc{}) fail("expected a non-negative integer");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }
  bool at_end() {
    skip_ws();
    return pos_ == text_.size();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::ParseError, msg + " at offset " + std::to_string(pos_) + " in '" +
                                      std::string(text_) + "'");
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

IndexMap parse(std::string_view text) {
  Cursor c(text);
  std::vector<std::size_t> targets;
  if (c.eat("seq")) {
    c.expect("(");
    auto lo = c.number();
    c.expect(",");
    auto hi = c.number();
    c.expect(")");
    if (hi < lo) c.fail("seq upper bound below lower bound");
    for (auto p = lo; p < hi; ++p) targets.push_back(p);
  } else if (c.eat("stride")) {
    c.expect("(");
    auto start = c.number();
    c.expect(",");
    auto step = c.number();
    c.expect(",");
    auto count = c.number();
    c.expect(")");
    if (step == 0 && count > 1) c.fail("stride step must be positive");
    for (std::size_t i = 0; i < count; ++i) targets.push_back(start + i * step);
  } else {
    c.expect("{");
    std::map<std::size_t, std::size_t> pairs;
    if (!c.eat("}")) {
      do {
        auto key = c.number();
        c.expect("->");
        auto value = c.number();
        if (!pairs.emplace(key, value).second) c.fail("duplicate key " + std::to_string(key));
      } while (c.eat(","));
      c.expect("}");
    }
    std::size_t expected = 0;
    for (auto [key, value] : pairs) {
      if (key != expected++) c.fail("keys must form the dense range 0..n-1");
      targets.push_back(value);
    }
  }
  if (!c.at_end()) c.fail("trailing input");
  if (has_duplicates(targets)) c.fail("index map is not injective");
  return SigmaAccess::make(std::move(targets));
}

}  // namespace sigma
}  // namespace arrcap
