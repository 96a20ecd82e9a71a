#include "arrcap/kernel.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace arrcap::kernel {

std::string_view to_string(Mode mode) noexcept {
  return mode == Mode::Unique ? "unique" : "read";
}

Capability Registry::create(std::size_t length) {
  std::lock_guard lock(mutex_);
  const ArrayId id = next_array_++;
  arrays_.emplace(id, ArrayMeta{length, 0});
  auto cap = issue(id, sigma::identity(length), Mode::Unique, false, 0);
  check_disjointness();
  return cap;
}

Capability Registry::issue(ArrayId array, IndexMap sigma, Mode mode, bool borrowed,
                           std::uint64_t scope) {
  const auto stamp = next_stamp_++;
  tokens_.emplace(stamp, Token{array, sigma, mode, borrowed, scope, State::Live});
  ++arrays_.at(array).caps;
  return Capability(stamp, array, std::move(sigma), mode, borrowed);
}

void Registry::retire(std::uint64_t stamp) {
  auto it = tokens_.find(stamp);
  if (it == tokens_.end()) return;
  --arrays_.at(it->second.array).caps;
  tokens_.erase(it);
}

const Registry::Token& Registry::live_token(const Capability& cap) const {
  auto it = tokens_.find(cap.stamp());
  if (it == tokens_.end()) throw Error(Errc::Consumed, "capability has been consumed");
  if (it->second.state == State::Buried) throw Error(Errc::Buried, "capability is buried by a borrow");
  return it->second;
}

void Registry::validate(const Capability& cap) const {
  std::lock_guard lock(mutex_);
  live_token(cap);
}

std::size_t Registry::translate(const Capability& cap, std::size_t logical, bool for_write) const {
  std::lock_guard lock(mutex_);
  const auto& token = live_token(cap);
  if (!token.sigma.contains(logical)) {
    throw Error(Errc::OutOfBounds, "index " + std::to_string(logical) + " outside length " +
                                       std::to_string(token.sigma.size()));
  }
  if (for_write && token.mode == Mode::Read) {
    throw Error(Errc::ReadOnly, "write through a read capability");
  }
  return token.sigma[logical];
}

std::vector<Capability> Registry::split(const Capability& cap, std::size_t k, bool strided) {
  std::size_t length = 0;
  {
    std::lock_guard lock(mutex_);
    length = live_token(cap).sigma.size();
  }
  auto parts = strided ? sigma::split_strided(length, k) : sigma::split_consecutive(length, k);
  return split_with(cap, parts);
}

std::vector<Capability> Registry::split_with(const Capability& cap, std::span<const IndexMap> parts) {
  std::lock_guard lock(mutex_);
  const Token source = live_token(cap);
  if (!sigma::pairwise_disjoint(parts)) throw Error(Errc::Overlap, "split parts overlap");
  std::vector<IndexMap> composed;
  composed.reserve(parts.size());
  for (const auto& part : parts) composed.push_back(sigma::compose(source.sigma, part));
  retire(cap.stamp());
  std::vector<Capability> out;
  out.reserve(parts.size());
  for (auto& s : composed) {
    out.push_back(issue(source.array, std::move(s), source.mode, source.borrowed, source.scope));
  }
  check_disjointness();
  return out;
}

Capability Registry::merge(std::span<const Capability> caps, bool concat) {
  std::lock_guard lock(mutex_);
  if (caps.empty()) throw Error(Errc::InvalidSplit, "merge needs at least one capability");
  std::vector<IndexMap> sigmas;
  const Token first = live_token(caps.front());
  for (const auto& c : caps) {
    const auto& t = live_token(c);
    if (t.array != first.array) throw Error(Errc::DifferentArrays, "merge across distinct arrays");
    if (t.mode != first.mode || t.borrowed != first.borrowed || t.scope != first.scope) {
      throw Error(Errc::Incompatible, "merged capabilities differ in mode or borrowing");
    }
    sigmas.push_back(t.sigma);
  }
  for (std::size_t i = 0; i < caps.size(); ++i) {
    for (std::size_t j = i + 1; j < caps.size(); ++j) {
      if (caps[i].stamp() == caps[j].stamp()) throw Error(Errc::Overlap, "capability merged with itself");
    }
  }
  auto merged = concat ? sigma::concat_all(sigmas) : sigma::interleave_all(sigmas);
  for (const auto& c : caps) retire(c.stamp());
  auto out = issue(first.array, std::move(merged), first.mode, first.borrowed, first.scope);
  check_disjointness();
  return out;
}

Capability Registry::align_with(const Capability& cap,
                                const std::function<void(const IndexMap&)>& permute) {
  std::lock_guard lock(mutex_);
  const Token token = live_token(cap);
  const auto& meta = arrays_.at(token.array);
  if (meta.caps > 1) throw Error(Errc::HasSiblings, "align needs the sole capability of its array");
  if (!token.sigma.covers(meta.length)) throw Error(Errc::Partial, "align needs the whole array");
  if (token.mode == Mode::Read) throw Error(Errc::ReadOnly, "align permutes storage");
  permute(token.sigma);
  retire(cap.stamp());
  auto out = issue(token.array, sigma::identity(meta.length), token.mode, token.borrowed, token.scope);
  check_disjointness();
  return out;
}

std::pair<BorrowScope, Capability> Registry::borrow(const Capability& cap, bool as_read) {
  std::lock_guard lock(mutex_);
  auto it = tokens_.find(cap.stamp());
  if (it == tokens_.end()) throw Error(Errc::Consumed, "capability has been consumed");
  if (it->second.state == State::Buried) throw Error(Errc::Buried, "capability is already buried");
  Token& original = it->second;
  original.state = State::Buried;
  const auto scope = next_scope_++;
  scopes_.emplace(scope, Scope{cap.stamp(), original.scope});
  auto alias = issue(original.array, original.sigma, as_read ? Mode::Read : original.mode, true, scope);
  Capability reinstated(cap.stamp(), original.array, original.sigma, original.mode, original.borrowed);
  check_disjointness();
  return {BorrowScope(scope, std::move(reinstated)), std::move(alias)};
}

bool Registry::scope_within(std::uint64_t scope, std::uint64_t ancestor) const {
  while (scope != 0) {
    if (scope == ancestor) return true;
    auto it = scopes_.find(scope);
    if (it == scopes_.end()) return false;
    scope = it->second.parent;
  }
  return false;
}

Capability Registry::end_borrow(BorrowScope&& scope) {
  std::lock_guard lock(mutex_);
  if (!scopes_.contains(scope.id())) throw Error(Errc::Consumed, "borrow scope already closed");
  std::vector<std::uint64_t> revoked;
  for (const auto& [stamp, token] : tokens_) {
    if (scope_within(token.scope, scope.id())) revoked.push_back(stamp);
  }
  for (auto stamp : revoked) retire(stamp);
  std::vector<std::uint64_t> closed;
  for (const auto& [id, s] : scopes_) {
    if (scope_within(id, scope.id())) closed.push_back(id);
  }
  for (auto id : closed) scopes_.erase(id);

  auto it = tokens_.find(scope.original().stamp());
  if (it == tokens_.end()) throw Error(Errc::Consumed, "borrowed original was revoked");
  it->second.state = State::Live;
  check_disjointness();
  return scope.original_;
}

std::size_t Registry::physical_length(ArrayId array) const {
  std::lock_guard lock(mutex_);
  return arrays_.at(array).length;
}

std::size_t Registry::live_count(ArrayId array) const {
  std::lock_guard lock(mutex_);
  arrays_.at(array);
  std::size_t n = 0;
  for (const auto& [stamp, t] : tokens_) {
    if (t.array == array && t.state == State::Live) ++n;
  }
  return n;
}

std::vector<ArrayId> Registry::arrays() const {
  std::lock_guard lock(mutex_);
  std::vector<ArrayId> ids;
  for (const auto& [id, meta] : arrays_) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<CapabilityInfo> Registry::live_capabilities() const {
  std::lock_guard lock(mutex_);
  std::vector<CapabilityInfo> out;
  for (const auto& [stamp, t] : tokens_) {
    if (t.state == State::Live) out.push_back({stamp, t.array, t.sigma, t.mode, t.borrowed});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.stamp < b.stamp; });
  return out;
}

void Registry::set_debug_checks(bool on) {
  std::lock_guard lock(mutex_);
  debug_ = on;
}

std::size_t Registry::debug_check_count() const {
  std::lock_guard lock(mutex_);
  return debug_checks_;
}

void Registry::check_disjointness() const {
  if (!debug_) return;
  ++debug_checks_;
  std::map<ArrayId, std::vector<const Token*>> by_array;
  for (const auto& [stamp, t] : tokens_) {
    if (t.state == State::Live) by_array[t.array].push_back(&t);
  }
  for (const auto& [array, list] : by_array) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        const auto& a = *list[i];
        const auto& b = *list[j];
        if (a.mode == Mode::Read && b.mode == Mode::Read) continue;
        if (!sigma::disjoint(a.sigma, b.sigma)) {
          throw std::logic_error("kernel disjointness violated on array " + std::to_string(array));
        }
      }
    }
  }
}

}  // namespace arrcap::kernel
