#pragma once

// Runtime capability kernel: physical arrays plus split/merge/align/borrow
// over index translation functions. Consumption is enforced dynamically with
// per-capability stamps validated against the store.

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "arrcap/error.hpp"
#include "arrcap/sigma.hpp"

namespace arrcap::kernel {

using ArrayId = std::uint64_t;

// Locked and local modes are not modelled.
enum class Mode { Unique, Read };

std::string_view to_string(Mode mode) noexcept;

class Registry;

/// A handle on (part of) an array. Copies of a handle share its stamp, so
/// consuming one copy consumes all of them.
class Capability {
 public:
  ArrayId array_id() const noexcept { return array_; }
  const IndexMap& sigma() const noexcept { return sigma_; }
  Mode mode() const noexcept { return mode_; }
  bool borrowed() const noexcept { return borrowed_; }
  std::size_t length() const noexcept { return sigma_.size(); }
  std::uint64_t stamp() const noexcept { return stamp_; }

 private:
  friend class Registry;
  Capability(std::uint64_t stamp, ArrayId array, IndexMap sigma, Mode mode, bool borrowed)
      : stamp_(stamp), array_(array), sigma_(std::move(sigma)), mode_(mode), borrowed_(borrowed) {}

  std::uint64_t stamp_;
  ArrayId array_;
  IndexMap sigma_;
  Mode mode_;
  bool borrowed_;
};

class BorrowScope {
 public:
  BorrowScope(BorrowScope&&) noexcept = default;
  BorrowScope& operator=(BorrowScope&&) noexcept = default;
  BorrowScope(const BorrowScope&) = delete;
  BorrowScope& operator=(const BorrowScope&) = delete;

  const Capability& original() const noexcept { return original_; }
  std::uint64_t id() const noexcept { return id_; }

 private:
  friend class Registry;
  BorrowScope(std::uint64_t id, Capability original) : id_(id), original_(std::move(original)) {}

  std::uint64_t id_;
  Capability original_;
};

/// One live (non-buried) capability, as listed by the debug dump.
struct CapabilityInfo {
  std::uint64_t stamp;
  ArrayId array;
  IndexMap sigma;
  Mode mode;
  bool borrowed;
};

/// Capability bookkeeping shared by every payload type. Thread-safe.
class Registry {
 public:
  Capability create(std::size_t length);

  /// Throws Consumed/Buried; returns the physical slot for `logical`.
  std::size_t translate(const Capability& cap, std::size_t logical, bool for_write) const;
  void validate(const Capability& cap) const;

  std::vector<Capability> split(const Capability& cap, std::size_t k, bool strided);
  std::vector<Capability> split_with(const Capability& cap, std::span<const IndexMap> parts);
  Capability merge(std::span<const Capability> caps, bool concat);

  std::pair<BorrowScope, Capability> borrow(const Capability& cap, bool as_read);
  Capability end_borrow(BorrowScope&& scope);

  std::size_t physical_length(ArrayId array) const;
  /// Valid, non-buried capabilities on `array`.
  std::size_t live_count(ArrayId array) const;
  std::vector<ArrayId> arrays() const;
  std::vector<CapabilityInfo> live_capabilities() const;

  /// With debug checks on, every operation re-verifies that any two live
  /// capabilities are on different arrays, have disjoint ranges, or are
  /// both read-only; a violation throws std::logic_error.
  void set_debug_checks(bool on);
  std::size_t debug_check_count() const;

 protected:
  /// Calls `permute(sigma)` with the metadata lock held, after checking the
  /// sole-capability and full-coverage preconditions; returns the aligned
  /// capability.
  Capability align_with(const Capability& cap, const std::function<void(const IndexMap&)>& permute);

 private:
  enum class State { Live, Buried };
  struct Token {
    ArrayId array;
    IndexMap sigma;
    Mode mode;
    bool borrowed;
    std::uint64_t scope;
    State state;
  };
  struct Scope {
    std::uint64_t original;
    std::uint64_t parent;
  };
  struct ArrayMeta {
    std::size_t length;
    std::size_t caps;  // outstanding tokens, buried ones included
  };

  const Token& live_token(const Capability& cap) const;
  Capability issue(ArrayId array, IndexMap sigma, Mode mode, bool borrowed, std::uint64_t scope);
  void retire(std::uint64_t stamp);
  bool scope_within(std::uint64_t scope, std::uint64_t ancestor) const;
  void check_disjointness() const;

  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, Token> tokens_;
  std::unordered_map<std::uint64_t, Scope> scopes_;
  std::unordered_map<ArrayId, ArrayMeta> arrays_;
  std::uint64_t next_stamp_ = 1;
  std::uint64_t next_scope_ = 1;
  ArrayId next_array_ = 0;
  bool debug_ = false;
  mutable std::size_t debug_checks_ = 0;
};

/// Physical arrays of T plus the capability API. Element access through
/// capabilities with disjoint ranges may run concurrently.
template <class T>
class ArrayStore : public Registry {
 public:
  Capability new_array(std::size_t length, const T& init) {
    auto slots = std::make_unique<T[]>(length);
    for (std::size_t i = 0; i < length; ++i) slots[i] = init;
    std::lock_guard lock(payload_mutex_);
    auto cap = create(length);
    payloads_.emplace(cap.array_id(), std::move(slots));
    return cap;
  }

  T get(const Capability& cap, std::size_t i) const {
    const auto phys = translate(cap, i, false);
    return slots(cap.array_id())[phys];
  }

  void set(const Capability& cap, std::size_t i, T value) {
    const auto phys = translate(cap, i, true);
    slots(cap.array_id())[phys] = std::move(value);
  }

  /// Permutes storage so that physical order equals the capability's
  /// logical order; the result has the identity translation.
  Capability align(const Capability& cap) {
    T* data = slots(cap.array_id());
    return align_with(cap, [data](const IndexMap& sigma) { permute_in_place(data, sigma); });
  }

  std::vector<T> logical(const Capability& cap) const {
    std::vector<T> out;
    out.reserve(cap.length());
    for (std::size_t i = 0; i < cap.length(); ++i) out.push_back(get(cap, i));
    return out;
  }

  std::vector<T> physical(ArrayId array) const {
    const T* data = slots(array);
    return std::vector<T>(data, data + physical_length(array));
  }

  void dump(std::ostream& out) const {
    for (auto id : arrays()) {
      out << "ι" << id << ": [";
      auto values = physical(id);
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ", ";
        out << values[i];
      }
      out << "] caps=" << live_count(id) << '\n';
    }
    for (const auto& c : live_capabilities()) {
      out << "cap(ι" << c.array << ", σ=" << sigma::format(c.sigma) << ", "
          << to_string(c.mode) << ", " << (c.borrowed ? "borrowed" : "owned") << ")\n";
    }
  }

  std::string dump() const {
    std::ostringstream out;
    dump(out);
    return out.str();
  }

  /// phys'[i] = phys[sigma(i)], walking each cycle once.
  static void permute_in_place(T* data, const IndexMap& sigma) {
    std::vector<bool> done(sigma.size(), false);
    for (std::size_t start = 0; start < sigma.size(); ++start) {
      if (done[start] || sigma[start] == start) {
        done[start] = true;
        continue;
      }
      T carry = std::move(data[start]);
      std::size_t pos = start;
      while (true) {
        done[pos] = true;
        const std::size_t from = sigma[pos];
        if (from == start) {
          data[pos] = std::move(carry);
          break;
        }
        data[pos] = std::move(data[from]);
        pos = from;
      }
    }
  }

 private:
  T* slots(ArrayId array) const {
    std::lock_guard lock(payload_mutex_);
    auto it = payloads_.find(array);
    if (it == payloads_.end()) throw Error(Errc::Consumed, "unknown array");
    return it->second.get();
  }

  mutable std::mutex payload_mutex_;
  std::unordered_map<ArrayId, std::unique_ptr<T[]>> payloads_;
};

}  // namespace arrcap::kernel
