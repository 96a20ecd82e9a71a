#pragma once

#include <memory>
#include <string>

namespace arrcap::lang {

enum class Annot { Unique, Borrowed, Buried };
enum class Mod { Var, Val };

/// t ::= α [mod t] | bool
class Type {
 public:
  Type() = default;  // bool

  static Type boolean() { return {}; }
  static Type array(Annot annot, Mod mod, Type elem);

  bool is_bool() const noexcept { return elem_ == nullptr; }
  bool is_array() const noexcept { return elem_ != nullptr; }

  /// Array accessors; undefined on bool.
  Annot annot() const noexcept { return annot_; }
  Mod mod() const noexcept { return mod_; }
  const Type& elem() const noexcept { return *elem_; }

  Type with_annot(Annot annot) const;
  /// Number of array levels.
  std::size_t depth() const noexcept;

  friend bool operator==(const Type& a, const Type& b);

 private:
  Annot annot_ = Annot::Unique;
  Mod mod_ = Mod::Var;
  std::shared_ptr<const Type> elem_;
};

/// bool, or an array that is val at every level.
bool read_only(const Type& t);
/// readOnly of the element type; the outer modifier may be var.
bool read_only_elems(const Type& t);
bool is_borrowed(const Type& t);
bool is_buried(const Type& t);
/// Outermost modifier is val; the read() of arrayDisjointness.
bool is_read(const Type& t);
/// Every modifier set to val, annotations kept.
Type R(const Type& t);
bool wf_type(const Type& t);

std::string to_string(Annot a);
std::string to_string(Mod m);
std::string to_string(const Type& t);

}  // namespace arrcap::lang
