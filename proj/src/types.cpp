#include "arrcap/types.hpp"

namespace arrcap::lang {

Type Type::array(Annot annot, Mod mod, Type elem) {
  Type t;
  t.annot_ = annot;
  t.mod_ = mod;
  t.elem_ = std::make_shared<const Type>(std::move(elem));
  return t;
}

Type Type::with_annot(Annot annot) const {
  Type t = *this;
  t.annot_ = annot;
  return t;
}

std::size_t Type::depth() const noexcept {
  return is_bool() ? 0 : 1 + elem_->depth();
}

bool operator==(const Type& a, const Type& b) {
  if (a.is_bool() || b.is_bool()) return a.is_bool() && b.is_bool();
  return a.annot_ == b.annot_ && a.mod_ == b.mod_ && *a.elem_ == *b.elem_;
}

bool read_only(const Type& t) {
  return t.is_bool() || (t.mod() == Mod::Val && read_only(t.elem()));
}

bool read_only_elems(const Type& t) {
  return t.is_array() && read_only(t.elem());
}

bool is_borrowed(const Type& t) { return t.is_array() && t.annot() == Annot::Borrowed; }
bool is_buried(const Type& t) { return t.is_array() && t.annot() == Annot::Buried; }
bool is_read(const Type& t) { return t.is_array() && t.mod() == Mod::Val; }

Type R(const Type& t) {
  if (t.is_bool()) return t;
  return Type::array(t.annot(), Mod::Val, R(t.elem()));
}

bool wf_type(const Type& t) {
  // WF-BOOL, WF-ARRAY: every finite type built from the grammar qualifies
  return t.is_bool() || wf_type(t.elem());
}

std::string to_string(Annot a) {
  switch (a) {
    case Annot::Unique: return "unique";
    case Annot::Borrowed: return "borrowed";
    case Annot::Buried: return "buried";
  }
  return "?";
}

std::string to_string(Mod m) { return m == Mod::Var ? "var" : "val"; }

std::string to_string(const Type& t) {
  if (t.is_bool()) return "bool";
  return to_string(t.annot()) + " [" + to_string(t.mod()) + " " + to_string(t.elem()) + "]";
}

}  // namespace arrcap::lang
