#include "arrcap/parser.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <set>

namespace arrcap::lang {

namespace {

const std::set<std::string, std::less<>> kKeywords = {
    "fun",   "let",  "in",     "new",   "unique", "borrowed", "buried", "var",  "val", "bool",
    "true",  "false", "null",  "finish", "async", "borrow",   "as",     "read", "B"};

struct Token {
  enum class Kind { Ident, Int, Sym, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t offset = 0;
  SourceLoc loc;
};

struct SyntaxError {
  SourceLoc loc;
  std::string message;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip();
      Token t;
      t.offset = pos_;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          t.text += advance();
        }
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Token::Kind::Int;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          t.text += advance();
        }
      } else if (src_.substr(pos_, 2) == "++" || src_.substr(pos_, 2) == "->") {
        t.kind = Token::Kind::Sym;
        t.text += advance();
        t.text += advance();
      } else if (std::string_view("()[]{}:,;=").find(c) != std::string_view::npos) {
        t.kind = Token::Kind::Sym;
        t.text += advance();
      } else {
        throw SyntaxError{t.loc, std::string("unexpected character '") + c + "'"};
      }
      out.push_back(std::move(t));
    }
  }

 private:
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip() {
    while (pos_ < src_.size()) {
      if (std::isspace(static_cast<unsigned char>(src_[pos_]))) {
        advance();
      } else if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> tokens) : src_(src), toks_(std::move(tokens)) {}

  Program program() {
    Program p;
    while (!at_end()) p.functions.push_back(function());
    return p;
  }

  Type lone_type() {
    Type t = type();
    if (!at_end()) fail("trailing input after type");
    return t;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }
  bool is(std::string_view text, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind != Token::Kind::End && t.kind != Token::Kind::Int && t.text == text;
  }
  bool eat(std::string_view text) {
    if (!is(text)) return false;
    ++pos_;
    return true;
  }
  void expect(std::string_view text) {
    if (!eat(text)) fail("expected '" + std::string(text) + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const auto& t = peek();
    const std::string found = t.kind == Token::Kind::End ? "end of input" : "'" + t.text + "'";
    throw SyntaxError{t.loc, msg + ", found " + found};
  }

  std::string ident() {
    const auto& t = peek();
    if (t.kind != Token::Kind::Ident) fail("expected an identifier");
    if (kKeywords.contains(t.text)) {
      if (t.text == "B") throw SyntaxError{t.loc, "B(e) only appears during evaluation"};
      fail("expected an identifier");
    }
    ++pos_;
    return t.text;
  }

  std::size_t integer() {
    const auto& t = peek();
    if (t.kind != Token::Kind::Int) fail("expected an integer literal");
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{}) throw SyntaxError{t.loc, "integer literal out of range"};
    ++pos_;
    return v;
  }

  FunDecl function() {
    FunDecl f;
    f.loc = peek().loc;
    expect("fun");
    f.name = ident();
    expect("(");
    f.param = ident();
    expect(":");
    f.param_type = type();
    expect(")");
    expect(":");
    f.ret_type = type();
    f.body = expr();
    return f;
  }

  Type type() {
    if (eat("(")) {
      Type t = type();
      expect(")");
      return t;
    }
    if (eat("bool")) return Type::boolean();
    Annot annot;
    if (eat("unique")) {
      annot = Annot::Unique;
    } else if (eat("borrowed")) {
      annot = Annot::Borrowed;
    } else if (eat("buried")) {
      annot = Annot::Buried;
    } else {
      fail("expected a type");
    }
    expect("[");
    Mod mod;
    if (eat("var")) {
      mod = Mod::Var;
    } else if (eat("val")) {
      mod = Mod::Val;
    } else {
      fail("expected 'var' or 'val'");
    }
    Type elem = type();
    expect("]");
    return Type::array(annot, mod, std::move(elem));
  }

  IndexMap sigma_literal() {
    const auto open = peek();
    expect("{");
    int depth = 1;
    while (depth > 0) {
      if (at_end()) fail("unterminated index map literal");
      if (is("{")) ++depth;
      if (is("}")) --depth;
      ++pos_;
    }
    const auto close_offset = toks_[pos_ - 1].offset;
    std::string_view inner = src_.substr(open.offset + 1, close_offset - open.offset - 1);
    const auto first = inner.find_first_not_of(" \t\r\n");
    const bool generator = first != std::string_view::npos &&
                           (inner.substr(first).starts_with("seq") || inner.substr(first).starts_with("stride"));
    try {
      return generator ? sigma::parse(inner) : sigma::parse("{" + std::string(inner) + "}");
    } catch (const Error& e) {
      throw SyntaxError{open.loc, e.what()};
    }
  }

  ExprPtr expr() {
    Expr e;
    e.loc = peek().loc;
    if (eat("let")) {
      if (is("{", 1)) {
        e.kind = ExprKind::Split;
        e.y = ident();
        e.s1 = sigma_literal();
        expect("++");
        e.z = ident();
        e.s2 = sigma_literal();
        expect("=");
        e.x = ident();
        expect("in");
        e.a = expr();
      } else {
        e.kind = ExprKind::Let;
        e.x = ident();
        expect("=");
        e.a = expr();
        expect("in");
        e.b = expr();
      }
    } else if (eat("finish")) {
      e.kind = ExprKind::Finish;
      expect("{");
      expect("async");
      expect("{");
      e.a = expr();
      expect("}");
      expect("async");
      expect("{");
      e.b = expr();
      expect("}");
      expect("}");
      expect(";");
      e.c = expr();
    } else if (eat("borrow")) {
      e.kind = ExprKind::Borrow;
      e.x = ident();
      expect("as");
      e.as_read = eat("read");
      e.y = ident();
      expect("in");
      e.a = expr();
    } else if (eat("new")) {
      e.kind = ExprKind::New;
      e.type = type();
      expect("(");
      e.index = integer();
      expect(")");
    } else if (eat("true") || eat("false")) {
      e.kind = ExprKind::Val;
      e.value = Value::boolean(toks_[pos_ - 1].text == "true");
    } else if (eat("null")) {
      e.kind = ExprKind::Val;
      e.value = Value::null();
      if (eat(":")) {
        e.has_type = true;
        e.type = type();
      }
    } else if (eat("(")) {
      auto inner = expr();
      expect(")");
      return inner;
    } else {
      const auto name = ident();
      if (eat("[")) {
        e.x = name;
        e.index = integer();
        expect("]");
        if (eat("=")) {
          e.kind = ExprKind::Assign;
          e.a = expr();
        } else {
          e.kind = ExprKind::Lookup;
        }
      } else if (eat("++")) {
        e.kind = ExprKind::Merge;
        e.x = name;
        e.y = ident();
      } else if (eat("(")) {
        e.kind = ExprKind::Call;
        e.fn = name;
        e.a = expr();
        expect(")");
      } else {
        e.kind = ExprKind::Var;
        e.x = name;
      }
    }
    return make(std::move(e));
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// Makes every binder in a function distinct, renaming later duplicates and
// the references they capture.
class Renamer {
 public:
  Renamer(const FunDecl& f, std::vector<Diagnostic>& diags) : diags_(diags) {
    collect(*f.body);
    used_.insert(f.param);
    binders_.insert(f.param);
  }

  ExprPtr run(const ExprPtr& body, const std::string& param) {
    std::map<std::string, std::string> scope{{param, param}};
    return walk(body, scope);
  }

 private:
  void collect(const Expr& e) {
    for (const auto* s : {&e.x, &e.y, &e.z}) {
      if (!s->empty()) used_.insert(*s);
    }
    for (const auto* c : {&e.a, &e.b, &e.c}) {
      if (*c) collect(**c);
    }
  }

  std::string bind(const std::string& name, SourceLoc loc, std::map<std::string, std::string>& scope) {
    std::string fresh = name;
    if (binders_.contains(name)) {
      for (int k = 1;; ++k) {
        fresh = name + "_" + std::to_string(k);
        if (!used_.contains(fresh)) break;
      }
      used_.insert(fresh);
      diags_.push_back({Diagnostic::Severity::Note, loc, "RENAME",
                        "duplicate binder '" + name + "' renamed to '" + fresh + "'"});
    }
    binders_.insert(fresh);
    scope[name] = fresh;
    return fresh;
  }

  static std::string ref(const std::string& name, const std::map<std::string, std::string>& scope) {
    auto it = scope.find(name);
    return it == scope.end() ? name : it->second;
  }

  ExprPtr walk(const ExprPtr& p, const std::map<std::string, std::string>& scope) {
    Expr e = *p;
    switch (e.kind) {
      case ExprKind::Var:
      case ExprKind::Lookup:
        e.x = ref(e.x, scope);
        break;
      case ExprKind::Merge:
        e.x = ref(e.x, scope);
        e.y = ref(e.y, scope);
        break;
      case ExprKind::Assign:
        e.x = ref(e.x, scope);
        e.a = walk(e.a, scope);
        break;
      case ExprKind::Call:
      case ExprKind::Frame:
        e.a = walk(e.a, scope);
        break;
      case ExprKind::Let: {
        e.a = walk(e.a, scope);
        auto inner = scope;
        e.x = bind(e.x, e.loc, inner);
        e.b = walk(e.b, inner);
        break;
      }
      case ExprKind::Split: {
        e.x = ref(e.x, scope);
        auto inner = scope;
        e.y = bind(e.y, e.loc, inner);
        e.z = bind(e.z, e.loc, inner);
        e.a = walk(e.a, inner);
        break;
      }
      case ExprKind::Borrow: {
        e.x = ref(e.x, scope);
        auto inner = scope;
        e.y = bind(e.y, e.loc, inner);
        e.a = walk(e.a, inner);
        break;
      }
      case ExprKind::Finish:
        e.a = walk(e.a, scope);
        e.b = walk(e.b, scope);
        e.c = walk(e.c, scope);
        break;
      case ExprKind::Val:
      case ExprKind::New:
        break;
    }
    return make(std::move(e));
  }

  std::vector<Diagnostic>& diags_;
  std::set<std::string> used_;
  std::set<std::string> binders_;
};

}  // namespace

ParseResult parse(std::string_view source) {
  ParseResult result;
  try {
    Parser parser(source, Lexer(source).run());
    Program p = parser.program();
    for (auto& f : p.functions) {
      Renamer renamer(f, result.diagnostics);
      f.body = renamer.run(f.body, f.param);
    }
    result.program = std::move(p);
  } catch (const SyntaxError& e) {
    result.diagnostics.push_back({Diagnostic::Severity::Error, e.loc, "PARSE", e.message});
  }
  return result;
}

Type parse_type(std::string_view text) {
  try {
    return Parser(text, Lexer(text).run()).lone_type();
  } catch (const SyntaxError& e) {
    throw Error(Errc::ParseError, e.message);
  }
}

}  // namespace arrcap::lang
