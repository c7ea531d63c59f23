#include "patchverify/formula.hpp"

#include <cctype>
#include <charconv>
#include <functional>

#include "patchverify/error.hpp"
#include "text_util.hpp"

namespace patchverify {

std::string Atom::to_string() const { return is_slot() ? "s" + std::to_string(slot) : name; }

Term Term::constant(std::int64_t k) {
  Term t;
  t.kind = Kind::Const;
  t.value = k;
  return t;
}

Term Term::var(std::string x) {
  Term t;
  t.kind = Kind::Var;
  t.name = std::move(x);
  return t;
}

Term Term::stack_slot(int k) {
  Term t;
  t.kind = Kind::Slot;
  t.slot = k;
  return t;
}

Term Term::atom(const Atom& a) { return a.is_slot() ? stack_slot(a.slot) : var(a.name); }

Term Term::plus(Term a, Term b) {
  Term t;
  t.kind = Kind::Plus;
  t.args = {std::move(a), std::move(b)};
  return t;
}

Term Term::field_of(Term base, std::string cls, std::string field) {
  Term t;
  t.kind = Kind::FieldOf;
  t.name = std::move(cls);
  t.field = std::move(field);
  t.args = {std::move(base)};
  return t;
}

std::optional<Atom> Term::as_atom() const {
  if (kind == Kind::Var) return Atom::var(name);
  if (kind == Kind::Slot) return Atom::stack_slot(slot);
  return std::nullopt;
}

Formula Formula::truth() { return Formula{}; }

Formula Formula::falsity() {
  Formula f;
  f.kind = Kind::False;
  return f;
}

Formula Formula::cmp(Term lhs, CmpOp op, Term rhs) {
  Formula f;
  f.kind = Kind::Cmp;
  f.op = op;
  f.terms = {std::move(lhs), std::move(rhs)};
  return f;
}

Formula Formula::negate(Formula g) {
  Formula f;
  f.kind = Kind::Not;
  f.args = {std::move(g)};
  return f;
}

namespace {
Formula binary(Formula::Kind kind, Formula a, Formula b) {
  Formula f;
  f.kind = kind;
  f.args = {std::move(a), std::move(b)};
  return f;
}
}  // namespace

Formula Formula::conj(Formula a, Formula b) { return binary(Kind::And, std::move(a), std::move(b)); }
Formula Formula::disj(Formula a, Formula b) { return binary(Kind::Or, std::move(a), std::move(b)); }
Formula Formula::implies(Formula a, Formula b) { return binary(Kind::Implies, std::move(a), std::move(b)); }

Formula Formula::conj_all(const std::vector<Formula>& parts) {
  if (parts.empty()) return truth();
  Formula out = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) out = conj(std::move(out), parts[k]);
  return out;
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

std::string to_string(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Const: return std::to_string(t.value);
    case Term::Kind::Var: return t.name;
    case Term::Kind::Slot: return "s" + std::to_string(t.slot);
    case Term::Kind::Plus: {
      std::string rhs = to_string(t.args[1]);
      if (t.args[1].kind == Term::Kind::Plus) rhs = "(" + rhs + ")";
      return to_string(t.args[0]) + " + " + rhs;
    }
    case Term::Kind::FieldOf:
      return "field(" + to_string(t.args[0]) + ", " + t.name + ", " + t.field + ")";
  }
  return "?";
}

namespace {

int precedence(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::Implies: return 1;
    case Formula::Kind::Or: return 2;
    case Formula::Kind::And: return 3;
    case Formula::Kind::Not: return 4;
    default: return 5;
  }
}

std::string wrap(const Formula& f, int min_prec) {
  std::string s = to_string(f);
  return precedence(f) < min_prec ? "(" + s + ")" : s;
}

}  // namespace

std::string to_string(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::True: return "true";
    case Formula::Kind::False: return "false";
    case Formula::Kind::Cmp:
      return to_string(f.terms[0]) + " " + to_string(f.op) + " " + to_string(f.terms[1]);
    case Formula::Kind::Not: {
      // "!x < 3" would read as if the negation applied to x.
      const auto k = f.args[0].kind;
      const bool bare = k == Formula::Kind::True || k == Formula::Kind::False || k == Formula::Kind::Not;
      return "!" + (bare ? to_string(f.args[0]) : "(" + to_string(f.args[0]) + ")");
    }
    case Formula::Kind::And: return wrap(f.args[0], 3) + " && " + wrap(f.args[1], 4);
    case Formula::Kind::Or: return wrap(f.args[0], 2) + " || " + wrap(f.args[1], 3);
    case Formula::Kind::Implies: return wrap(f.args[0], 2) + " -> " + wrap(f.args[1], 1);
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum class Kind : std::uint8_t { Ident, Int, Op, End };
  Kind kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_ident_char = [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || c == '\'';
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && is_ident_char(src[i])) ++i;
      out.push_back({Token::Kind::Ident, std::string(src.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      out.push_back({Token::Kind::Int, std::string(src.substr(start, i - start)), start});
      continue;
    }
    static constexpr std::string_view two[] = {"->", "&&", "||", "!=", "<=", ">="};
    bool matched = false;
    for (auto op : two) {
      if (src.substr(i, 2) == op) {
        out.push_back({Token::Kind::Op, std::string(op), start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("=<>!+-(),").find(c) != std::string_view::npos) {
      out.push_back({Token::Kind::Op, std::string(1, c), start});
      ++i;
      continue;
    }
    throw Error(ErrorKind::Parse, "unexpected character '" + std::string(1, c) + "' at offset " +
                                      std::to_string(start));
  }
  out.push_back({Token::Kind::End, "", src.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

  Formula formula() {
    Formula f = implication();
    expect_end();
    return f;
  }

  Term term_only() {
    Term t = term();
    expect_end();
    return t;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  bool is_op(std::string_view op) const { return peek().kind == Token::Kind::Op && peek().text == op; }
  bool accept(std::string_view op) {
    if (!is_op(op)) return false;
    ++pos_;
    return true;
  }
  void expect(std::string_view op) {
    if (!accept(op)) fail("expected '" + std::string(op) + "'");
  }
  void expect_end() {
    if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::Parse, msg + " at offset " + std::to_string(peek().pos));
  }

  std::optional<CmpOp> peek_cmp() const {
    if (peek().kind != Token::Kind::Op) return std::nullopt;
    const std::string& t = peek().text;
    if (t == "=") return CmpOp::Eq;
    if (t == "!=") return CmpOp::Ne;
    if (t == "<") return CmpOp::Lt;
    if (t == "<=") return CmpOp::Le;
    if (t == ">") return CmpOp::Gt;
    if (t == ">=") return CmpOp::Ge;
    return std::nullopt;
  }

  Formula implication() {
    Formula lhs = disjunction();
    if (accept("->")) return Formula::implies(std::move(lhs), implication());
    return lhs;
  }

  Formula disjunction() {
    Formula lhs = conjunction();
    while (accept("||")) lhs = Formula::disj(std::move(lhs), conjunction());
    return lhs;
  }

  Formula conjunction() {
    Formula lhs = unary();
    while (accept("&&")) lhs = Formula::conj(std::move(lhs), unary());
    return lhs;
  }

  Formula unary() {
    if (accept("!")) return Formula::negate(unary());
    return primary();
  }

  Formula primary() {
    if (peek().kind == Token::Kind::Ident && peek().text == "true") {
      ++pos_;
      return Formula::truth();
    }
    if (peek().kind == Token::Kind::Ident && peek().text == "false") {
      ++pos_;
      return Formula::falsity();
    }
    if (is_op("(")) {
      // Either a parenthesised formula or the start of a parenthesised term.
      std::size_t save = pos_;
      try {
        ++pos_;
        Formula inner = implication();
        expect(")");
        if (!peek_cmp() && !is_op("+")) return inner;
      } catch (const Error&) {
      }
      pos_ = save;
    }
    Term lhs = term();
    auto op = peek_cmp();
    if (!op) fail("expected a comparison operator");
    ++pos_;
    Term rhs = term();
    return Formula::cmp(std::move(lhs), *op, std::move(rhs));
  }

  Term term() {
    Term lhs = term_atom();
    while (accept("+")) lhs = Term::plus(std::move(lhs), term_atom());
    return lhs;
  }

  std::int64_t integer(bool negative) {
    if (peek().kind != Token::Kind::Int) fail("expected an integer");
    std::int64_t value = 0;
    const std::string& text = peek().text;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc()) fail("integer out of range");
    (void)ptr;
    ++pos_;
    return negative ? -value : value;
  }

  Term term_atom() {
    if (accept("-")) return Term::constant(integer(true));
    if (peek().kind == Token::Kind::Int) return Term::constant(integer(false));
    if (accept("(")) {
      Term inner = term();
      expect(")");
      return inner;
    }
    if (peek().kind != Token::Kind::Ident) fail("expected a term");
    std::string name = peek().text;
    ++pos_;
    if (name == "field" && is_op("(")) {
      ++pos_;
      Term base = term();
      expect(",");
      std::string cls = ident("class name");
      expect(",");
      std::string fld = ident("field name");
      expect(")");
      return Term::field_of(std::move(base), std::move(cls), std::move(fld));
    }
    if (name == "true" || name == "false") fail("'" + name + "' is not a term");
    if (name.size() > 1 && name[0] == 's' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      return Term::stack_slot(std::stoi(name.substr(1)));
    }
    return Term::var(std::move(name));
  }

  std::string ident(const char* what) {
    if (peek().kind != Token::Kind::Ident) fail(std::string("expected ") + what);
    return tokens_[pos_++].text;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(text).formula(); }
Term parse_term(std::string_view text) { return Parser(text).term_only(); }

// ---------------------------------------------------------------------------
// Atoms, substitution, evaluation

namespace {

void collect(const Term& t, std::set<Atom>& out) {
  if (auto a = t.as_atom()) out.insert(*a);
  for (const auto& arg : t.args) collect(arg, out);
}

void collect(const Formula& f, std::set<Atom>& out) {
  for (const auto& t : f.terms) collect(t, out);
  for (const auto& g : f.args) collect(g, out);
}

bool any_term(const Formula& f, const std::function<bool(const Term&)>& pred) {
  std::function<bool(const Term&)> walk = [&](const Term& t) {
    if (pred(t)) return true;
    for (const auto& a : t.args) {
      if (walk(a)) return true;
    }
    return false;
  };
  for (const auto& t : f.terms) {
    if (walk(t)) return true;
  }
  for (const auto& g : f.args) {
    if (any_term(g, pred)) return true;
  }
  return false;
}

}  // namespace

std::set<Atom> free_atoms(const Term& t) {
  std::set<Atom> out;
  collect(t, out);
  return out;
}

std::set<Atom> free_atoms(const Formula& f) {
  std::set<Atom> out;
  collect(f, out);
  return out;
}

bool mentions_slots(const Formula& f) {
  return any_term(f, [](const Term& t) { return t.kind == Term::Kind::Slot; });
}

bool mentions_fields(const Formula& f) {
  return any_term(f, [](const Term& t) { return t.kind == Term::Kind::FieldOf; });
}

int max_slot(const Formula& f) {
  int best = -1;
  for (const auto& a : free_atoms(f)) {
    if (a.is_slot()) best = std::max(best, a.slot);
  }
  return best;
}

Term substitute(const Term& t, const Bindings& bindings) {
  if (auto a = t.as_atom()) {
    auto it = bindings.find(*a);
    return it == bindings.end() ? t : it->second;
  }
  Term out = t;
  for (auto& arg : out.args) arg = substitute(arg, bindings);
  return out;
}

Formula substitute(const Formula& f, const Bindings& bindings) {
  if (bindings.empty()) return f;
  Formula out = f;
  for (auto& t : out.terms) t = substitute(t, bindings);
  for (auto& g : out.args) g = substitute(g, bindings);
  return out;
}

std::int64_t evaluate(const Term& t, const Assignment& env) {
  switch (t.kind) {
    case Term::Kind::Const: return t.value;
    case Term::Kind::Var:
    case Term::Kind::Slot: {
      auto it = env.find(*t.as_atom());
      if (it == env.end()) {
        throw Error(ErrorKind::StackShapeError, "no value for " + t.as_atom()->to_string());
      }
      return it->second;
    }
    case Term::Kind::Plus: return evaluate(t.args[0], env) + evaluate(t.args[1], env);
    case Term::Kind::FieldOf:
      throw Error(ErrorKind::UnsupportedInstruction, "field terms have no integer value here");
  }
  return 0;
}

namespace {
bool compare(std::int64_t a, CmpOp op, std::int64_t b) {
  switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return a != b;
    case CmpOp::Lt: return a < b;
    case CmpOp::Le: return a <= b;
    case CmpOp::Gt: return a > b;
    case CmpOp::Ge: return a >= b;
  }
  return false;
}
}  // namespace

bool evaluate(const Formula& f, const Assignment& env) {
  switch (f.kind) {
    case Formula::Kind::True: return true;
    case Formula::Kind::False: return false;
    case Formula::Kind::Cmp: return compare(evaluate(f.terms[0], env), f.op, evaluate(f.terms[1], env));
    case Formula::Kind::Not: return !evaluate(f.args[0], env);
    case Formula::Kind::And: return evaluate(f.args[0], env) && evaluate(f.args[1], env);
    case Formula::Kind::Or: return evaluate(f.args[0], env) || evaluate(f.args[1], env);
    case Formula::Kind::Implies: return !evaluate(f.args[0], env) || evaluate(f.args[1], env);
  }
  return false;
}

Spec parse_spec(std::string_view text) {
  std::string pre;
  std::string post;
  std::string* current = nullptr;
  bool saw_pre = false;
  bool saw_post = false;
  int lineno = 0;
  for (std::string_view raw : detail::split_lines(text)) {
    ++lineno;
    std::string_view line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.substr(0, 4) == "pre:") {
      if (saw_pre) throw Error(ErrorKind::Parse, "duplicate 'pre:' section", lineno);
      saw_pre = true;
      current = &pre;
      line = line.substr(4);
    } else if (line.substr(0, 5) == "post:") {
      if (saw_post) throw Error(ErrorKind::Parse, "duplicate 'post:' section", lineno);
      saw_post = true;
      current = &post;
      line = line.substr(5);
    }
    if (!current) throw Error(ErrorKind::Parse, "text before the 'pre:' section", lineno);
    *current += " ";
    *current += line;
  }
  if (!saw_pre || !saw_post) throw Error(ErrorKind::Parse, "a spec needs both 'pre:' and 'post:'");
  auto section = [](const std::string& body, const char* name) {
    if (detail::trim(body).empty()) throw Error(ErrorKind::Parse, std::string("empty '") + name + ":' section");
    try {
      return parse_formula(body);
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, std::string(name) + ": " + e.message());
    }
  };
  Spec spec{section(pre, "pre"), section(post, "post")};
  if (mentions_slots(spec.pre)) {
    throw Error(ErrorKind::Parse, "the precondition may not mention stack slots (the entry stack is empty)");
  }
  return spec;
}

}  // namespace patchverify
