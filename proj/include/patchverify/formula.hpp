#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace patchverify {

/// A free symbol of an assertion: a local variable or an operand-stack slot
/// (slot 0 is the top). Variables whose name contains '\'' are fresh
/// existential witnesses introduced by the strongest-postcondition rules.
struct Atom {
  enum class Kind : std::uint8_t { Var, Slot };

  Kind kind = Kind::Var;
  std::string name;
  int slot = 0;

  static Atom var(std::string name) { return {Kind::Var, std::move(name), 0}; }
  static Atom stack_slot(int k) { return {Kind::Slot, {}, k}; }

  bool is_slot() const { return kind == Kind::Slot; }
  bool is_fresh() const { return kind == Kind::Var && name.find('\'') != std::string::npos; }
  std::string to_string() const;

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct Term {
  enum class Kind : std::uint8_t { Const, Var, Slot, Plus, FieldOf };

  Kind kind = Kind::Const;
  std::int64_t value = 0;
  std::string name;   // Var name, or FieldOf class
  std::string field;  // FieldOf field
  int slot = 0;
  std::vector<Term> args;  // Plus: 2, FieldOf: 1 (base)

  static Term constant(std::int64_t k);
  static Term var(std::string x);
  static Term stack_slot(int k);
  static Term atom(const Atom& a);
  static Term plus(Term a, Term b);
  static Term field_of(Term base, std::string cls, std::string field);

  std::optional<Atom> as_atom() const;

  friend bool operator==(const Term&, const Term&) = default;
};

enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

struct Formula {
  enum class Kind : std::uint8_t { True, False, Cmp, Not, And, Or, Implies };

  Kind kind = Kind::True;
  CmpOp op = CmpOp::Eq;
  std::vector<Term> terms;     // Cmp: lhs, rhs
  std::vector<Formula> args;   // Not: 1, And/Or/Implies: 2

  static Formula truth();
  static Formula falsity();
  static Formula cmp(Term lhs, CmpOp op, Term rhs);
  static Formula negate(Formula f);
  static Formula conj(Formula a, Formula b);
  static Formula disj(Formula a, Formula b);
  static Formula implies(Formula a, Formula b);
  /// Left-nested conjunction; True when empty.
  static Formula conj_all(const std::vector<Formula>& parts);

  friend bool operator==(const Formula&, const Formula&) = default;
};

std::string to_string(CmpOp op);
std::string to_string(const Term& t);
std::string to_string(const Formula& f);

/// Infix syntax: comparisons `= != < <= > >=`, connectives `! && || ->`,
/// parentheses, identifiers, slots `s0 s1 ...`, integer literals, `+`,
/// `true`, `false`, and `field(base, Class, f)`. Throws Error{Parse}.
Formula parse_formula(std::string_view text);
Term parse_term(std::string_view text);

std::set<Atom> free_atoms(const Term& t);
std::set<Atom> free_atoms(const Formula& f);
bool mentions_slots(const Formula& f);
bool mentions_fields(const Formula& f);
/// Highest slot index mentioned, or -1.
int max_slot(const Formula& f);

using Bindings = std::map<Atom, Term>;

/// Simultaneous (non-cascading) replacement of atoms by terms.
Term substitute(const Term& t, const Bindings& bindings);
Formula substitute(const Formula& f, const Bindings& bindings);

/// Value of each atom; missing atoms are an error.
using Assignment = std::map<Atom, std::int64_t>;
bool evaluate(const Formula& f, const Assignment& env);
std::int64_t evaluate(const Term& t, const Assignment& env);

/// `pre:` / `post:` specification pair.
struct Spec {
  Formula pre;
  Formula post;
};

/// Spec file: a `pre:` section and a `post:` section, each followed by a
/// formula that may continue over several lines. `#` starts a comment.
/// The precondition may not mention stack slots.
Spec parse_spec(std::string_view text);

}  // namespace patchverify
