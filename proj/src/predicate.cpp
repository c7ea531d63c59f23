#include "patchverify/predicate.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "patchverify/error.hpp"

namespace patchverify {

namespace {

Term slot(int k) { return Term::stack_slot(k); }

// Slot bindings s_k := s_{k+offset} for k in [first, last].
void shift_slots(Bindings& b, int first, int last, int offset) {
  for (int k = first; k <= last; ++k) b[Atom::stack_slot(k)] = slot(k + offset);
}

bool in_fragment(const Instruction& instr) {
  return std::holds_alternative<op::Inc>(instr) || std::holds_alternative<op::Add>(instr) ||
         std::holds_alternative<op::Pop>(instr) || std::holds_alternative<op::Load>(instr) ||
         std::holds_alternative<op::Store>(instr) || std::holds_alternative<op::Goto>(instr);
}

[[noreturn]] void unsupported(const Instruction& instr, std::optional<Line> line = std::nullopt) {
  throw Error(ErrorKind::UnsupportedInstruction,
              "'" + to_string(instr) + "' is outside the straight-line arithmetic fragment", line);
}

// Operands consumed and net depth change.
std::pair<int, int> shape(const Instruction& instr) {
  if (std::holds_alternative<op::Inc>(instr)) return {1, 0};
  if (std::holds_alternative<op::Add>(instr)) return {2, -1};
  if (std::holds_alternative<op::Pop>(instr)) return {1, -1};
  if (std::holds_alternative<op::Load>(instr)) return {0, 1};
  if (std::holds_alternative<op::Store>(instr)) return {1, -1};
  return {0, 0};
}

// Lines of `m` inside [from, to], checked against the fragment.
std::vector<Line> segment_lines(const MethodMap& m, Line from, Line to) {
  std::vector<Line> lines;
  if (from > to) return lines;
  for (auto it = m.entries().lower_bound(from); it != m.entries().end() && it->first <= to; ++it) {
    const auto& [line, instr] = *it;
    if (std::holds_alternative<op::If>(instr)) {
      throw Error(ErrorKind::NotStraightLine, "conditional branch inside a straight-line segment", line);
    }
    if (auto* g = std::get_if<op::Goto>(&instr); g && g->target != m.next_line(line)) {
      throw Error(ErrorKind::NotStraightLine,
                  "goto " + std::to_string(g->target) + " does not fall through", line);
    }
    if (!in_fragment(instr)) unsupported(instr, line);
    lines.push_back(line);
  }
  return lines;
}

void check_depth(const Instruction& instr, int depth, std::optional<Line> line) {
  if (shape(instr).first > depth) {
    throw Error(ErrorKind::StackShapeError,
                "'" + to_string(instr) + "' needs " + std::to_string(shape(instr).first) +
                    " operand(s) but the stack holds " + std::to_string(depth),
                line);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Weakest precondition

Formula wp_instr(const Instruction& instr, const Formula& q) {
  const int top = max_slot(q);
  Bindings b;
  if (std::holds_alternative<op::Inc>(instr)) {
    b[Atom::stack_slot(0)] = Term::plus(slot(0), Term::constant(1));
  } else if (std::holds_alternative<op::Add>(instr)) {
    b[Atom::stack_slot(0)] = Term::plus(slot(0), slot(1));
    shift_slots(b, 1, top, +1);
  } else if (std::holds_alternative<op::Pop>(instr)) {
    shift_slots(b, 0, top, +1);
  } else if (auto* ld = std::get_if<op::Load>(&instr)) {
    b[Atom::stack_slot(0)] = Term::var(ld->var);
    shift_slots(b, 1, top, -1);
  } else if (auto* st = std::get_if<op::Store>(&instr)) {
    b[Atom::var(st->var)] = slot(0);
    shift_slots(b, 0, top, +1);
  } else if (std::holds_alternative<op::Goto>(instr)) {
    return q;
  } else {
    unsupported(instr);
  }
  return substitute(q, b);
}

int segment_depth(const MethodMap& m, Line from, Line to, int entry_depth) {
  int depth = entry_depth;
  for (Line line : segment_lines(m, from, to)) {
    const Instruction& instr = m.at(line);
    check_depth(instr, depth, line);
    depth += shape(instr).second;
  }
  return depth;
}

Formula wp_segment(const MethodMap& m, Line from, Line to, const Formula& q,
                   std::optional<int> entry_depth) {
  if (entry_depth) segment_depth(m, from, to, *entry_depth);
  std::vector<Line> lines = segment_lines(m, from, to);
  Formula out = q;
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) out = wp_instr(m.at(*it), out);
  return out;
}

// ---------------------------------------------------------------------------
// Strongest postcondition

void FreshSupply::observe(const Formula& f) {
  for (const Atom& a : free_atoms(f)) {
    if (!a.is_fresh()) continue;
    std::string_view suffix = std::string_view(a.name).substr(a.name.rfind('\'') + 1);
    if (suffix.empty() || suffix.find_first_not_of("0123456789") != std::string_view::npos) continue;
    if (suffix.size() > 9) continue;
    counter_ = std::max(counter_, std::stoi(std::string(suffix)));
  }
}

std::string FreshSupply::make(const std::string& base) {
  std::string stem = base.substr(0, base.find('\''));
  return stem + "'" + std::to_string(++counter_);
}

SpResult sp_instr(const Formula& p, const Instruction& instr, int depth, FreshSupply& fresh) {
  if (!in_fragment(instr)) unsupported(instr);
  if (max_slot(p) >= depth) {
    throw Error(ErrorKind::StackShapeError,
                "assertion mentions s" + std::to_string(max_slot(p)) + " but the stack holds " +
                    std::to_string(depth));
  }
  check_depth(instr, depth, std::nullopt);
  const int top = depth - 1;
  SpResult r;
  r.depth = depth + shape(instr).second;
  Bindings b;
  auto witness = [&](const Atom& of, const std::string& base) {
    std::string name = fresh.make(base);
    r.fresh.push_back({name, 0, of});
    return Term::var(name);
  };

  if (std::holds_alternative<op::Inc>(instr)) {
    Term t = witness(Atom::stack_slot(0), "t");
    b[Atom::stack_slot(0)] = t;
    r.post = Formula::conj(substitute(p, b),
                           Formula::cmp(slot(0), CmpOp::Eq, Term::plus(t, Term::constant(1))));
  } else if (std::holds_alternative<op::Add>(instr)) {
    Term t0 = witness(Atom::stack_slot(0), "t");
    Term t1 = witness(Atom::stack_slot(1), "t");
    b[Atom::stack_slot(0)] = t0;
    b[Atom::stack_slot(1)] = t1;
    shift_slots(b, 2, top, -1);
    r.post = Formula::conj(substitute(p, b), Formula::cmp(slot(0), CmpOp::Eq, Term::plus(t1, t0)));
  } else if (std::holds_alternative<op::Pop>(instr)) {
    b[Atom::stack_slot(0)] = witness(Atom::stack_slot(0), "t");
    shift_slots(b, 1, top, -1);
    r.post = substitute(p, b);
  } else if (auto* ld = std::get_if<op::Load>(&instr)) {
    shift_slots(b, 0, top, +1);
    r.post = Formula::conj(substitute(p, b), Formula::cmp(slot(0), CmpOp::Eq, Term::var(ld->var)));
  } else if (auto* st = std::get_if<op::Store>(&instr)) {
    b[Atom::var(st->var)] = witness(Atom::var(st->var), st->var);
    b[Atom::stack_slot(0)] = Term::var(st->var);
    shift_slots(b, 1, top, -1);
    r.post = substitute(p, b);
  } else {
    r.post = p;  // fall-through goto
  }
  return r;
}

Formula sp_instr(const Formula& p, const Instruction& instr) {
  FreshSupply fresh(p);
  return sp_instr(p, instr, max_slot(p) + 1, fresh).post;
}

SpResult sp_segment_ex(const Formula& p, const MethodMap& m, Line from, Line to,
                       const SpOptions& options) {
  FreshSupply local(p);
  FreshSupply& fresh = options.fresh ? *options.fresh : local;
  if (options.fresh) fresh.observe(p);
  SpResult out{p, options.entry_depth.value_or(max_slot(p) + 1), {}};
  std::size_t step = 0;
  for (Line line : segment_lines(m, from, to)) {
    const Instruction& instr = m.at(line);
    try {
      check_depth(instr, out.depth, line);
      SpResult r = sp_instr(out.post, instr, out.depth, fresh);
      for (auto& v : r.fresh) {
        v.step = step;
        out.fresh.push_back(std::move(v));
      }
      out.post = std::move(r.post);
      out.depth = r.depth;
    } catch (const Error& e) {
      if (e.line()) throw;
      throw e.with_line(line);
    }
    ++step;
  }
  return out;
}

Formula sp_segment(const Formula& p, const MethodMap& m, Line from, Line to,
                   const SpOptions& options) {
  return sp_segment_ex(p, m, from, to, options).post;
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

// Linear combination sum(c_a * a) + k.
struct Lin {
  std::map<Atom, std::int64_t> coeff;
  std::int64_t k = 0;

  void add(const Lin& o, std::int64_t scale = 1) {
    for (const auto& [a, c] : o.coeff) coeff[a] += scale * c;
    k += scale * o.k;
    std::erase_if(coeff, [](const auto& e) { return e.second == 0; });
  }
  std::int64_t of(const Atom& a) const {
    auto it = coeff.find(a);
    return it == coeff.end() ? 0 : it->second;
  }
};

std::optional<Lin> linear(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Const: return Lin{{}, t.value};
    case Term::Kind::Var:
    case Term::Kind::Slot: return Lin{{{*t.as_atom(), 1}}, 0};
    case Term::Kind::Plus: {
      auto a = linear(t.args[0]);
      auto b = linear(t.args[1]);
      if (!a || !b) return std::nullopt;
      a->add(*b);
      return a;
    }
    case Term::Kind::FieldOf: return std::nullopt;
  }
  return std::nullopt;
}

// Sum of atoms with positive coefficients plus a nonnegative constant.
Term positive_term(const std::map<Atom, std::int64_t>& atoms, std::int64_t k) {
  std::optional<Term> out;
  auto append = [&](Term t) { out = out ? Term::plus(std::move(*out), std::move(t)) : std::move(t); };
  for (const auto& [a, c] : atoms) {
    for (std::int64_t n = 0; n < c; ++n) append(Term::atom(a));
  }
  if (k != 0 || !out) append(Term::constant(k));
  return *out;
}

CmpOp mirror(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Gt;
    case CmpOp::Le: return CmpOp::Ge;
    case CmpOp::Gt: return CmpOp::Lt;
    case CmpOp::Ge: return CmpOp::Le;
    default: return op;
  }
}

CmpOp negation(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
  }
  return op;
}

bool holds(std::int64_t a, CmpOp op, std::int64_t b) {
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

// `d op 0` written with atoms on both sides as needed and no negative
// coefficients; the constant goes right unless that would make it negative
// next to atoms.
struct Placed {
  Term lhs, rhs;
  bool constant_left;
  std::int64_t constant;
};

Placed place(const Lin& d) {
  std::map<Atom, std::int64_t> pos, neg;
  for (const auto& [a, c] : d.coeff) (c > 0 ? pos : neg)[a] = c > 0 ? c : -c;
  std::int64_t kk = -d.k;  // pos op neg + kk
  if (kk >= 0 || neg.empty()) {
    if (neg.empty()) return {positive_term(pos, 0), Term::constant(kk), false, kk};
    return {positive_term(pos, 0), positive_term(neg, kk), false, kk};
  }
  return {positive_term(pos, -kk), positive_term(neg, 0), true, -kk};
}

Formula from_linear(Lin d, CmpOp op) {
  if (d.coeff.empty()) return holds(d.k, op, 0) ? Formula::truth() : Formula::falsity();
  if (op == CmpOp::Eq || op == CmpOp::Ne) {
    Lin flipped;
    flipped.add(d, -1);
    Placed a = place(d);
    Placed b = place(flipped);
    // Prefer the constant on the right, then a positive leading atom.
    bool use_b = false;
    if (a.constant_left != b.constant_left) {
      use_b = a.constant_left;
    } else {
      use_b = d.coeff.begin()->second < 0;
    }
    const Placed& p = use_b ? b : a;
    return Formula::cmp(p.lhs, op, p.rhs);
  }
  bool any_pos = std::any_of(d.coeff.begin(), d.coeff.end(), [](const auto& e) { return e.second > 0; });
  if (!any_pos) {
    Lin flipped;
    flipped.add(d, -1);
    d = flipped;
    op = mirror(op);
  }
  Placed p = place(d);
  return Formula::cmp(p.lhs, op, p.rhs);
}

Term fold_term(const Term& t) {
  if (auto l = linear(t)) {
    if (l->coeff.empty()) return Term::constant(l->k);
    bool all_pos = std::all_of(l->coeff.begin(), l->coeff.end(), [](const auto& e) { return e.second > 0; });
    if (all_pos && l->k >= 0) return positive_term(l->coeff, l->k);
    return t;
  }
  Term out = t;
  for (auto& a : out.args) a = fold_term(a);
  return out;
}

Formula normalize_cmp(const Term& lhs, CmpOp op, const Term& rhs) {
  auto l = linear(lhs);
  auto r = linear(rhs);
  if (!l || !r) return Formula::cmp(fold_term(lhs), op, fold_term(rhs));
  l->add(*r, -1);
  return from_linear(*l, op);
}

void flatten(Formula::Kind kind, Formula f, std::vector<Formula>& out) {
  if (f.kind == kind) {
    for (auto& g : f.args) flatten(kind, std::move(g), out);
  } else {
    out.push_back(std::move(f));
  }
}

Formula rebuild(Formula::Kind kind, const std::vector<Formula>& parts) {
  if (parts.empty()) return kind == Formula::Kind::And ? Formula::truth() : Formula::falsity();
  Formula out = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    out = kind == Formula::Kind::And ? Formula::conj(std::move(out), parts[k])
                                     : Formula::disj(std::move(out), parts[k]);
  }
  return out;
}

Formula basic(const Formula& f);

Formula junction(Formula::Kind kind, const Formula& f) {
  const bool is_and = kind == Formula::Kind::And;
  std::vector<Formula> raw;
  for (const auto& g : f.args) flatten(kind, basic(g), raw);
  std::vector<Formula> parts;
  for (auto& g : raw) {
    if (g.kind == (is_and ? Formula::Kind::True : Formula::Kind::False)) continue;
    if (g.kind == (is_and ? Formula::Kind::False : Formula::Kind::True)) return g;
    if (std::find(parts.begin(), parts.end(), g) == parts.end()) parts.push_back(std::move(g));
  }
  for (const auto& g : parts) {
    if (g.kind == Formula::Kind::Not &&
        std::find(parts.begin(), parts.end(), g.args[0]) != parts.end()) {
      return is_and ? Formula::falsity() : Formula::truth();
    }
  }
  return rebuild(kind, parts);
}

Formula negated(const Formula& s) {
  switch (s.kind) {
    case Formula::Kind::True: return Formula::falsity();
    case Formula::Kind::False: return Formula::truth();
    case Formula::Kind::Cmp: return normalize_cmp(s.terms[0], negation(s.op), s.terms[1]);
    case Formula::Kind::Not: return s.args[0];
    default: return Formula::negate(s);
  }
}

// Structural simplification; leaves fresh atoms alone.
Formula basic(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::True:
    case Formula::Kind::False: return f;
    case Formula::Kind::Cmp: return normalize_cmp(f.terms[0], f.op, f.terms[1]);
    case Formula::Kind::Not: return negated(basic(f.args[0]));
    case Formula::Kind::And:
    case Formula::Kind::Or: return junction(f.kind, f);
    case Formula::Kind::Implies: {
      Formula a = basic(f.args[0]);
      Formula b = basic(f.args[1]);
      if (a.kind == Formula::Kind::True) return b;
      if (a.kind == Formula::Kind::False || b.kind == Formula::Kind::True || a == b) {
        return Formula::truth();
      }
      if (b.kind == Formula::Kind::False) return negated(a);
      return Formula::implies(std::move(a), std::move(b));
    }
  }
  return f;
}

bool mentions(const Formula& f, const Atom& a) { return free_atoms(f).count(a) != 0; }

// Replaces atom `a` by the linear expression `e` at every comparison.
// Fails (nullopt) when `a` occurs under a non-linear term.
std::optional<Formula> replace_linear(const Formula& f, const Atom& a, const Lin& e) {
  if (f.kind == Formula::Kind::Cmp) {
    if (!mentions(f, a)) return f;
    auto l = linear(f.terms[0]);
    auto r = linear(f.terms[1]);
    if (!l || !r) return std::nullopt;
    l->add(*r, -1);
    std::int64_t c = l->of(a);
    l->coeff.erase(a);
    l->add(e, c);
    return from_linear(*l, f.op);
  }
  Formula out = f;
  for (auto& g : out.args) {
    auto r = replace_linear(g, a, e);
    if (!r) return std::nullopt;
    g = std::move(*r);
  }
  return out;
}

bool is_linear_cmp(const Formula& f, Lin* diff = nullptr) {
  if (f.kind != Formula::Kind::Cmp) return false;
  auto l = linear(f.terms[0]);
  auto r = linear(f.terms[1]);
  if (!l || !r) return false;
  l->add(*r, -1);
  if (diff) *diff = *l;
  return true;
}

// One elimination pass over the conjuncts; returns true when something changed.
bool eliminate_once(std::vector<Formula>& parts, const std::set<Atom>& keep) {
  // Constant definitions a = c propagate into the other conjuncts.
  for (std::size_t j = 0; j < parts.size(); ++j) {
    Lin d;
    if (!is_linear_cmp(parts[j], &d) || parts[j].op != CmpOp::Eq || d.coeff.size() != 1) continue;
    auto [a, c] = *d.coeff.begin();
    if (c != 1 && c != -1) continue;
    Lin value{{}, c == 1 ? -d.k : d.k};
    bool changed = false;
    for (std::size_t o = 0; o < parts.size(); ++o) {
      if (o == j || !mentions(parts[o], a)) continue;
      auto r = replace_linear(parts[o], a, value);
      if (!r) continue;
      parts[o] = basic(*r);
      changed = true;
    }
    if (a.is_fresh() && !keep.count(a)) {
      parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(j));
      return true;
    }
    if (changed) return true;
  }
  // Fresh atoms defined by an equation with unit coefficient.
  for (std::size_t j = 0; j < parts.size(); ++j) {
    Lin d;
    if (!is_linear_cmp(parts[j], &d) || parts[j].op != CmpOp::Eq) continue;
    for (const auto& [a, c] : d.coeff) {
      if (!a.is_fresh() || keep.count(a) || (c != 1 && c != -1)) continue;
      // a = -(d - c*a) / c
      Lin rest = d;
      rest.coeff.erase(a);
      Lin value;
      value.add(rest, c == 1 ? -1 : 1);
      std::vector<Formula> next;
      bool ok = true;
      for (std::size_t o = 0; o < parts.size() && ok; ++o) {
        if (o == j) continue;
        auto r = replace_linear(parts[o], a, value);
        if (!r) ok = false;
        else next.push_back(basic(*r));
      }
      if (!ok) continue;
      parts = std::move(next);
      return true;
    }
  }
  // A fresh atom confined to one inequality with unit coefficient can always
  // be satisfied over the integers.
  for (std::size_t j = 0; j < parts.size(); ++j) {
    Lin d;
    if (!is_linear_cmp(parts[j], &d) || parts[j].op == CmpOp::Eq) continue;
    for (const auto& [a, c] : d.coeff) {
      if (!a.is_fresh() || keep.count(a) || (c != 1 && c != -1)) continue;
      bool elsewhere = false;
      for (std::size_t o = 0; o < parts.size(); ++o) {
        if (o != j && mentions(parts[o], a)) elsewhere = true;
      }
      if (elsewhere) continue;
      parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(j));
      return true;
    }
  }
  return false;
}

Formula eliminate(const Formula& f, const std::set<Atom>& keep) {
  if (f.kind == Formula::Kind::Or) {
    std::vector<Formula> parts;
    flatten(Formula::Kind::Or, f, parts);
    for (auto& g : parts) g = eliminate(g, keep);
    return basic(rebuild(Formula::Kind::Or, parts));
  }
  std::vector<Formula> parts;
  flatten(Formula::Kind::And, f, parts);
  for (int guard = 0; guard < 256 && eliminate_once(parts, keep); ++guard) {
    Formula joined = basic(rebuild(Formula::Kind::And, parts));
    if (joined.kind == Formula::Kind::False || joined.kind == Formula::Kind::True) return joined;
    parts.clear();
    flatten(Formula::Kind::And, joined, parts);
  }
  Formula out = basic(rebuild(Formula::Kind::And, parts));
  // A fresh atom that vanished from every conjunct needs no witness; a
  // top-level conjunct that is the lone home of a fresh atom under `!` or
  // `||` is kept as is.
  return out;
}

Formula simplify_keeping(const Formula& f, const std::set<Atom>& keep) {
  return eliminate(basic(f), keep);
}

}  // namespace

Formula simplify(const Formula& f) { return simplify_keeping(f, {}); }

// ---------------------------------------------------------------------------
// Bounded checking

namespace {

// Formula compiled against a fixed atom numbering.
class Compiled {
 public:
  Compiled(const Formula& f, const std::map<Atom, int>& index) : index_(index) { root_ = formula(f); }

  bool eval(const std::vector<std::int64_t>& env) const { return eval_f(root_, env); }

 private:
  struct TNode {
    Term::Kind kind;
    std::int64_t value;  // Const value or atom index
    int a = -1, b = -1;
  };
  struct FNode {
    Formula::Kind kind;
    CmpOp op;
    int a = -1, b = -1;  // formula children, or term roots for Cmp
  };

  int term(const Term& t) {
    TNode n{t.kind, 0};
    switch (t.kind) {
      case Term::Kind::Const: n.value = t.value; break;
      case Term::Kind::Var:
      case Term::Kind::Slot: n.value = index_.at(*t.as_atom()); break;
      case Term::Kind::Plus:
        n.a = term(t.args[0]);
        n.b = term(t.args[1]);
        break;
      case Term::Kind::FieldOf:
        throw Error(ErrorKind::UnsupportedInstruction, "field terms cannot be checked by enumeration");
    }
    terms_.push_back(n);
    return static_cast<int>(terms_.size() - 1);
  }

  int formula(const Formula& f) {
    FNode n{f.kind, f.op};
    if (f.kind == Formula::Kind::Cmp) {
      n.a = term(f.terms[0]);
      n.b = term(f.terms[1]);
    } else if (!f.args.empty()) {
      n.a = formula(f.args[0]);
      if (f.args.size() > 1) n.b = formula(f.args[1]);
    }
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size() - 1);
  }

  std::int64_t eval_t(int i, const std::vector<std::int64_t>& env) const {
    const TNode& n = terms_[static_cast<std::size_t>(i)];
    switch (n.kind) {
      case Term::Kind::Const: return n.value;
      case Term::Kind::Plus: return eval_t(n.a, env) + eval_t(n.b, env);
      default: return env[static_cast<std::size_t>(n.value)];
    }
  }

  bool eval_f(int i, const std::vector<std::int64_t>& env) const {
    const FNode& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.kind) {
      case Formula::Kind::True: return true;
      case Formula::Kind::False: return false;
      case Formula::Kind::Cmp: return holds(eval_t(n.a, env), n.op, eval_t(n.b, env));
      case Formula::Kind::Not: return !eval_f(n.a, env);
      case Formula::Kind::And: return eval_f(n.a, env) && eval_f(n.b, env);
      case Formula::Kind::Or: return eval_f(n.a, env) || eval_f(n.b, env);
      case Formula::Kind::Implies: return !eval_f(n.a, env) || eval_f(n.b, env);
    }
    return false;
  }

  const std::map<Atom, int>& index_;
  std::vector<TNode> terms_;
  std::vector<FNode> nodes_;
  int root_ = -1;
};

std::uint64_t checked_pow(std::uint64_t base, std::size_t exp, std::uint64_t cap) {
  std::uint64_t out = 1;
  for (std::size_t k = 0; k < exp; ++k) {
    if (out > cap / base) return cap + 1;
    out *= base;
  }
  return out;
}

// Odometer over `count` positions, each in [lo, hi]. Returns false when done.
bool advance(std::vector<std::int64_t>& env, std::size_t first, std::size_t count, std::int64_t lo,
             std::int64_t hi) {
  for (std::size_t k = first + count; k-- > first;) {
    if (env[k] < hi) {
      ++env[k];
      return true;
    }
    env[k] = lo;
  }
  return false;
}

}  // namespace

ImplicationResult check_bounded_implication(const Formula& h0, const Formula& c0,
                                            const BoundedOptions& options) {
  if (options.bound < 1) throw Error(ErrorKind::AtomBudgetExceeded, "bound must be at least 1");
  std::set<Atom> shared;
  {
    std::set<Atom> ha = free_atoms(h0);
    for (const Atom& a : free_atoms(c0)) {
      if (a.is_fresh() && ha.count(a)) shared.insert(a);
    }
  }
  const Formula h = simplify_keeping(h0, shared);
  const Formula c = simplify_keeping(c0, shared);
  ImplicationResult result;
  if (h.kind == Formula::Kind::False || c.kind == Formula::Kind::True || h == c) {
    result.valid = true;
    return result;
  }

  std::set<Atom> hyp = free_atoms(h);
  std::vector<Atom> universal(hyp.begin(), hyp.end());
  std::vector<Atom> existential;
  for (const Atom& a : free_atoms(c)) {
    if (hyp.count(a)) continue;
    if (a.is_fresh() && !shared.count(a)) existential.push_back(a);
    else universal.push_back(a);
  }
  std::sort(universal.begin(), universal.end());

  const std::size_t atoms = universal.size() + existential.size();
  if (atoms > static_cast<std::size_t>(options.atom_budget)) {
    throw Error(ErrorKind::AtomBudgetExceeded, std::to_string(atoms) + " atoms exceed the budget of " +
                                                   std::to_string(options.atom_budget));
  }
  const std::int64_t lo = -options.bound;
  const std::int64_t hi = options.bound - 1;
  const std::int64_t wlo = lo * kWitnessScale;
  const std::int64_t whi = (hi + 1) * kWitnessScale - 1;
  const std::uint64_t cap = options.max_assignments;
  std::uint64_t total = checked_pow(static_cast<std::uint64_t>(hi - lo + 1), universal.size(), cap);
  if (total <= cap) {
    total *= checked_pow(static_cast<std::uint64_t>(whi - wlo + 1), existential.size(), cap);
  }
  if (total > cap) {
    throw Error(ErrorKind::AtomBudgetExceeded,
                "enumeration needs more than " + std::to_string(cap) + " assignments");
  }

  std::map<Atom, int> index;
  for (const Atom& a : universal) index.emplace(a, static_cast<int>(index.size()));
  for (const Atom& a : existential) index.emplace(a, static_cast<int>(index.size()));
  Compiled ch(h, index);
  Compiled cc(c, index);

  const std::size_t nu = universal.size();
  const std::size_t ne = existential.size();
  std::vector<std::int64_t> env(nu + ne, lo);
  do {
    if (!ch.eval(env)) continue;
    bool ok = false;
    for (std::size_t k = nu; k < nu + ne; ++k) env[k] = wlo;
    do {
      if (cc.eval(env)) {
        ok = true;
        break;
      }
    } while (advance(env, nu, ne, wlo, whi));
    if (!ok) {
      for (std::size_t k = 0; k < nu; ++k) result.counterexample[universal[k]] = env[k];
      return result;
    }
  } while (advance(env, 0, nu, lo, hi));
  result.valid = true;
  return result;
}

bool implies_bounded(const Formula& h, const Formula& c, const BoundedOptions& options) {
  return check_bounded_implication(h, c, options).valid;
}

bool equivalent(const Formula& f, const Formula& g, const BoundedOptions& options) {
  if (f == g) return true;
  return implies_bounded(f, g, options) && implies_bounded(g, f, options);
}

bool equivalent(const Formula& f, const Formula& g, int bound) {
  BoundedOptions options;
  options.bound = bound;
  return equivalent(f, g, options);
}

}  // namespace patchverify
