#include "patchverify/triple.hpp"

#include <algorithm>
#include <sstream>

#include "patchverify/error.hpp"

namespace patchverify {

std::string to_string(TripleKind kind) {
  switch (kind) {
    case TripleKind::Initial: return "initial";
    case TripleKind::Target: return "target";
    case TripleKind::Calculated: return "calculated";
    case TripleKind::Intermediate: return "intermediate";
  }
  return "?";
}

std::string to_string(GoalStatus status) {
  switch (status) {
    case GoalStatus::Proved: return "Proved";
    case GoalStatus::Refuted: return "Refuted";
    case GoalStatus::Unknown: return "Unknown";
  }
  return "?";
}

TransformState start_transform(const Formula& p1, const Formula& q1, const MethodMap& m1) {
  return {p1, q1, Triple{p1, m1, q1, TripleKind::Initial}, {}};
}

void transform_step(TransformState& state, const UpdateInstr& item, std::size_t index,
                    const TransformOptions& options) {
  if (item.kind != UpdateInstr::Kind::Add) {
    throw Error(ErrorKind::DeletionNotSupported,
                "'" + to_string(item) + "': only insertions can be carried through a triple", item.at);
  }
  const MethodMap& m1 = state.current.method;
  const Line n = m1.last_line();
  const Line i = item.at;
  const Formula& p = state.anchor_pre;
  const Formula& q = state.anchor_post;
  const auto step_error = [&](const std::string& detail) {
    return Error(ErrorKind::TransformException, "step " + std::to_string(index) + ": " + detail, i);
  };

  MethodMap m2 = apply_add(m1, *item.instr, i, options.faults);
  const Line n2 = m2.last_line();

  // Backward chain.
  const int depth_at_i = segment_depth(m1, m1.first_line(), i - 1, 0);
  Formula wp1 = wp_segment(m1, i, n, q, depth_at_i);
  Formula shifted = wp_segment(m2, i + 1, n2, q);
  if (!equivalent(wp1, shifted, options.bounded)) {
    throw step_error("wp of the shifted suffix differs from wp of the original suffix (" +
                     to_string(simplify(wp1)) + " vs " + to_string(simplify(shifted)) + ")");
  }
  Formula p2 = simplify(wp_segment(m2, m2.first_line(), i, wp1, 0));

  // Forward chain.
  FreshSupply fresh(p);
  SpResult sp1 = sp_segment_ex(p, m1, m1.first_line(), i - 1, {0, &fresh});
  SpResult again = sp_segment_ex(p, m2, m2.first_line(), i - 1, {0, nullptr});
  if (!equivalent(sp1.post, again.post, options.bounded)) {
    throw step_error("sp of the untouched prefix changed (" + to_string(simplify(sp1.post)) + " vs " +
                     to_string(simplify(again.post)) + ")");
  }
  Formula sp1_post = simplify(sp1.post);
  Formula q2 = simplify(sp_segment(sp1_post, m2, i, n2, {sp1.depth, &fresh}));

  state.steps.push_back({index, i, to_string(*item.instr), simplify(wp1), sp1_post, p2, q2});
  state.current = Triple{std::move(p2), std::move(m2), std::move(q2), TripleKind::Intermediate};
}

TransformState transform_patch(const Formula& p1, const Formula& q1, const MethodMap& m1,
                               const Patch& patch, const TransformOptions& options) {
  TransformState state = start_transform(p1, q1, m1);
  for (std::size_t k = 0; k < patch.items.size(); ++k) {
    try {
      transform_step(state, patch.items[k], k, options);
    } catch (const Error& e) {
      throw e.item() ? e : e.with_item(k);
    }
  }
  if (!patch.items.empty()) state.current.kind = TripleKind::Calculated;
  return state;
}

Triple transform_triple(const Formula& p1, const Formula& q1, const MethodMap& m1, const Patch& patch,
                        const TransformOptions& options) {
  return transform_patch(p1, q1, m1, patch, options).current;
}

ObligationSet implication_obligations(const Triple& calculated, const Triple& target) {
  return {{{"post", calculated.post, target.post}, {"pre", target.pre, calculated.pre}}};
}

namespace {

GoalVerdict verdict_of(const Obligation& goal, const ImplicationResult& r) {
  GoalVerdict v;
  v.name = goal.name;
  v.status = r.valid ? GoalStatus::Proved : GoalStatus::Refuted;
  v.counterexample = r.counterexample;
  return v;
}

}  // namespace

GoalVerdict decide(const Obligation& goal, const BoundedOptions& options) {
  try {
    return verdict_of(goal, check_bounded_implication(goal.hypothesis, goal.conclusion, options));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::AtomBudgetExceeded && e.kind() != ErrorKind::UnsupportedInstruction) throw;
    GoalVerdict v;
    v.name = goal.name;
    v.reason = e.what();
    return v;
  }
}

std::vector<GoalVerdict> decide_all(const ObligationSet& set, const BoundedOptions& options) {
  std::vector<GoalVerdict> out;
  for (const auto& goal : set.goals) out.push_back(decide(goal, options));
  return out;
}

std::vector<GoalVerdict> check_implication(const Triple& calculated, const Triple& target,
                                           const BoundedOptions& options) {
  if (instruction_sequence(canonicalize(calculated.method)) !=
      instruction_sequence(canonicalize(target.method))) {
    throw Error(ErrorKind::MethodMismatch,
                "the calculated and target triples are about different code");
  }
  std::vector<GoalVerdict> out;
  for (const auto& goal : implication_obligations(calculated, target).goals) {
    out.push_back(verdict_of(goal, check_bounded_implication(goal.hypothesis, goal.conclusion, options)));
  }
  return out;
}

ChainReport check_chains(const TransformState& state, const BoundedOptions& options) {
  const Triple& t = state.current;
  const MethodMap& m = t.method;
  ChainReport r;
  r.backward = decide({"backward", t.pre, wp_segment(m, m.first_line(), m.last_line(), state.anchor_post, 0)},
                      options);
  r.forward = decide({"forward", sp_segment(state.anchor_pre, m, m.first_line(), m.last_line(), {0, nullptr}),
                      t.post},
                     options);
  r.gap = decide({"gap", t.pre, wp_segment(m, m.first_line(), m.last_line(), t.post, 0)}, options);
  return r;
}

// ---------------------------------------------------------------------------
// SMT-LIB export

namespace {

bool reserved_symbol(const std::string& s) {
  static const std::set<std::string> words = {
      "and", "or", "not", "xor", "ite", "distinct", "let", "forall", "exists", "match", "par", "as",
      "true", "false", "assert", "declare-const", "check-sat", "push", "pop", "exit", "Int", "Bool",
      "BINARY", "DECIMAL", "HEXADECIMAL", "NUMERAL", "STRING", "_", "!"};
  return words.count(s) != 0;
}

std::string symbol(const Atom& a) {
  std::string s = a.to_string();
  bool simple = !reserved_symbol(s) &&
                std::all_of(s.begin(), s.end(), [](char c) {
                  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                });
  return simple ? s : "|" + s + "|";
}

std::string smt(const Term& t) {
  switch (t.kind) {
    case Term::Kind::Const:
      return t.value < 0 ? "(- " + std::to_string(-t.value) + ")" : std::to_string(t.value);
    case Term::Kind::Var:
    case Term::Kind::Slot: return symbol(*t.as_atom());
    case Term::Kind::Plus: return "(+ " + smt(t.args[0]) + " " + smt(t.args[1]) + ")";
    case Term::Kind::FieldOf:
      throw Error(ErrorKind::UnsupportedInstruction, "field terms have no SMT-LIB encoding here");
  }
  return "?";
}

std::string smt(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::True: return "true";
    case Formula::Kind::False: return "false";
    case Formula::Kind::Cmp: {
      std::string op = f.op == CmpOp::Ne ? "distinct" : to_string(f.op);
      return "(" + op + " " + smt(f.terms[0]) + " " + smt(f.terms[1]) + ")";
    }
    case Formula::Kind::Not: return "(not " + smt(f.args[0]) + ")";
    case Formula::Kind::And: return "(and " + smt(f.args[0]) + " " + smt(f.args[1]) + ")";
    case Formula::Kind::Or: return "(or " + smt(f.args[0]) + " " + smt(f.args[1]) + ")";
    case Formula::Kind::Implies: return "(=> " + smt(f.args[0]) + " " + smt(f.args[1]) + ")";
  }
  return "?";
}

// Fresh atoms of the conclusion that the hypothesis does not mention.
std::vector<Atom> witnesses(const Obligation& g) {
  std::set<Atom> hyp = free_atoms(g.hypothesis);
  std::vector<Atom> out;
  for (const Atom& a : free_atoms(g.conclusion)) {
    if (a.is_fresh() && !hyp.count(a)) out.push_back(a);
  }
  return out;
}

}  // namespace

std::string emit_obligations(const ObligationSet& set) {
  std::set<Atom> declared;
  bool quantified = false;
  for (const auto& g : set.goals) {
    auto w = witnesses(g);
    quantified = quantified || !w.empty();
    for (const Atom& a : free_atoms(g.hypothesis)) declared.insert(a);
    for (const Atom& a : free_atoms(g.conclusion)) {
      if (std::find(w.begin(), w.end(), a) == w.end()) declared.insert(a);
    }
  }
  std::ostringstream out;
  out << "(set-logic " << (quantified ? "LIA" : "QF_LIA") << ")\n";
  for (const Atom& a : declared) out << "(declare-const " << symbol(a) << " Int)\n";
  for (const auto& g : set.goals) {
    std::string conclusion = smt(g.conclusion);
    auto w = witnesses(g);
    if (!w.empty()) {
      std::string binders;
      for (const Atom& a : w) binders += (binders.empty() ? "(" : " (") + symbol(a) + " Int)";
      conclusion = "(exists (" + binders + ") " + conclusion + ")";
    }
    out << "; goal " << g.name << ": " << to_string(g.hypothesis) << " => " << to_string(g.conclusion)
        << "\n";
    out << "(push 1)\n";
    out << "(assert (not (=> " << smt(g.hypothesis) << " " << conclusion << ")))\n";
    out << "(check-sat)\n";
    out << "(pop 1)\n";
  }
  out << "(exit)\n";
  return out.str();
}

}  // namespace patchverify
