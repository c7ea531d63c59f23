#include "patchverify/verifier.hpp"

#include <algorithm>
#include <functional>

namespace patchverify {

namespace {

std::string type_list(const std::vector<TypeDesc>& types) {
  std::string out = "[";
  for (std::size_t k = 0; k < types.size(); ++k) {
    if (k) out += ",";
    out += types[k].to_string();
  }
  return out + "]";
}

std::string line_str(Line l) { return std::to_string(l); }

Error mismatch(Line line, const std::string& expected, const TypeDesc& found) {
  return Error(ErrorKind::TypeMismatch, "expected " + expected + " but found " + found.to_string(), line);
}

void require_depth(const TypeState& st, std::size_t n, Line line, std::string_view what) {
  if (st.stack.size() < n) {
    throw Error(ErrorKind::StackUnderflow,
                std::string(what) + " needs " + std::to_string(n) + " operand(s), stack has " +
                    std::to_string(st.stack.size()),
                line);
  }
}

void require_int(const TypeDesc& t, Line line) {
  if (!t.is_int()) throw mismatch(line, "int", t);
}

void require_object(const TypeDesc& t, const std::string& cls, const ClassHierarchy& classes, Line line) {
  if (!t.is_class() || !classes.is_subtype(t, TypeDesc::class_type(cls))) throw mismatch(line, cls, t);
}

void require_declared(const std::string& var, const std::set<std::string>* declared, Line line) {
  if (declared && !declared->count(var)) {
    throw Error(ErrorKind::UnknownVariable, "'" + var + "' is not a local of this method", line);
  }
}

void drop(TypeState& st, std::size_t n) {
  st.stack.erase(st.stack.begin(), st.stack.begin() + static_cast<std::ptrdiff_t>(n));
  st.depth -= static_cast<int>(n);
}

void push(TypeState& st, TypeDesc t) {
  st.stack.insert(st.stack.begin(), std::move(t));
  st.depth += 1;
}

void check_call_operands(const op::InvokeVirtual& call, const TypeState& st, const ClassHierarchy& classes,
                         Line line) {
  const std::size_t n = call.sig.args.size();
  require_depth(st, n + 1, line, "invokevirtual");
  // The last argument is on top.
  for (std::size_t k = 0; k < n; ++k) {
    const TypeDesc& declared = call.sig.args[n - 1 - k];
    if (!classes.is_subtype(st.stack[k], declared)) throw mismatch(line, declared.to_string(), st.stack[k]);
  }
  require_object(st.stack[n], call.cls, classes, line);
}

void check_putfield_operands(const op::PutField& put, const TypeState& st, const ClassHierarchy& classes,
                             Line line) {
  require_depth(st, 2, line, "putfield");
  if (!classes.is_subtype(st.stack[0], put.type)) throw mismatch(line, put.type.to_string(), st.stack[0]);
  require_object(st.stack[1], put.cls, classes, line);
}

/// Forward worklist over line numbers, lowest line first.
class Solver {
 public:
  Solver(const MethodMap& m, const ClassHierarchy& classes, StateTable& states,
         std::optional<TypeState>& exit)
      : m_(m), classes_(classes), states_(states), exit_(exit) {}

  /// Replaces the ordinary transfer at one line (the edit site).
  void override_at(Line line, std::function<TypeState(const TypeState&)> fn) {
    override_line_ = line;
    override_ = std::move(fn);
  }

  void join(Line target, const TypeState& st) {
    if (target == kHalt) {
      exit_ = exit_ ? merge(*exit_, st, classes_, kHalt) : st;
      return;
    }
    auto& slot = states_[target];
    if (!slot) {
      slot = st;
      work_.insert(target);
      return;
    }
    TypeState merged = merge(*slot, st, classes_, target);
    if (merged != *slot) {
      slot = std::move(merged);
      work_.insert(target);
    }
  }

  void schedule(Line line) { work_.insert(line); }

  void run() {
    while (!work_.empty()) {
      Line line = *work_.begin();
      work_.erase(work_.begin());
      const TypeState& in = *states_.at(line);
      TypeState out = (override_ && line == override_line_)
                          ? override_(in)
                          : transfer_instr(m_.at(line), in, classes_, line, &m_.vars());
      for (Line succ : successors(m_, line)) join(succ, out);
    }
  }

 private:
  const MethodMap& m_;
  const ClassHierarchy& classes_;
  StateTable& states_;
  std::optional<TypeState>& exit_;
  std::set<Line> work_;
  Line override_line_ = kHalt;
  std::function<TypeState(const TypeState&)> override_;
};

std::set<Line> reachable_from(const MethodMap& m, const std::set<Line>& roots) {
  std::set<Line> seen;
  std::vector<Line> todo;
  for (Line r : roots) {
    if (m.contains(r) && seen.insert(r).second) todo.push_back(r);
  }
  while (!todo.empty()) {
    Line line = todo.back();
    todo.pop_back();
    for (Line succ : successors(m, line)) {
      if (succ != kHalt && m.contains(succ) && seen.insert(succ).second) todo.push_back(succ);
    }
  }
  return seen;
}

/// Recomputes the states of every line reachable from `roots` (the only
/// lines whose in-state can differ from the previous table), keeping the
/// rest. `next.states` must already be expressed in the new numbering.
void recompute(Configuration& next, const std::set<Line>& roots, Line site,
               std::function<TypeState(const TypeState&)> site_rule) {
  const MethodMap& m = next.method;
  StateTable states;
  for (Line line : m.dom()) {
    auto it = next.states.find(line);
    states[line] = it == next.states.end() ? std::nullopt : it->second;
  }
  const std::set<Line> dirty = reachable_from(m, roots);
  for (Line line : dirty) states[line].reset();
  next.exit.reset();

  Solver solver(m, next.classes, states, next.exit);
  if (site_rule) solver.override_at(site, std::move(site_rule));
  if (!m.empty() && dirty.count(m.first_line())) solver.join(m.first_line(), next.entry);
  for (const auto& [line, st] : states) {
    if (!st || dirty.count(line)) continue;
    for (Line succ : successors(m, line)) {
      if (succ == kHalt || dirty.count(succ)) {
        solver.schedule(line);
        break;
      }
    }
  }
  solver.run();
  next.states = std::move(states);
}

StateTable remap(const StateTable& states, const std::function<std::optional<Line>(Line)>& fn) {
  StateTable out;
  for (const auto& [line, st] : states) {
    if (auto moved = fn(line)) out[*moved] = st;
  }
  return out;
}

std::set<Line> remap_successors(const MethodMap& old_method, Line line,
                                const std::function<std::optional<Line>(Line)>& fn) {
  std::set<Line> out;
  if (!old_method.contains(line)) return out;
  for (Line succ : successors(old_method, line)) {
    if (succ == kHalt) continue;
    if (auto moved = fn(succ)) out.insert(*moved);
  }
  return out;
}

}  // namespace

TypeState entry_state(const MethodMap& m) {
  TypeState st;
  for (const auto& p : m.params()) st.locals[p.name] = p.type;
  return st;
}

std::string to_string(const TypeState& st) {
  std::string out = "F={";
  bool first = true;
  for (const auto& [name, type] : st.locals) {
    if (!first) out += ",";
    first = false;
    out += name + ":" + type.to_string();
  }
  out += "} S=" + type_list(st.stack) + " SD=" + std::to_string(st.depth);
  return out;
}

TypeState merge(const TypeState& a, const TypeState& b, const ClassHierarchy& classes, Line line) {
  if (a.depth != b.depth) {
    throw Error(ErrorKind::DepthMismatch,
                "predecessors disagree on stack depth (" + std::to_string(a.depth) + " vs " +
                    std::to_string(b.depth) + ")" + (line == kHalt ? " at method exit" : ""),
                line);
  }
  TypeState out;
  out.depth = a.depth;
  for (std::size_t k = 0; k < a.stack.size(); ++k) out.stack.push_back(classes.lub(a.stack[k], b.stack[k]));
  for (const auto& [name, type] : a.locals) {
    auto it = b.locals.find(name);
    if (it != b.locals.end()) out.locals[name] = classes.lub(type, it->second);
  }
  return out;
}

TypeState transfer_instr(const Instruction& instr, const TypeState& in, const ClassHierarchy& classes,
                         Line line, const std::set<std::string>* declared_vars) {
  TypeState st = in;
  if (std::holds_alternative<op::Pop>(instr)) {
    require_depth(st, 1, line, "pop");
    drop(st, 1);
  } else if (std::holds_alternative<op::If>(instr)) {
    require_depth(st, 1, line, "if");
    require_int(st.stack[0], line);
    drop(st, 1);
  } else if (auto* store = std::get_if<op::Store>(&instr)) {
    require_declared(store->var, declared_vars, line);
    require_depth(st, 1, line, "store");
    st.locals[store->var] = st.stack[0];
    drop(st, 1);
  } else if (auto* load = std::get_if<op::Load>(&instr)) {
    require_declared(load->var, declared_vars, line);
    auto it = st.locals.find(load->var);
    if (it == st.locals.end()) {
      throw Error(ErrorKind::UnknownVariable, "'" + load->var + "' has no type here", line);
    }
    push(st, it->second);
  } else if (auto* n = std::get_if<op::New>(&instr)) {
    push(st, TypeDesc::class_type(n->cls));
  } else if (std::holds_alternative<op::Goto>(instr)) {
    // no effect on the typing
  } else if (std::holds_alternative<op::Inc>(instr)) {
    require_depth(st, 1, line, "inc");
    require_int(st.stack[0], line);
  } else if (std::holds_alternative<op::Add>(instr)) {
    require_depth(st, 2, line, "add");
    require_int(st.stack[0], line);
    require_int(st.stack[1], line);
    drop(st, 1);
  } else if (auto* call = std::get_if<op::InvokeVirtual>(&instr)) {
    check_call_operands(*call, st, classes, line);
    drop(st, call->sig.args.size() + 1);
  } else if (auto* get = std::get_if<op::GetField>(&instr)) {
    require_depth(st, 1, line, "getfield");
    require_object(st.stack[0], get->cls, classes, line);
    st.stack[0] = get->type;
  } else if (auto* put = std::get_if<op::PutField>(&instr)) {
    check_putfield_operands(*put, st, classes, line);
    drop(st, 2);
  }
  return st;
}

std::vector<Line> VSem::unreachable() const {
  std::vector<Line> out;
  for (const auto& [line, st] : states) {
    if (!st) out.push_back(line);
  }
  return out;
}

VSem verify_method(const MethodMap& m, const TypeState& entry, const ClassHierarchy& classes) {
  check_targets(m);
  VSem sem{m, {}, std::nullopt};
  for (Line line : m.dom()) sem.states[line] = std::nullopt;
  if (m.empty()) return sem;
  Solver solver(m, classes, sem.states, sem.exit);
  solver.join(m.first_line(), entry);
  solver.run();
  return sem;
}

RuleOutcome add_rule(const Instruction& x, const TypeState& before, const MethodMap& patched,
                     const ClassHierarchy& classes) {
  RuleOutcome out;
  out.rule = "add-" + std::string(mnemonic(x));
  out.pc_max_delta = instr_length(x);
  out.cursor_step = 1 + instr_length(x);
  out.after = before;
  TypeState& st = out.after;

  auto fail = [&](const Error& cause) -> Error {
    return Error(ErrorKind::RulePreconditionFailed, out.rule + ": " + cause.message(), cause.line())
        .with_cause(cause.kind());
  };

  try {
    if (auto* g = std::get_if<op::Goto>(&x)) {
      // SD, S and F unchanged; L must be an address of the method.
      if (!patched.contains(g->target)) {
        throw Error(ErrorKind::DanglingTarget, "goto target " + line_str(g->target) + " not in DOM");
      }
    } else if (std::holds_alternative<op::Pop>(x)) {
      // S_i = t.S0 -> S_{i+1} = S0, SD - 1
      require_depth(st, 1, kHalt, "pop");
      drop(st, 1);
    } else if (auto* store = std::get_if<op::Store>(&x)) {
      // S_i = t.S0, F_{i+1} = F_i[x <- t], x in VAR
      if (!patched.vars().count(store->var)) {
        throw Error(ErrorKind::UnknownVariable, "'" + store->var + "' is not in VAR");
      }
      require_depth(st, 1, kHalt, "store");
      st.locals[store->var] = st.stack[0];
      drop(st, 1);
    } else if (auto* put = std::get_if<op::PutField>(&x)) {
      // S_i = t.A.S0 -> S_{i+1} = S0, SD - 2
      check_putfield_operands(*put, st, classes, kHalt);
      drop(st, 2);
      out.cursor_step = 3;
    } else if (auto* call = std::get_if<op::InvokeVirtual>(&x)) {
      // SD - (card(dom(t)) + 1); the conclusion steps to i+2.
      check_call_operands(*call, st, classes, kHalt);
      drop(st, call->sig.args.size() + 1);
      out.cursor_step = 2;
    } else if (auto* n = std::get_if<op::New>(&x)) {
      // SD + 1, F untouched, Class(A) pushed.
      push(st, TypeDesc::class_type(n->cls));
    } else {
      st = transfer_instr(x, before, classes, kHalt, &patched.vars());
    }
  } catch (const Error& e) {
    throw fail(e);
  }
  return out;
}

Configuration configure(const MethodMap& m, const TypeState& entry, const ClassHierarchy& classes) {
  VSem sem = verify_method(m, entry, classes);
  Configuration cfg;
  cfg.method = m;
  cfg.states = std::move(sem.states);
  cfg.exit = std::move(sem.exit);
  cfg.cursor = m.empty() ? 1 : m.first_line();
  cfg.entry = entry;
  cfg.classes = classes;
  return cfg;
}

VSem to_vsem(const Configuration& cfg) { return VSem{cfg.method, cfg.states, cfg.exit}; }

namespace {

std::function<TypeState(const TypeState&)> rule_at(Configuration& next, const Instruction& x, Line at,
                                                    RuleApplication& record, const std::string& prefix) {
  return [&next, x, at, &record, prefix](const TypeState& in) {
    RuleOutcome outcome;
    try {
      outcome = add_rule(x, in, next.method, next.classes);
    } catch (const Error& e) {
      // Report the site line like an ordinary transfer error would.
      throw e.with_line(at);
    }
    record.rule = prefix + outcome.rule.substr(outcome.rule.find('-'));
    record.before = in;
    record.after = outcome.after;
    record.pc_max_delta = outcome.pc_max_delta;
    record.cursor_step = outcome.cursor_step;
    return outcome.after;
  };
}

}  // namespace

Configuration transfer_update_add(const Configuration& cfg, const Instruction& x, Line at,
                                  const EditFaults& faults) {
  Configuration next = cfg;
  next.method = apply_add(cfg.method, x, at, faults);
  auto fn = [at](Line line) -> std::optional<Line> { return line >= at ? line + 1 : line; };
  next.states = remap(cfg.states, fn);

  RuleApplication record;
  record.at = at;
  record.rule = "add-" + std::string(mnemonic(x));
  record.pc_max_delta = instr_length(x);
  std::set<Line> roots{at};
  if (next.method.contains(at + 1)) roots.insert(at + 1);
  recompute(next, roots, at, rule_at(next, x, at, record, "add"));
  next.cursor = at + 1;
  next.log.push_back(record);
  return next;
}

Configuration transfer_update_delete(const Configuration& cfg, Line at, const EditFaults& faults) {
  const Instruction victim = cfg.method.at(at);
  Configuration next = cfg;
  next.method = apply_delete(cfg.method, at, faults);
  auto fn = [at](Line line) -> std::optional<Line> {
    if (line == at) return std::nullopt;
    return line > at ? line - 1 : line;
  };
  next.states = remap(cfg.states, fn);

  std::set<Line> roots = remap_successors(cfg.method, at, fn);
  if (next.method.contains(at)) roots.insert(at);
  recompute(next, roots, kHalt, nullptr);

  // The effect of deleting is the effect of whatever now occupies the site.
  RuleApplication record;
  record.at = at;
  record.rule = "del-" + std::string(mnemonic(victim));
  record.pc_max_delta = -instr_length(victim);
  if (next.method.contains(at)) {
    record.before = next.states.at(at);
    if (record.before) {
      record.after = transfer_instr(next.method.at(at), *record.before, next.classes, at, &next.method.vars());
    }
    record.cursor_step = instr_length(next.method.at(at));
  }
  next.cursor = at;
  next.log.push_back(record);
  return next;
}

Configuration transfer_update_modify(const Configuration& cfg, const Instruction& x, Line at) {
  const Instruction old = cfg.method.at(at);
  Configuration next = cfg;
  next.method = apply_modify(cfg.method, x, at);
  auto same = [](Line line) -> std::optional<Line> { return line; };

  RuleApplication record;
  record.at = at;
  record.rule = "mod-" + std::string(mnemonic(x));
  record.pc_max_delta = instr_length(x) - instr_length(old);
  std::set<Line> roots = remap_successors(cfg.method, at, same);
  roots.insert(at);
  recompute(next, roots, at, rule_at(next, x, at, record, "mod"));
  record.pc_max_delta = instr_length(x) - instr_length(old);
  next.cursor = at + 1;
  next.log.push_back(record);
  return next;
}

Configuration transfer_patch(const Configuration& cfg, const Patch& patch, const EditFaults& faults) {
  Configuration current = cfg;
  for (std::size_t k = 0; k < patch.items.size(); ++k) {
    const UpdateInstr& u = patch.items[k];
    try {
      switch (u.kind) {
        case UpdateInstr::Kind::Add:
          current = transfer_update_add(current, *u.instr, u.at, faults);
          break;
        case UpdateInstr::Kind::Modify:
          current = transfer_update_modify(current, *u.instr, u.at);
          break;
        case UpdateInstr::Kind::Delete:
          if (u.instr && current.method.contains(u.at) && !(current.method.at(u.at) == *u.instr)) {
            throw Error(ErrorKind::MismatchedDelete,
                        "expected '" + to_string(*u.instr) + "' at line " + line_str(u.at) + " but found '" +
                            to_string(current.method.at(u.at)) + "'",
                        u.at);
          }
          current = transfer_update_delete(current, u.at, faults);
          break;
      }
    } catch (const Error& e) {
      throw e.with_item(k);
    }
    current.log.back().item = k;
  }
  return current;
}

namespace {

std::vector<std::optional<TypeState>> ordered_states(const VSem& v) {
  std::vector<std::optional<TypeState>> out;
  for (const auto& [line, instr] : v.method.entries()) {
    auto it = v.states.find(line);
    out.push_back(it == v.states.end() ? std::nullopt : it->second);
  }
  return out;
}

std::optional<Divergence> compare_states(Line line, const std::optional<TypeState>& a,
                                         const std::optional<TypeState>& b) {
  auto reach = [](const std::optional<TypeState>& s) { return s ? std::string("reachable") : "unreachable"; };
  if (a.has_value() != b.has_value()) return Divergence{line, "reachability", reach(b), reach(a)};
  if (!a) return std::nullopt;
  if (a->depth != b->depth) {
    return Divergence{line, "SD", std::to_string(b->depth), std::to_string(a->depth)};
  }
  if (a->stack != b->stack) return Divergence{line, "S", type_list(b->stack), type_list(a->stack)};
  for (const auto& [name, type] : a->locals) {
    auto it = b->locals.find(name);
    if (it != b->locals.end() && it->second != type) {
      return Divergence{line, "F", name + ":" + it->second.to_string(), name + ":" + type.to_string()};
    }
  }
  return std::nullopt;
}

}  // namespace

Verdict check_equivalence(const VSem& v12, const VSem& v2) {
  const auto code12 = instruction_sequence(canonicalize(v12.method));
  const auto code2 = instruction_sequence(canonicalize(v2.method));
  const auto states12 = ordered_states(v12);
  const auto states2 = ordered_states(v2);
  const std::size_t n = std::max(code12.size(), code2.size());
  for (std::size_t k = 0; k < n; ++k) {
    const Line line = static_cast<Line>(k + 1);
    if (k >= code12.size() || k >= code2.size()) {
      return Verdict{Divergence{line, "length", std::to_string(code2.size()), std::to_string(code12.size())}};
    }
    if (!(code12[k] == code2[k])) {
      return Verdict{Divergence{line, "instr", to_string(code2[k]), to_string(code12[k])}};
    }
    if (auto d = compare_states(line, states12[k], states2[k])) return Verdict{d};
  }
  if (auto d = compare_states(kHalt, v12.exit, v2.exit)) {
    d->aspect = d->aspect == "reachability" ? "exit" : d->aspect;
    return Verdict{d};
  }
  return Verdict{};
}

}  // namespace patchverify
