#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "patchverify/bytecode.hpp"
#include "patchverify/patch.hpp"

namespace patchverify {

/// Per-point typing: locals (F), operand stack types with `stack[0]` the
/// top (S), and stack depth (SD).
struct TypeState {
  std::map<std::string, TypeDesc> locals;
  std::vector<TypeDesc> stack;
  int depth = 0;

  friend bool operator==(const TypeState&, const TypeState&) = default;
};

/// F = declared parameters, S empty, SD 0.
TypeState entry_state(const MethodMap& m);

std::string to_string(const TypeState& st);

/// Pointwise lub. Locals missing on either side are dropped.
/// Throws DepthMismatch when the depths differ.
TypeState merge(const TypeState& a, const TypeState& b, const ClassHierarchy& classes, Line line);

/// Effect of one ordinary instruction on the typing. Both successors of an
/// `if` receive the returned state. When `declared_vars` is given, store and
/// load must name a declared local.
TypeState transfer_instr(const Instruction& instr, const TypeState& in, const ClassHierarchy& classes,
                         Line line = kHalt, const std::set<std::string>* declared_vars = nullptr);

using StateTable = std::map<Line, std::optional<TypeState>>;

/// Verified semantics of a method: the in-state of every line (nullopt for
/// unreachable lines) and the state on leaving the method.
struct VSem {
  MethodMap method;
  StateTable states;
  std::optional<TypeState> exit;

  std::vector<Line> unreachable() const;
  friend bool operator==(const VSem&, const VSem&) = default;
};

/// Forward worklist dataflow to the least fixpoint.
VSem verify_method(const MethodMap& m, const TypeState& entry, const ClassHierarchy& classes = {});

/// Conclusion of one addition rule applied at the insertion point.
struct RuleOutcome {
  std::string rule;
  TypeState after;
  int pc_max_delta = 0;
  /// How far the rule's conclusion moves the program counter.
  int cursor_step = 0;
};

/// The addition rules: goto, pop, store, putfield, invokevirtual, new, plus
/// the ordinary typing of the remaining instructions. `patched` is the
/// method after insertion (for DOM and VAR side conditions).
/// Throws RulePreconditionFailed carrying the failed check as cause.
RuleOutcome add_rule(const Instruction& x, const TypeState& before, const MethodMap& patched,
                     const ClassHierarchy& classes = {});

struct RuleApplication {
  std::size_t item = 0;
  std::string rule;
  Line at = kHalt;
  std::optional<TypeState> before;
  std::optional<TypeState> after;
  int pc_max_delta = 0;
  int cursor_step = 0;
};

/// Static configuration <(F, S, SD, M), i> together with what is needed to
/// keep it up to date under edits.
struct Configuration {
  MethodMap method;
  StateTable states;
  std::optional<TypeState> exit;
  Line cursor = 1;
  TypeState entry;
  ClassHierarchy classes;
  std::vector<RuleApplication> log;
};

/// Verifies `m` from scratch and wraps the result.
Configuration configure(const MethodMap& m, const TypeState& entry, const ClassHierarchy& classes = {});
VSem to_vsem(const Configuration& cfg);

Configuration transfer_update_add(const Configuration& cfg, const Instruction& x, Line at,
                                  const EditFaults& faults = {});
Configuration transfer_update_delete(const Configuration& cfg, Line at, const EditFaults& faults = {});
Configuration transfer_update_modify(const Configuration& cfg, const Instruction& x, Line at);

/// Folds the transfer_update_* rules over a patch. Errors carry the item.
Configuration transfer_patch(const Configuration& cfg, const Patch& patch, const EditFaults& faults = {});

struct Divergence {
  Line line = kHalt;   // canonical line, kHalt for the method exit
  std::string aspect;  // length | instr | reachability | SD | S | F | exit
  std::string expected;
  std::string found;
};

struct Verdict {
  std::optional<Divergence> divergence;
  bool equivalent() const { return !divergence.has_value(); }
};

/// Compares two verified methods after canonical renumbering.
Verdict check_equivalence(const VSem& v12, const VSem& v2);

}  // namespace patchverify
