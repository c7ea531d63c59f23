#pragma once

#include <optional>
#include <string>
#include <vector>

#include "patchverify/bytecode.hpp"
#include "patchverify/formula.hpp"
#include "patchverify/patch.hpp"
#include "patchverify/predicate.hpp"

namespace patchverify {

enum class TripleKind : std::uint8_t { Initial, Target, Calculated, Intermediate };

std::string to_string(TripleKind kind);

/// {pre} method {post}
struct Triple {
  Formula pre;
  MethodMap method;
  Formula post;
  TripleKind kind = TripleKind::Initial;
};

struct TransformOptions {
  BoundedOptions bounded;
  EditFaults faults;  // test hook, forwarded to apply_add
};

/// Intermediate values of one insertion, for reporting.
struct TransformStep {
  std::size_t item = 0;
  Line at = 0;
  std::string instr;
  Formula wp_suffix;   // wp of the original suffix m[i..n] w.r.t. the postcondition
  Formula sp_prefix;   // sp of the untouched prefix m[1..i-1] from the precondition
  Formula pre;         // new precondition after this step (simplified)
  Formula post;        // new postcondition after this step (simplified)
};

/// Running state of the transformation. The backward chain is always
/// anchored at the initial postcondition and the forward chain at the
/// initial precondition, so every intermediate triple keeps
/// pre => wp(method, initial post) and sp(initial pre, method) => post.
struct TransformState {
  Formula anchor_pre;
  Formula anchor_post;
  Triple current;
  std::vector<TransformStep> steps;
};

TransformState start_transform(const Formula& p1, const Formula& q1, const MethodMap& m1);

/// Processes one insertion. Throws DeletionNotSupported for del/mod items,
/// TransformException when a consistency check fails, and the predicate
/// errors (UnsupportedInstruction, NotStraightLine, StackShapeError).
void transform_step(TransformState& state, const UpdateInstr& item, std::size_t index,
                    const TransformOptions& options = {});

/// Folds transform_step over the patch; errors carry the item index.
TransformState transform_patch(const Formula& p1, const Formula& q1, const MethodMap& m1,
                               const Patch& patch, const TransformOptions& options = {});

/// The calculated triple of transform_patch. An empty patch returns the
/// inputs unchanged.
Triple transform_triple(const Formula& p1, const Formula& q1, const MethodMap& m1, const Patch& patch,
                        const TransformOptions& options = {});

struct Obligation {
  std::string name;
  Formula hypothesis;
  Formula conclusion;
};

struct ObligationSet {
  std::vector<Obligation> goals;
};

/// calculated.post => target.post and target.pre => calculated.pre.
ObligationSet implication_obligations(const Triple& calculated, const Triple& target);

enum class GoalStatus : std::uint8_t { Proved, Refuted, Unknown };

std::string to_string(GoalStatus status);

struct GoalVerdict {
  std::string name;
  GoalStatus status = GoalStatus::Unknown;
  Assignment counterexample;  // Refuted only
  std::string reason;         // Unknown only
};

/// Bounded validity of one goal; AtomBudgetExceeded and unsupported terms
/// become Unknown.
GoalVerdict decide(const Obligation& goal, const BoundedOptions& options = {});
std::vector<GoalVerdict> decide_all(const ObligationSet& set, const BoundedOptions& options = {});

/// Checks a calculated triple against a target. Throws MethodMismatch when the two methods differ after
/// canonical renumbering, and AtomBudgetExceeded when a goal is too large.
std::vector<GoalVerdict> check_implication(const Triple& calculated, const Triple& target,
                                           const BoundedOptions& options = {});

/// Soundness of the two chains of a finished transformation:
/// backward  pre => wp(method, anchor_post)
/// forward   sp(anchor_pre, method) => post
/// gap       pre => wp(method, post), which the algorithm does not promise.
struct ChainReport {
  GoalVerdict backward;
  GoalVerdict forward;
  GoalVerdict gap;
};

ChainReport check_chains(const TransformState& state, const BoundedOptions& options = {});

/// SMT-LIB 2 script: one `(assert (not (=> H C)))` and `(check-sat)` per
/// goal inside push/pop; `unsat` means the goal holds. Atoms are declared
/// as Int constants in sorted order. Fresh atoms that occur only in a
/// conclusion are bound by `exists`, which switches the logic to LIA.
std::string emit_obligations(const ObligationSet& set);

}  // namespace patchverify
