#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "patchverify/bytecode.hpp"
#include "patchverify/formula.hpp"

namespace patchverify {

// Weakest preconditions and strongest postconditions over the straight-line
// fragment {inc, add, pop, load, store, fall-through goto}.
//
// Slot k names the k-th operand from the top. Fresh atoms (names containing
// '\'') stand for values that an instruction destroyed; they are
// existentially quantified.

/// Throws UnsupportedInstruction for anything outside the fragment. A goto
/// is treated as falling through; wp_segment checks that it does.
Formula wp_instr(const Instruction& instr, const Formula& q);

/// Right fold of wp over the lines of `m` in [from, to]. An empty range
/// returns q. Throws NotStraightLine for `if` or a goto that does not target
/// the next line, UnsupportedInstruction for heap and call instructions, and
/// StackShapeError when `entry_depth` is given and the segment underflows.
Formula wp_segment(const MethodMap& m, Line from, Line to, const Formula& q,
                   std::optional<int> entry_depth = std::nullopt);

/// Deterministic source of fresh names. `make` continues after the highest
/// index already used in the formulas it was seeded from.
class FreshSupply {
 public:
  FreshSupply() = default;
  explicit FreshSupply(const Formula& seed) { observe(seed); }

  void observe(const Formula& f);
  std::string make(const std::string& base);
  int counter() const { return counter_; }

 private:
  int counter_ = 0;
};

struct FreshVar {
  std::string name;
  std::size_t step;  // index of the instruction within the segment
  Atom denotes;      // the atom whose pre-step value it names
};

struct SpResult {
  Formula post;
  int depth = 0;  // operand depth after the segment
  std::vector<FreshVar> fresh;
};

/// One forward step at operand depth `depth`. Throws StackShapeError when
/// the instruction needs more operands than `depth`.
SpResult sp_instr(const Formula& p, const Instruction& instr, int depth, FreshSupply& fresh);
/// Convenience overload: depth is 1 + max slot of p, fresh names seeded from p.
Formula sp_instr(const Formula& p, const Instruction& instr);

struct SpOptions {
  /// Operand depth on entry; defaults to 1 + the highest slot mentioned in p.
  std::optional<int> entry_depth;
  /// Shared name supply; a local one seeded from p is used when null.
  FreshSupply* fresh = nullptr;
};

/// Left fold of sp over the lines of `m` in [from, to]; same fragment
/// errors as wp_segment.
SpResult sp_segment_ex(const Formula& p, const MethodMap& m, Line from, Line to,
                       const SpOptions& options = {});
Formula sp_segment(const Formula& p, const MethodMap& m, Line from, Line to,
                   const SpOptions& options = {});

/// Operand depth after running lines [from, to] from `entry_depth`.
/// Throws StackShapeError on underflow and the fragment errors above.
int segment_depth(const MethodMap& m, Line from, Line to, int entry_depth);

/// Equivalence-preserving cleanup: linear normalisation of comparisons,
/// constant folding, unit laws, flattening, and elimination of fresh atoms
/// that are defined by an equation or occur in a single inequality.
Formula simplify(const Formula& f);

struct BoundedOptions {
  int bound = 8;           // atoms range over [-bound, bound - 1]
  int atom_budget = 8;     // maximum number of atoms enumerated
  std::uint64_t max_assignments = std::uint64_t{1} << 26;
};

/// Witness range for existential atoms: [-kWitnessScale * bound, ...).
inline constexpr int kWitnessScale = 4;

struct ImplicationResult {
  bool valid = false;
  /// First falsifying assignment in enumeration order when not valid.
  Assignment counterexample;
};

/// Bounded validity of h => c. Atoms of h (and non-fresh atoms of c) are
/// universal over [-B, B-1]; fresh atoms occurring only in c are existential
/// over the widened witness range. Both sides are simplified first.
/// Throws AtomBudgetExceeded.
ImplicationResult check_bounded_implication(const Formula& h, const Formula& c,
                                            const BoundedOptions& options = {});
bool implies_bounded(const Formula& h, const Formula& c, const BoundedOptions& options = {});

/// Mutual bounded implication; syntactically equal formulas short-circuit.
bool equivalent(const Formula& f, const Formula& g, const BoundedOptions& options = {});
bool equivalent(const Formula& f, const Formula& g, int bound);

}  // namespace patchverify
