#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patchverify/bytecode.hpp"

namespace patchverify {

/// One edit directive of a DIFF. `at` uses post-state addressing: it refers
/// to the method as already rewritten by the previous items.
struct UpdateInstr {
  enum class Kind : std::uint8_t { Add, Delete, Modify };

  Kind kind;
  Line at;
  /// Required for Add/Modify. For Delete it is an optional sanity check
  /// against the instruction actually found at `at`.
  std::optional<Instruction> instr;

  static UpdateInstr add(Instruction x, Line at) { return {Kind::Add, at, std::move(x)}; }
  static UpdateInstr del(Line at, std::optional<Instruction> expected = std::nullopt) {
    return {Kind::Delete, at, std::move(expected)};
  }
  static UpdateInstr modify(Instruction x, Line at) { return {Kind::Modify, at, std::move(x)}; }

  friend bool operator==(const UpdateInstr&, const UpdateInstr&) = default;
};

struct Patch {
  std::vector<UpdateInstr> items;
  std::string source_label;
  std::string target_label;

  friend bool operator==(const Patch&, const Patch&) = default;
};

/// "add %6 inc", "del %2", "del %2 pop", "mod %3 load x".
std::string to_string(const UpdateInstr& u);

/// DIFF text: one directive per line, `#` comments, optional
/// `# source LABEL` / `# target LABEL` headers.
Patch parse_patch(std::string_view text);
std::string serialize_patch(const Patch& p);

/// Where a line of the patched method came from.
struct Origin {
  std::optional<Line> original_line;       // line in the unpatched method
  std::optional<std::size_t> added_by;     // patch item that inserted it
  std::optional<std::size_t> modified_by;  // last patch item that rewrote it
  friend bool operator==(const Origin&, const Origin&) = default;
};

struct Annotation {
  std::size_t item;
  Line line;
  UpdateInstr update;
  /// The instruction removed or replaced, for Delete/Modify.
  std::optional<Instruction> previous;
  std::optional<Line> original_line;
};

struct AnnotatedMethod {
  MethodMap base;
  std::vector<Annotation> annotations;
  /// Parallel to base.entries() in line order.
  std::vector<Origin> origins;
};

/// Test-only switches that deliberately break the edit engine so the
/// oracles can be shown to notice.
struct EditFaults {
  bool skip_jump_retarget = false;
  /// apply_add overwrites the instruction at `at` instead of moving it.
  bool misplace_shift = false;
};

/// Entries with n <= line <= m_hi, lines preserved.
MethodMap range(const MethodMap& m, Line n, Line m_hi);

/// Moves every entry in [n, m_hi] by p lines. Jump targets are untouched.
MethodMap shift(const MethodMap& m, Line n, Line m_hi, int p);

/// Ascending lines holding goto/if.
std::vector<Line> look_for_jumps(const MethodMap& m);

/// Each listed jump whose target is >= pivot is retargeted by delta.
MethodMap update_jumps(const MethodMap& m, std::span<const Line> jumps, Line pivot, int delta);

MethodMap apply_add(const MethodMap& m, const Instruction& x, Line at, const EditFaults& faults = {});
MethodMap apply_delete(const MethodMap& m, Line at, const EditFaults& faults = {});
MethodMap apply_modify(const MethodMap& m, const Instruction& x, Line at);

/// Dispatches on the directive kind, including the delete sanity check.
MethodMap apply_update(const MethodMap& m, const UpdateInstr& u, const EditFaults& faults = {});

/// Folds the items in order. Errors carry the failing item index.
AnnotatedMethod apply_patch(const MethodMap& m, const Patch& p, const EditFaults& faults = {});

}  // namespace patchverify
