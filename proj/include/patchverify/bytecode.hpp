#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "patchverify/error.hpp"

namespace patchverify {

/// Static type of a local or operand-stack entry. Flat lattice
/// Int | Class(name) | Top unless a ClassHierarchy adds subclassing.
class TypeDesc {
 public:
  enum class Kind : std::uint8_t { Int, Class, Top };

  /// Top.
  TypeDesc() = default;

  static TypeDesc integer() { return TypeDesc(Kind::Int, {}); }
  static TypeDesc top() { return TypeDesc(Kind::Top, {}); }
  static TypeDesc class_type(std::string name);

  Kind kind() const { return kind_; }
  bool is_int() const { return kind_ == Kind::Int; }
  bool is_class() const { return kind_ == Kind::Class; }
  bool is_top() const { return kind_ == Kind::Top; }
  const std::string& class_name() const { return name_; }

  /// "int", "top" or the class name.
  std::string to_string() const;

  friend bool operator==(const TypeDesc&, const TypeDesc&) = default;
  friend auto operator<=>(const TypeDesc&, const TypeDesc&) = default;

 private:
  TypeDesc(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  Kind kind_ = Kind::Top;
  std::string name_;
};

/// Parses "int", "top" or a class identifier.
TypeDesc parse_type(std::string_view text);

bool is_identifier(std::string_view text);

/// Single-inheritance class hierarchy read from `B extends A` lines.
/// Without any entries subtyping is the flat order.
class ClassHierarchy {
 public:
  ClassHierarchy() = default;

  static ClassHierarchy parse(std::string_view text);

  void add_extends(const std::string& child, const std::string& parent);

  bool is_subclass(const std::string& sub, const std::string& super) const;
  bool is_subtype(const TypeDesc& sub, const TypeDesc& super) const;
  TypeDesc lub(const TypeDesc& a, const TypeDesc& b) const;

  const std::map<std::string, std::string>& parents() const { return parent_; }

 private:
  std::vector<std::string> ancestors(const std::string& cls) const;

  std::map<std::string, std::string> parent_;
};

struct Signature {
  std::vector<TypeDesc> args;
  /// Parsed and printed but never pushed; see invokevirtual's stack effect.
  std::optional<TypeDesc> result;

  friend bool operator==(const Signature&, const Signature&) = default;
};

namespace op {
struct Pop {
  friend bool operator==(const Pop&, const Pop&) = default;
};
struct If {
  Line target;
  friend bool operator==(const If&, const If&) = default;
};
struct Store {
  std::string var;
  friend bool operator==(const Store&, const Store&) = default;
};
struct Load {
  std::string var;
  friend bool operator==(const Load&, const Load&) = default;
};
struct New {
  std::string cls;
  friend bool operator==(const New&, const New&) = default;
};
struct Goto {
  Line target;
  friend bool operator==(const Goto&, const Goto&) = default;
};
struct Inc {
  friend bool operator==(const Inc&, const Inc&) = default;
};
struct Add {
  friend bool operator==(const Add&, const Add&) = default;
};
struct InvokeVirtual {
  std::string cls;
  std::string method;
  Signature sig;
  friend bool operator==(const InvokeVirtual&, const InvokeVirtual&) = default;
};
struct GetField {
  std::string cls;
  std::string field;
  TypeDesc type;
  friend bool operator==(const GetField&, const GetField&) = default;
};
struct PutField {
  std::string cls;
  std::string field;
  TypeDesc type;
  friend bool operator==(const PutField&, const PutField&) = default;
};
}  // namespace op

using Instruction = std::variant<op::Pop, op::If, op::Store, op::Load, op::New, op::Goto,
                                 op::Inc, op::Add, op::InvokeVirtual, op::GetField,
                                 op::PutField>;

std::string_view mnemonic(const Instruction& instr);
/// Canonical text, e.g. "putfield A f int" or "invokevirtual A m (int,int)->void".
std::string to_string(const Instruction& instr);
/// Parses one instruction (without the "L:" prefix). Throws Error{Parse}.
Instruction parse_instruction(std::string_view text);

/// Encoded byte length used for PC_MAX accounting.
int instr_length(const Instruction& instr);

/// Net change of the operand-stack depth.
int stack_delta(const Instruction& instr);

bool is_jump(const Instruction& instr);
std::optional<Line> jump_target(const Instruction& instr);
/// Same jump with a different target; non-jumps are returned unchanged.
Instruction with_target(const Instruction& instr, Line target);

struct Param {
  std::string name;
  TypeDesc type;
  friend bool operator==(const Param&, const Param&) = default;
};

/// The mapping from lines to instructions of one method body.
///
/// `pc_max` tracks the encoded code size (sum of instr_length), which is
/// what the edit rules adjust by +1/+3; it coincides with the last line
/// when every instruction is one byte long.
class MethodMap {
 public:
  using Entries = std::map<Line, Instruction>;

  MethodMap() = default;
  /// pc_max is derived from the entries; referenced locals are added to vars.
  explicit MethodMap(Entries entries, std::vector<Param> params = {},
                     std::set<std::string> extra_vars = {});

  const Entries& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  bool contains(Line line) const { return entries_.count(line) != 0; }
  /// Throws Error{InvalidLine} when `line` is not in the domain.
  const Instruction& at(Line line) const;

  std::set<Line> dom() const;
  /// Highest line in use, or 0 for an empty method.
  Line last_line() const;
  Line first_line() const;
  /// Next line in domain order, or kHalt past the end.
  Line next_line(Line line) const;

  int pc_max() const { return pc_max_; }
  const std::set<std::string>& vars() const { return vars_; }
  const std::vector<Param>& params() const { return params_; }

  // Low-level mutators for the edit engine. They do not touch pc_max.
  void set(Line line, Instruction instr) { entries_.insert_or_assign(line, std::move(instr)); }
  void erase(Line line) { entries_.erase(line); }
  void set_pc_max(int value) { pc_max_ = value; }
  void set_entries(Entries entries) { entries_ = std::move(entries); }

  friend bool operator==(const MethodMap&, const MethodMap&) = default;

 private:
  Entries entries_;
  int pc_max_ = 0;
  std::vector<Param> params_;
  std::set<std::string> vars_;
};

/// Checks that every jump target is in the domain. Throws DanglingTarget.
void check_targets(const MethodMap& m);

/// Control-flow successors of the instruction at `line`; kHalt stands for
/// falling off the end of the method.
std::vector<Line> successors(const MethodMap& m, Line line);

/// Renumbers lines to 1..n preserving order and retargeting jumps.
MethodMap canonicalize(const MethodMap& m);

/// Instructions in line order.
std::vector<Instruction> instruction_sequence(const MethodMap& m);

/// Method file format, one `L: instr` per line. Headers
/// `# params x:int, r:A` and `# vars y, z` declare typed parameters and
/// additional locals.
MethodMap parse_method(std::string_view text);
std::string serialize_method(const MethodMap& m);

}  // namespace patchverify
