#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "patchverify/bytecode.hpp"

namespace patchverify {

struct Ref {
  std::uint32_t id;
  friend bool operator==(const Ref&, const Ref&) = default;
};

/// Concrete value: 32-bit two's-complement integer or an object reference.
using Value = std::variant<std::int32_t, Ref>;

struct HeapObject {
  std::string cls;
  std::map<std::string, Value> fields;
  friend bool operator==(const HeapObject&, const HeapObject&) = default;
};

/// Concrete machine state. `stack[0]` is the top of the operand stack.
struct MachineState {
  std::map<std::string, Value> locals;
  std::vector<Value> stack;
  Line pc = kHalt;
  std::map<std::uint32_t, HeapObject> heap;
  std::uint64_t steps = 0;

  const Value& slot(std::size_t k) const { return stack.at(k); }
  Ref allocate(const std::string& cls);

  friend bool operator==(const MachineState&, const MachineState&) = default;
};

/// One small-step transition of the instruction at `s.pc`.
/// Throws StackUnderflow, TypeFault or InvalidLine.
MachineState step(const MethodMap& m, MachineState s);

/// Starts at `from` and steps until control leaves [from, to] (or halts).
/// Throws FuelExhausted when `fuel` steps were not enough.
MachineState run_segment(const MethodMap& m, MachineState s, Line from, Line to,
                         std::uint64_t fuel);

std::string to_string(const Value& v);

}  // namespace patchverify
