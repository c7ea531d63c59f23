#include "patchverify/interpreter.hpp"

namespace patchverify {

namespace {

std::int32_t wrap_add(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}

Value pop_value(MachineState& s, Line line) {
  if (s.stack.empty()) throw Error(ErrorKind::StackUnderflow, "operand stack is empty", line);
  Value v = s.stack.front();
  s.stack.erase(s.stack.begin());
  return v;
}

std::int32_t pop_int(MachineState& s, Line line, const char* what) {
  Value v = pop_value(s, line);
  if (auto* i = std::get_if<std::int32_t>(&v)) return *i;
  throw Error(ErrorKind::TypeFault, std::string(what) + " needs an integer operand", line);
}

HeapObject& pop_object(MachineState& s, Line line, const char* what) {
  Value v = pop_value(s, line);
  auto* r = std::get_if<Ref>(&v);
  if (!r) throw Error(ErrorKind::TypeFault, std::string(what) + " needs an object reference", line);
  auto it = s.heap.find(r->id);
  if (it == s.heap.end()) throw Error(ErrorKind::TypeFault, "dangling reference", line);
  return it->second;
}

void push(MachineState& s, Value v) { s.stack.insert(s.stack.begin(), v); }

}  // namespace

Ref MachineState::allocate(const std::string& cls) {
  auto id = static_cast<std::uint32_t>(heap.size() + 1);
  while (heap.count(id)) ++id;
  heap.emplace(id, HeapObject{cls, {}});
  return Ref{id};
}

std::string to_string(const Value& v) {
  if (auto* i = std::get_if<std::int32_t>(&v)) return std::to_string(*i);
  return "@" + std::to_string(std::get<Ref>(v).id);
}

MachineState step(const MethodMap& m, MachineState s) {
  const Line line = s.pc;
  const Instruction& instr = m.at(line);
  Line next = m.next_line(line);

  if (std::holds_alternative<op::Pop>(instr)) {
    pop_value(s, line);
  } else if (auto* i = std::get_if<op::If>(&instr)) {
    if (pop_int(s, line, "if") != 0) next = i->target;
  } else if (auto* st = std::get_if<op::Store>(&instr)) {
    s.locals[st->var] = pop_value(s, line);
  } else if (auto* ld = std::get_if<op::Load>(&instr)) {
    auto it = s.locals.find(ld->var);
    if (it == s.locals.end()) {
      throw Error(ErrorKind::TypeFault, "local '" + ld->var + "' is unset", line);
    }
    push(s, it->second);
  } else if (auto* n = std::get_if<op::New>(&instr)) {
    push(s, s.allocate(n->cls));
  } else if (auto* g = std::get_if<op::Goto>(&instr)) {
    next = g->target;
  } else if (std::holds_alternative<op::Inc>(instr)) {
    push(s, wrap_add(pop_int(s, line, "inc"), 1));
  } else if (std::holds_alternative<op::Add>(instr)) {
    auto a = pop_int(s, line, "add");
    auto b = pop_int(s, line, "add");
    push(s, wrap_add(b, a));
  } else if (auto* call = std::get_if<op::InvokeVirtual>(&instr)) {
    for (std::size_t k = 0; k < call->sig.args.size(); ++k) pop_value(s, line);
    pop_object(s, line, "invokevirtual");
  } else if (auto* get = std::get_if<op::GetField>(&instr)) {
    HeapObject& obj = pop_object(s, line, "getfield");
    auto it = obj.fields.find(get->field);
    if (it != obj.fields.end()) {
      Value v = it->second;
      push(s, v);
    } else if (get->type.is_int()) {
      push(s, std::int32_t{0});
    } else {
      throw Error(ErrorKind::TypeFault, "field '" + get->field + "' was never written", line);
    }
  } else if (auto* put = std::get_if<op::PutField>(&instr)) {
    Value v = pop_value(s, line);
    pop_object(s, line, "putfield").fields[put->field] = v;
  }

  s.pc = next;
  ++s.steps;
  return s;
}

MachineState run_segment(const MethodMap& m, MachineState s, Line from, Line to,
                         std::uint64_t fuel) {
  s.pc = from;
  auto inside = [&](Line pc) { return pc != kHalt && pc >= from && pc <= to; };
  while (inside(s.pc)) {
    if (fuel == 0) {
      throw Error(ErrorKind::FuelExhausted, "step budget exhausted at line " + std::to_string(s.pc), s.pc);
    }
    --fuel;
    s = step(m, std::move(s));
  }
  return s;
}

}  // namespace patchverify
