#include <doctest.h>

#include "patchverify/verifier.hpp"

using namespace patchverify;

namespace {

const TypeDesc Int = TypeDesc::integer();
TypeDesc cls(const char* name) { return TypeDesc::class_type(name); }

TypeState state(std::vector<TypeDesc> stack, std::map<std::string, TypeDesc> locals = {}) {
  TypeState st;
  st.locals = std::move(locals);
  st.depth = static_cast<int>(stack.size());
  st.stack = std::move(stack);
  return st;
}

ErrorKind failure(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Parse;
}

VSem verify(const char* text, const ClassHierarchy& h = {}) {
  MethodMap m = parse_method(text);
  return verify_method(m, entry_state(m), h);
}

}  // namespace

TEST_CASE("transfer rules of ordinary instructions") {
  CHECK(transfer_instr(parse_instruction("putfield A f int"), state({Int, cls("A")}), {}) == state({}));
  CHECK(transfer_instr(parse_instruction("invokevirtual A l (int,int)->void"), state({Int, Int, cls("A")}), {}).depth == 0);
  CHECK(failure([] { transfer_instr(op::Inc{}, state({cls("A")}), {}); }) == ErrorKind::TypeMismatch);

  CHECK(transfer_instr(op::Pop{}, state({Int, cls("A")}), {}) == state({cls("A")}));
  CHECK(transfer_instr(op::If{1}, state({Int}), {}) == state({}));
  CHECK(failure([] { transfer_instr(op::If{1}, state({cls("A")}), {}); }) == ErrorKind::TypeMismatch);
  CHECK(transfer_instr(op::Store{"x"}, state({cls("A")}), {}) == state({}, {{"x", cls("A")}}));
  CHECK(transfer_instr(op::Load{"x"}, state({}, {{"x", Int}}), {}) == state({Int}, {{"x", Int}}));
  CHECK(failure([] { transfer_instr(op::Load{"x"}, state({}), {}); }) == ErrorKind::UnknownVariable);
  CHECK(transfer_instr(op::New{"A"}, state({Int}), {}) == state({cls("A"), Int}));
  CHECK(transfer_instr(op::Goto{3}, state({Int}), {}) == state({Int}));
  CHECK(transfer_instr(op::Add{}, state({Int, Int, cls("A")}), {}) == state({Int, cls("A")}));
  CHECK(failure([] { transfer_instr(op::Add{}, state({Int}), {}); }) == ErrorKind::StackUnderflow);
  CHECK(transfer_instr(parse_instruction("getfield A f B"), state({cls("A")}), {}) == state({cls("B")}));
  CHECK(failure([] { transfer_instr(parse_instruction("getfield A f int"), state({cls("C")}), {}); }) ==
        ErrorKind::TypeMismatch);
  CHECK(failure([] { transfer_instr(parse_instruction("putfield A f int"), state({cls("A"), cls("A")}), {}); }) ==
        ErrorKind::TypeMismatch);
}

TEST_CASE("subtyping through a hierarchy") {
  ClassHierarchy h = ClassHierarchy::parse("B extends A");
  CHECK(transfer_instr(parse_instruction("getfield A f int"), state({cls("B")}), h) == state({Int}));
  CHECK(transfer_instr(parse_instruction("putfield A f A"), state({cls("B"), cls("B")}), h) == state({}));
  CHECK(failure([] { transfer_instr(parse_instruction("getfield A f int"), state({cls("B")}), {}); }) ==
        ErrorKind::TypeMismatch);
  CHECK(failure([&] { transfer_instr(parse_instruction("invokevirtual B m ()->void"), state({cls("A")}), h); }) ==
        ErrorKind::TypeMismatch);
}

TEST_CASE("verify_method on straight-line code") {
  VSem v = verify("# params x:int\n1: load x\n2: inc\n3: store x");
  CHECK(v.states.at(3) == state({Int}, {{"x", Int}}));
  REQUIRE(v.exit.has_value());
  CHECK(*v.exit == state({}, {{"x", Int}}));
  CHECK(to_string(*v.states.at(3)) == "F={x:int} S=[int] SD=1");

  VSem empty = verify("");
  CHECK(empty.states.empty());

  try {
    verify("1: if 1");
    FAIL("expected StackUnderflow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StackUnderflow);
    CHECK(e.line() == 1);
  }
}

TEST_CASE("joins merge by lub and reject depth conflicts") {
  ClassHierarchy h = ClassHierarchy::parse("B extends A\nC extends A");
  VSem v = verify("# params c:int\n1: load c\n2: if 5\n3: new B\n4: goto 6\n5: new C\n6: pop", h);
  CHECK(v.states.at(6) == state({cls("A")}, {{"c", Int}}));
  VSem flat = verify("# params c:int\n1: load c\n2: if 5\n3: new B\n4: goto 6\n5: new C\n6: pop");
  CHECK(flat.states.at(6)->stack[0].is_top());

  CHECK(failure([] { verify("# params c:int\n1: load c\n2: if 4\n3: load c\n4: inc"); }) ==
        ErrorKind::DepthMismatch);
}

TEST_CASE("locals assigned on one branch only are dropped at the join") {
  VSem v = verify("# params c:int\n1: load c\n2: if 5\n3: load c\n4: store t\n5: load c\n6: pop");
  CHECK(v.states.at(5)->locals.count("t") == 0);
  CHECK(failure([] { verify("# params c:int\n1: load c\n2: if 5\n3: load c\n4: store t\n5: load t"); }) ==
        ErrorKind::UnknownVariable);
}

TEST_CASE("loops reach a fixpoint") {
  VSem v = verify("# params n:int\n1: load n\n2: inc\n3: store n\n4: load n\n5: if 1\n6: load n");
  CHECK(v.states.at(1) == state({}, {{"n", Int}}));
  CHECK(v.exit->depth == 1);
}

TEST_CASE("unreachable lines are reported, not rejected") {
  VSem v = verify("1: goto 3\n2: pop\n3: new A");
  CHECK(v.unreachable() == std::vector<Line>{2});
  CHECK_FALSE(v.states.at(2).has_value());
}

TEST_CASE("incremental add, delete and modify") {
  MethodMap m = parse_method("# params x:int\n1: load x\n2: store y");
  Configuration cfg = configure(m, entry_state(m));

  Configuration added = transfer_update_add(cfg, op::Inc{}, 2);
  CHECK(instruction_sequence(added.method) ==
        std::vector<Instruction>{op::Load{"x"}, op::Inc{}, op::Store{"y"}});
  CHECK(added.states.at(3) == state({Int}, {{"x", Int}}));
  CHECK(added.cursor == 3);
  REQUIRE(added.log.size() == 1);
  CHECK(added.log[0].rule == "add-inc");
  CHECK(added.log[0].after == state({Int}, {{"x", Int}}));

  try {
    transfer_update_add(cfg, op::Pop{}, 1);
    FAIL("expected a rejected rule");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RulePreconditionFailed);
    CHECK(e.cause() == ErrorKind::StackUnderflow);
    CHECK(e.line() == 1);
  }

  Configuration deleted = transfer_update_delete(added, 2);
  CHECK(to_vsem(deleted) == to_vsem(cfg));

  Configuration same = transfer_update_modify(added, op::Inc{}, 2);
  CHECK(to_vsem(same) == to_vsem(added));
  try {
    transfer_update_modify(cfg, parse_instruction("putfield A f int"), 1);
    FAIL("expected a rejected rule");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RulePreconditionFailed);
    CHECK(e.cause() == ErrorKind::StackUnderflow);
  }
}

TEST_CASE("deleting a push makes a later store fail") {
  MethodMap m = parse_method("# params x:int\n1: load x\n2: store y");
  Configuration cfg = configure(m, entry_state(m));
  CHECK(failure([&] { transfer_update_delete(cfg, 1); }) == ErrorKind::StackUnderflow);
  CHECK(failure([&] { transfer_update_delete(cfg, 5); }) == ErrorKind::InvalidLine);
}

TEST_CASE("delete where the next instruction consumes the prior stack") {
  MethodMap m = parse_method("# params x:int\n1: load x\n2: load x\n3: pop\n4: store z");
  Configuration cfg = configure(m, entry_state(m));
  Configuration d = transfer_update_delete(cfg, 3);
  CHECK(d.states.at(3) == state({Int, Int}, {{"x", Int}}));
  CHECK(*d.exit == state({Int}, {{"x", Int}, {"z", Int}}));
}

TEST_CASE("equivalence verdicts") {
  VSem a = verify("# params x:int\n1: load x\n2: inc\n3: store y");
  CHECK(check_equivalence(a, a).equivalent());
  CHECK(check_equivalence(a, verify("# params x:int\n5: load x\n7: inc\n9: store y")).equivalent());

  Verdict instr = check_equivalence(a, verify("# params x:int\n1: load x\n2: inc\n3: store z"));
  REQUIRE_FALSE(instr.equivalent());
  CHECK(instr.divergence->aspect == "instr");
  CHECK(instr.divergence->line == 3);

  Verdict len = check_equivalence(a, verify("# params x:int\n1: load x\n2: inc\n3: inc\n4: store y"));
  REQUIRE_FALSE(len.equivalent());

  // Same code, different entry typing: the S column differs first.
  MethodMap m = parse_method("# params x:int\n1: load x\n2: pop");
  MethodMap n = parse_method("# params x:A\n1: load x\n2: pop");
  Verdict s = check_equivalence(verify_method(m, entry_state(m)), verify_method(n, entry_state(n)));
  REQUIRE_FALSE(s.equivalent());
  CHECK(s.divergence->line == 1);
  CHECK(s.divergence->aspect == "F");
}
