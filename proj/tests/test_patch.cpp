#include <doctest.h>

#include "patchverify/patch.hpp"

using namespace patchverify;

namespace {

MethodMap code(std::initializer_list<std::pair<const Line, const char*>> lines) {
  MethodMap::Entries e;
  for (const auto& [line, text] : lines) e.emplace(line, parse_instruction(text));
  return MethodMap(std::move(e));
}

std::string text(const MethodMap& m) { return serialize_method(m); }

ErrorKind failure(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Parse;
}

}  // namespace

TEST_CASE("patch directives") {
  Patch p = parse_patch("# source v1\n# target v1.2\ndel %2\nadd %6 inc\nmod %3 load x\nDEL %4 pop  # note\n");
  REQUIRE(p.items.size() == 4);
  CHECK(p.items[0] == UpdateInstr::del(2));
  CHECK(p.items[1] == UpdateInstr::add(op::Inc{}, 6));
  CHECK(p.items[2] == UpdateInstr::modify(op::Load{"x"}, 3));
  CHECK(p.items[3] == UpdateInstr::del(4, op::Pop{}));
  CHECK(p.source_label == "v1");
  CHECK(p.target_label == "v1.2");
  CHECK(to_string(p.items[1]) == "add %6 inc");
  CHECK(parse_patch(serialize_patch(p)) == p);

  CHECK(parse_patch("").items.empty());
  for (const char* bad : {"add 6 inc", "add %x inc", "add %6", "mod %3", "swap %1", "del %0", "add %-1 inc",
                          "add %2 bogus"}) {
    CAPTURE(bad);
    CHECK(failure([&] { parse_patch(bad); }) == ErrorKind::Parse);
  }
}

TEST_CASE("range") {
  MethodMap m = code({{1, "pop"}, {2, "inc"}, {3, "add"}});
  CHECK(text(range(m, 2, 3)) == "2: inc\n3: add");
  CHECK(text(range(m, 2, 2)) == "2: inc");
  CHECK(range(code({{1, "pop"}}), 5, 9).empty());
  CHECK(range(m, 2, 3).pc_max() == 2);
  CHECK(failure([&] { range(m, 3, 2); }) == ErrorKind::InvertedRange);
}

TEST_CASE("shift") {
  MethodMap m = code({{1, "load x"}, {2, "inc"}, {3, "store x"}});
  CHECK(text(shift(m, 2, 3, 1)) == "1: load x\n3: inc\n4: store x");
  CHECK(shift(m, 1, 3, 0) == m);
  CHECK(failure([&] { shift(code({{1, "pop"}, {2, "inc"}}), 2, 2, -1); }) == ErrorKind::Collision);
  CHECK(failure([&] { shift(m, 1, 1, -1); }) == ErrorKind::InvalidLine);
  CHECK(failure([&] { shift(m, 3, 1, 1); }) == ErrorKind::InvertedRange);
  MethodMap jumps = code({{1, "goto 2"}, {2, "inc"}});
  CHECK(text(shift(jumps, 2, 2, 3)) == "1: goto 2\n5: inc");
}

TEST_CASE("look_for_jumps") {
  CHECK(look_for_jumps(code({{1, "goto 3"}, {2, "inc"}, {3, "if 1"}})) == std::vector<Line>{1, 3});
  CHECK(look_for_jumps(code({{1, "inc"}})).empty());
  CHECK(look_for_jumps(code({{5, "if 5"}})) == std::vector<Line>{5});
}

TEST_CASE("update_jumps") {
  MethodMap m = code({{1, "goto 4"}, {4, "inc"}});
  std::vector<Line> j{1};
  CHECK(text(update_jumps(m, j, 3, 1)) == "1: goto 5\n4: inc");
  CHECK(update_jumps(m, j, 3, 0) == m);
  MethodMap below = code({{1, "goto 2"}, {2, "inc"}});
  CHECK(update_jumps(below, j, 3, 1) == below);
  std::vector<Line> wrong{4};
  CHECK(failure([&] { update_jumps(m, wrong, 1, 1); }) == ErrorKind::InvalidLine);
}

TEST_CASE("apply_add") {
  CHECK(text(apply_add(code({{1, "load x"}, {2, "store y"}}), op::Inc{}, 2)) == "1: load x\n2: inc\n3: store y");
  CHECK(text(apply_add(MethodMap{}, op::Pop{}, 1)) == "1: pop");
  CHECK(text(apply_add(code({{1, "goto 2"}, {2, "inc"}}), op::Pop{}, 2)) == "1: goto 3\n2: pop\n3: inc");
  // Appending after the last line.
  CHECK(text(apply_add(code({{1, "inc"}}), op::Pop{}, 2)) == "1: inc\n2: pop");
  // An inserted jump names a line of the result.
  CHECK(text(apply_add(code({{1, "inc"}, {2, "pop"}}), op::Goto{3}, 1)) == "1: goto 3\n2: inc\n3: pop");

  MethodMap m = code({{1, "load x"}, {2, "store y"}});
  CHECK(apply_add(m, parse_instruction("getfield A f int"), 2).pc_max() == m.pc_max() + 3);
  CHECK(failure([&] { apply_add(m, op::Inc{}, 4); }) == ErrorKind::InvalidLine);
  CHECK(failure([&] { apply_add(m, op::Inc{}, 0); }) == ErrorKind::InvalidLine);
  CHECK(failure([&] { apply_add(m, op::Goto{9}, 1); }) == ErrorKind::DanglingTarget);
}

TEST_CASE("apply_delete") {
  CHECK(text(apply_delete(code({{1, "load x"}, {2, "inc"}, {3, "store y"}}), 2)) == "1: load x\n2: store y");
  CHECK(apply_delete(code({{1, "pop"}}), 1).empty());
  CHECK(text(apply_delete(code({{1, "goto 3"}, {2, "inc"}, {3, "pop"}}), 2)) == "1: goto 2\n2: pop");
  CHECK(apply_delete(code({{1, "getfield A f int"}, {2, "pop"}}), 1).pc_max() == 1);
  CHECK(failure([&] { apply_delete(code({{1, "goto 2"}, {2, "pop"}}), 2); }) == ErrorKind::JumpIntoDeleted);
  CHECK(failure([&] { apply_delete(code({{1, "pop"}}), 2); }) == ErrorKind::InvalidLine);
  // A jump to itself goes away with its line.
  CHECK(text(apply_delete(code({{1, "inc"}, {2, "goto 2"}}), 2)) == "1: inc");
}

TEST_CASE("apply_modify") {
  CHECK(text(apply_modify(code({{1, "inc"}}), op::Pop{}, 1)) == "1: pop");
  MethodMap m = code({{1, "pop"}, {2, "inc"}});
  CHECK(apply_modify(m, op::Inc{}, 2) == m);
  CHECK(text(apply_modify(m, op::Goto{1}, 2)) == "1: pop\n2: goto 1");
  CHECK(apply_modify(m, parse_instruction("putfield A f int"), 2).pc_max() == 4);
  CHECK(failure([&] { apply_modify(m, op::Goto{7}, 2); }) == ErrorKind::DanglingTarget);
  CHECK(failure([&] { apply_modify(m, op::Inc{}, 3); }) == ErrorKind::InvalidLine);
}

TEST_CASE("apply_patch folds in order with post-state addressing") {
  MethodMap m = code({{1, "load x"}, {2, "store y"}});
  CHECK(apply_patch(m, Patch{}).base == m);

  Patch p{{UpdateInstr::add(op::Inc{}, 2), UpdateInstr::del(1)}, "", ""};
  AnnotatedMethod am = apply_patch(m, p);
  CHECK(text(am.base) == "# vars x\n1: inc\n2: store y");
  REQUIRE(am.origins.size() == 2);
  CHECK(am.origins[0].added_by == 0u);
  CHECK(am.origins[1].original_line == 2);
  REQUIRE(am.annotations.size() == 2);
  CHECK(am.annotations[1].previous == Instruction{op::Load{"x"}});
  CHECK(am.annotations[1].original_line == 1);

  try {
    apply_patch(code({{1, "pop"}}), Patch{{UpdateInstr::del(7)}, "", ""});
    FAIL("expected InvalidLine");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidLine);
    CHECK(e.item() == 0u);
  }
  try {
    apply_patch(m, Patch{{UpdateInstr::add(op::Inc{}, 1), UpdateInstr::del(1, op::Pop{})}, "", ""});
    FAIL("expected MismatchedDelete");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MismatchedDelete);
    CHECK(e.item() == 1u);
  }
}

TEST_CASE("modify keeps the origin and records the edit") {
  AnnotatedMethod am = apply_patch(code({{1, "inc"}, {2, "pop"}}), Patch{{UpdateInstr::modify(op::Add{}, 2)}, "", ""});
  CHECK(am.origins[1].modified_by == 0u);
  CHECK(am.origins[1].original_line == 2);
  CHECK(am.annotations[0].previous == Instruction{op::Pop{}});
}

TEST_CASE("fault switches change behaviour") {
  MethodMap m = code({{1, "goto 2"}, {2, "inc"}});
  EditFaults skip;
  skip.skip_jump_retarget = true;
  CHECK(text(apply_add(m, op::Pop{}, 2, skip)) == "1: goto 2\n2: pop\n3: inc");
  EditFaults misplace;
  misplace.misplace_shift = true;
  CHECK(text(apply_add(code({{1, "load x"}, {2, "store y"}}), op::Inc{}, 2, misplace)) != "1: load x\n2: inc\n3: store y");
}
