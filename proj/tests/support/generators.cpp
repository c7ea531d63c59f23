#include "generators.hpp"

#include "patchverify/verifier.hpp"

namespace testsupport {

int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

ClassHierarchy test_hierarchy() { return ClassHierarchy::parse("B extends A\n"); }

std::vector<Param> test_params() {
  return {{"i", TypeDesc::integer()},
          {"j", TypeDesc::integer()},
          {"a", TypeDesc::class_type("A")},
          {"b", TypeDesc::class_type("B")}};
}

namespace {

constexpr int kMaxDepth = 3;

const std::vector<Instruction>& typed_pool() {
  static const std::vector<Instruction> pool = [] {
    std::vector<Instruction> p;
    for (const char* text :
         {"load i", "load j", "load a", "load b", "store i", "store j", "store a", "store b", "new A", "new B",
          "inc", "add", "pop", "getfield A f int", "getfield B g A", "putfield A f int", "putfield B g A",
          "invokevirtual A m (int)->void", "invokevirtual A n ()->void", "invokevirtual B k (int,A)->int"}) {
      p.push_back(parse_instruction(text));
    }
    return p;
  }();
  return pool;
}

Instruction untyped(Rng& rng, Line max_target) {
  static const char* vars[] = {"i", "j", "a", "b", "q"};
  static const char* classes[] = {"A", "B", "C"};
  Line target = pick(rng, 1, std::max<Line>(1, max_target));
  switch (pick(rng, 0, 10)) {
    case 0: return op::Pop{};
    case 1: return op::If{target};
    case 2: return op::Store{vars[pick(rng, 0, 4)]};
    case 3: return op::Load{vars[pick(rng, 0, 4)]};
    case 4: return op::New{classes[pick(rng, 0, 2)]};
    case 5: return op::Goto{target};
    case 6: return op::Inc{};
    case 7: return op::Add{};
    case 8: return parse_instruction(chance(rng, 0.5) ? "invokevirtual A m (int)->void" : "invokevirtual C m ()->void");
    case 9: return parse_instruction(chance(rng, 0.5) ? "getfield A f int" : "getfield C h int");
    default: return parse_instruction(chance(rng, 0.5) ? "putfield A f int" : "putfield B g A");
  }
}

std::set<std::string> declared() {
  std::set<std::string> out;
  for (const auto& p : test_params()) out.insert(p.name);
  return out;
}

TypeDesc declared_type(const std::string& var) {
  for (const auto& p : test_params()) {
    if (p.name == var) return p.type;
  }
  return TypeDesc::top();
}

// Candidates from the typed pool whose transfer succeeds and stays shallow.
std::vector<std::pair<Instruction, TypeState>> fitting(const TypeState& st) {
  static const ClassHierarchy classes = test_hierarchy();
  static const std::set<std::string> vars = declared();
  std::vector<std::pair<Instruction, TypeState>> out;
  for (const auto& instr : typed_pool()) {
    try {
      TypeState next = transfer_instr(instr, st, classes, kHalt, &vars);
      // Locals keep their declared type so that joins never widen them.
      if (auto* store = std::get_if<op::Store>(&instr); store && !(st.stack[0] == declared_type(store->var))) {
        continue;
      }
      if (next.depth <= kMaxDepth) out.emplace_back(instr, std::move(next));
    } catch (const Error&) {
    }
  }
  return out;
}

TypeState state_for(const std::vector<TypeDesc>& stack) {
  TypeState st;
  for (const auto& p : test_params()) st.locals[p.name] = p.type;
  st.stack = stack;
  st.depth = static_cast<int>(stack.size());
  return st;
}

}  // namespace

Instruction random_instruction(Rng& rng, const std::vector<TypeDesc>& stack, bool typed, Line max_target) {
  if (!typed) return untyped(rng, max_target);
  Line target = pick(rng, 1, std::max<Line>(1, max_target));
  if (stack.empty() && chance(rng, 0.1)) return op::Goto{target};
  if (stack.size() == 1 && stack[0].is_int() && chance(rng, 0.2)) return op::If{target};
  auto options = fitting(state_for(stack));
  if (options.empty()) return untyped(rng, max_target);
  return options[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(options.size()) - 1))].first;
}

MethodMap random_method(Rng& rng, const MethodOptions& options) {
  const int len = pick(rng, options.min_len, options.max_len);
  MethodMap::Entries entries;
  std::vector<Line> calm;  // lines entered with an empty stack
  std::vector<Line> jumps;
  TypeState st = state_for({});
  for (Line line = 1; line <= len; ++line) {
    if (st.depth == 0) calm.push_back(line);
    if (chance(rng, options.noise)) {
      Instruction instr = untyped(rng, len);
      entries.emplace(line, instr);
      try {
        st = transfer_instr(instr, st, test_hierarchy(), line, nullptr);
      } catch (const Error&) {
        st = state_for({});
      }
      continue;
    }
    if (options.branches && st.depth == 0 && line < len && chance(rng, 0.08)) {
      entries.emplace(line, op::Goto{1});
      jumps.push_back(line);
      continue;
    }
    if (options.branches && st.depth == 1 && st.stack[0].is_int() && chance(rng, 0.35)) {
      entries.emplace(line, op::If{1});
      jumps.push_back(line);
      st = state_for({});
      continue;
    }
    auto fits = fitting(st);
    auto& [instr, next] = fits[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(fits.size()) - 1))];
    entries.emplace(line, instr);
    st = next;
  }
  for (Line j : jumps) {
    Line target = calm[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(calm.size()) - 1))];
    entries[j] = with_target(entries[j], target);
  }
  return MethodMap(std::move(entries), test_params());
}

Patch random_patch(Rng& rng, const MethodMap& m, const PatchOptions& options) {
  Patch patch;
  MethodMap current = m;
  const int count = pick(rng, 1, options.max_items);
  for (int k = 0; k < count; ++k) {
    std::vector<UpdateInstr::Kind> kinds;
    if (options.adds) kinds.push_back(UpdateInstr::Kind::Add);
    if (!current.empty() && options.deletes) kinds.push_back(UpdateInstr::Kind::Delete);
    if (!current.empty() && options.modifies) kinds.push_back(UpdateInstr::Kind::Modify);
    if (kinds.empty()) break;
    auto kind = kinds[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(kinds.size()) - 1))];

    std::optional<VSem> sem;
    try {
      sem = verify_method(current, entry_state(current), test_hierarchy());
    } catch (const Error&) {
    }
    auto stack_at = [&](Line line) -> std::vector<TypeDesc> {
      if (!sem) return {};
      if (line > current.last_line()) return sem->exit ? sem->exit->stack : std::vector<TypeDesc>{};
      auto it = sem->states.find(line);
      if (it == sem->states.end() || !it->second) return {};
      return it->second->stack;
    };

    const Line last = current.last_line();
    UpdateInstr item = UpdateInstr::del(1);
    if (kind == UpdateInstr::Kind::Add) {
      Line at = pick(rng, 1, last + 1);
      item = UpdateInstr::add(random_instruction(rng, stack_at(at), chance(rng, options.typed), last + 1), at);
    } else if (kind == UpdateInstr::Kind::Modify) {
      Line at = pick(rng, 1, last);
      item = UpdateInstr::modify(random_instruction(rng, stack_at(at), chance(rng, options.typed), last), at);
    } else {
      std::set<Line> targets;
      for (const auto& [line, instr] : current.entries()) {
        if (auto t = jump_target(instr); t && *t != line) targets.insert(*t);
      }
      std::vector<Line> safe;
      for (Line line = 1; line <= last; ++line) {
        if (!targets.count(line)) safe.push_back(line);
      }
      Line at = (!safe.empty() && chance(rng, options.avoid_targets))
                    ? safe[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(safe.size()) - 1))]
                    : pick(rng, 1, last);
      item = UpdateInstr::del(at, chance(rng, 0.5) ? std::optional<Instruction>(current.at(at)) : std::nullopt);
    }
    patch.items.push_back(item);
    try {
      current = apply_update(current, item);
    } catch (const Error&) {
      break;  // the patch now ends with a directive that fails
    }
  }
  return patch;
}

MethodMap random_segment(Rng& rng, int max_len, const std::vector<std::string>& vars, int entry_depth) {
  const int len = pick(rng, 1, max_len);
  MethodMap::Entries entries;
  int depth = entry_depth;
  for (Line line = 1; line <= len; ++line) {
    std::vector<int> choices = {0, 5};  // load, goto
    if (depth >= 1) choices.insert(choices.end(), {1, 2, 3});
    if (depth >= 2) choices.push_back(4);
    if (depth >= 4) choices.erase(choices.begin());
    if (line == len) std::erase(choices, 5);
    const std::string& v = vars[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(vars.size()) - 1))];
    switch (choices[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(choices.size()) - 1))]) {
      case 0: entries.emplace(line, op::Load{v}); ++depth; break;
      case 1: entries.emplace(line, op::Inc{}); break;
      case 2: entries.emplace(line, op::Pop{}); --depth; break;
      case 3: entries.emplace(line, op::Store{v}); --depth; break;
      case 4: entries.emplace(line, op::Add{}); --depth; break;
      default: entries.emplace(line, op::Goto{line + 1}); break;
    }
  }
  return MethodMap(std::move(entries));
}

namespace {

Term random_term(Rng& rng, const std::vector<Atom>& atoms) {
  auto atom = [&] { return Term::atom(atoms[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(atoms.size()) - 1))]); };
  if (atoms.empty()) return Term::constant(pick(rng, -8, 7));
  switch (pick(rng, 0, 4)) {
    case 0: return Term::constant(pick(rng, -8, 7));
    case 1: return Term::plus(atom(), Term::constant(pick(rng, -3, 3)));
    case 2: return Term::plus(atom(), atom());
    default: return atom();
  }
}

}  // namespace

Formula random_formula(Rng& rng, const std::vector<std::string>& vars, int slots, int max_depth) {
  std::vector<Atom> atoms;
  for (const auto& v : vars) atoms.push_back(Atom::var(v));
  for (int k = 0; k < slots; ++k) atoms.push_back(Atom::stack_slot(k));
  if (max_depth <= 0 || chance(rng, 0.45)) {
    if (chance(rng, 0.05)) return chance(rng, 0.5) ? Formula::truth() : Formula::falsity();
    auto op = static_cast<CmpOp>(pick(rng, 0, 5));
    return Formula::cmp(random_term(rng, atoms), op, random_term(rng, atoms));
  }
  auto sub = [&] { return random_formula(rng, vars, slots, max_depth - 1); };
  switch (pick(rng, 0, 3)) {
    case 0: return Formula::negate(sub());
    case 1: return Formula::conj(sub(), sub());
    case 2: return Formula::disj(sub(), sub());
    default: return Formula::implies(sub(), sub());
  }
}

}  // namespace testsupport
