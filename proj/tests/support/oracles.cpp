#include "oracles.hpp"

#include <algorithm>

namespace testsupport {

IdentityCode identify(const MethodMap& m) {
  IdentityCode c;
  Line expect = 1;
  for (const auto& [line, instr] : m.entries()) {
    if (line != expect++) throw Error(ErrorKind::InvalidLine, "identify needs lines numbered 1..n");
    c.order.push_back(line);
    c.code.emplace(line, instr);
    if (auto t = jump_target(instr)) c.target[line] = *t;
  }
  return c;
}

namespace {

bool falls_through(const Instruction& instr) { return !std::holds_alternative<op::Goto>(instr); }

int id_after(const IdentityCode& c, std::size_t pos) {
  return pos + 1 < c.order.size() ? c.order[pos + 1] : kHaltId;
}

std::size_t position(const IdentityCode& c, int id) {
  return static_cast<std::size_t>(std::find(c.order.begin(), c.order.end(), id) - c.order.begin());
}

}  // namespace

Edges edges(const IdentityCode& c) {
  Edges out;
  for (std::size_t pos = 0; pos < c.order.size(); ++pos) {
    int id = c.order[pos];
    const Instruction& instr = c.code.at(id);
    if (falls_through(instr)) out.emplace(id, id_after(c, pos));
    if (auto it = c.target.find(id); it != c.target.end()) out.emplace(id, it->second);
  }
  return out;
}

Prediction predict(const IdentityCode& before, const UpdateInstr& item, int fresh_id) {
  Prediction p{before, std::nullopt};
  IdentityCode& c = p.after;
  const auto len = static_cast<Line>(c.order.size());
  if (item.kind == UpdateInstr::Kind::Add) {
    if (item.at < 1 || item.at > len + 1) {
      p.error = ErrorKind::InvalidLine;
      return p;
    }
    c.order.insert(c.order.begin() + (item.at - 1), fresh_id);
    c.code.emplace(fresh_id, *item.instr);
    if (auto t = jump_target(*item.instr)) {
      if (*t < 1 || *t > len + 1) {
        p.error = ErrorKind::DanglingTarget;
        return p;
      }
      c.target[fresh_id] = c.order[static_cast<std::size_t>(*t - 1)];
    }
    return p;
  }
  if (item.kind == UpdateInstr::Kind::Delete) {
    if (item.at < 1 || item.at > len) {
      p.error = ErrorKind::InvalidLine;
      return p;
    }
    int gone = c.order[static_cast<std::size_t>(item.at - 1)];
    Instruction found = c.code.at(gone);
    if (auto it = c.target.find(gone); it != c.target.end()) {
      found = with_target(found, static_cast<Line>(position(c, it->second) + 1));
    }
    if (item.instr && !(*item.instr == found)) {
      p.error = ErrorKind::MismatchedDelete;
      return p;
    }
    for (const auto& [from, to] : c.target) {
      if (to == gone && from != gone) {
        p.error = ErrorKind::JumpIntoDeleted;
        return p;
      }
    }
    c.order.erase(c.order.begin() + (item.at - 1));
    c.code.erase(gone);
    c.target.erase(gone);
    return p;
  }
  throw Error(ErrorKind::InvalidLine, "the identity oracle covers add and delete only");
}

Edges expected_edges(const IdentityCode& before, const UpdateInstr& item, int fresh_id) {
  Edges e = edges(before);
  const auto pos = static_cast<std::size_t>(item.at - 1);
  if (item.kind == UpdateInstr::Kind::Add) {
    int next = pos < before.order.size() ? before.order[pos] : kHaltId;
    if (pos > 0) {
      int pred = before.order[pos - 1];
      if (falls_through(before.code.at(pred))) {
        if (!before.target.count(pred) || before.target.at(pred) != next) e.erase({pred, next});
        e.emplace(pred, fresh_id);
      }
    }
    if (falls_through(*item.instr)) e.emplace(fresh_id, next);
    if (auto t = jump_target(*item.instr)) {
      IdentityCode tmp = before;
      tmp.order.insert(tmp.order.begin() + static_cast<std::ptrdiff_t>(pos), fresh_id);
      e.emplace(fresh_id, tmp.order[static_cast<std::size_t>(*t - 1)]);
    }
    return e;
  }
  int gone = before.order[pos];
  int next = id_after(before, pos);
  std::erase_if(e, [&](const auto& edge) { return edge.first == gone || edge.second == gone; });
  if (pos > 0) {
    int pred = before.order[pos - 1];
    if (falls_through(before.code.at(pred))) e.emplace(pred, next);
  }
  return e;
}

Edges observed_edges(const MethodMap& actual, const IdentityCode& after) {
  Edges out;
  auto id_of = [&](Line line) {
    if (line == kHalt) return kHaltId;
    if (line < 1 || static_cast<std::size_t>(line) > after.order.size()) return -1;
    return after.order[static_cast<std::size_t>(line - 1)];
  };
  for (const auto& [line, instr] : actual.entries()) {
    for (Line s : successors(actual, line)) out.emplace(id_of(line), id_of(s));
    // if whose target equals its fall-through still has both edges in `edges`
    if (auto t = jump_target(instr)) out.emplace(id_of(line), id_of(*t));
  }
  return out;
}

bool same_layout(const MethodMap& actual, const IdentityCode& after) {
  if (actual.size() != after.order.size()) return false;
  std::size_t pos = 0;
  for (const auto& [line, instr] : actual.entries()) {
    if (line != static_cast<Line>(pos + 1)) return false;
    const Instruction& want = after.code.at(after.order[pos++]);
    if (jump_target(want)) {
      if (mnemonic(want) != mnemonic(instr)) return false;
    } else if (!(want == instr)) {
      return false;
    }
  }
  return true;
}

MethodMap materialize(const IdentityCode& c) {
  MethodMap::Entries entries;
  for (std::size_t pos = 0; pos < c.order.size(); ++pos) {
    int id = c.order[pos];
    Instruction instr = c.code.at(id);
    if (auto it = c.target.find(id); it != c.target.end()) {
      instr = with_target(instr, static_cast<Line>(position(c, it->second) + 1));
    }
    entries.emplace(static_cast<Line>(pos + 1), instr);
  }
  return MethodMap(std::move(entries));
}

}  // namespace testsupport
