#include "patchverify/patch.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <iterator>

#include "text_util.hpp"

namespace patchverify {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Line parse_pc(std::string_view word) {
  if (word.size() < 2 || word.front() != '%') {
    throw Error(ErrorKind::Parse, "expected %PC, got '" + std::string(word) + "'");
  }
  Line value = 0;
  auto body = word.substr(1);
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc() || ptr != body.data() + body.size() || value < 1) {
    throw Error(ErrorKind::Parse, "invalid program counter '" + std::string(word) + "'");
  }
  return value;
}

std::string line_str(Line l) { return std::to_string(l); }

}  // namespace

std::string to_string(const UpdateInstr& u) {
  std::string pc = " %" + line_str(u.at);
  switch (u.kind) {
    case UpdateInstr::Kind::Add: return "add" + pc + " " + to_string(*u.instr);
    case UpdateInstr::Kind::Modify: return "mod" + pc + " " + to_string(*u.instr);
    case UpdateInstr::Kind::Delete: return "del" + pc + (u.instr ? " " + to_string(*u.instr) : "");
  }
  return {};
}

Patch parse_patch(std::string_view text) {
  Patch patch;
  int lineno = 0;
  for (std::string_view raw : detail::split_lines(text)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto words = detail::split_ws(line.substr(1));
      if (words.size() == 2 && words[0] == "source") patch.source_label = std::string(words[1]);
      if (words.size() == 2 && words[0] == "target") patch.target_label = std::string(words[1]);
      continue;
    }
    line = detail::trim(detail::strip_comment(line));
    try {
      auto words = detail::split_ws(line);
      if (words.size() < 2) throw Error(ErrorKind::Parse, "expected 'add|del|mod %PC [INSTR]'");
      std::string keyword = lower(words[0]);
      Line at = parse_pc(words[1]);
      auto instr_pos = static_cast<std::size_t>(words[1].data() + words[1].size() - line.data());
      std::string_view rest = detail::trim(line.substr(instr_pos));
      if (keyword == "add" || keyword == "mod") {
        if (rest.empty()) throw Error(ErrorKind::Parse, keyword + " needs an instruction");
        auto instr = parse_instruction(rest);
        patch.items.push_back(keyword == "add" ? UpdateInstr::add(std::move(instr), at)
                                               : UpdateInstr::modify(std::move(instr), at));
      } else if (keyword == "del") {
        std::optional<Instruction> expected;
        if (!rest.empty()) expected = parse_instruction(rest);
        patch.items.push_back(UpdateInstr::del(at, std::move(expected)));
      } else {
        throw Error(ErrorKind::Parse, "unknown update keyword '" + std::string(words[0]) + "'");
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Parse || e.line()) throw;
      throw e.with_line(lineno);
    }
  }
  return patch;
}

std::string serialize_patch(const Patch& p) {
  std::string out;
  if (!p.source_label.empty()) out += "# source " + p.source_label + "\n";
  if (!p.target_label.empty()) out += "# target " + p.target_label + "\n";
  for (const auto& item : p.items) out += to_string(item) + "\n";
  return out;
}

MethodMap range(const MethodMap& m, Line n, Line m_hi) {
  if (n > m_hi) {
    throw Error(ErrorKind::InvertedRange, "range [" + line_str(n) + ", " + line_str(m_hi) + "] is inverted");
  }
  MethodMap out = m;
  MethodMap::Entries entries(m.entries().lower_bound(n), m.entries().upper_bound(m_hi));
  int size = 0;
  for (const auto& entry : entries) size += instr_length(entry.second);
  out.set_entries(std::move(entries));
  out.set_pc_max(size);
  return out;
}

MethodMap shift(const MethodMap& m, Line n, Line m_hi, int p) {
  if (n > m_hi) {
    throw Error(ErrorKind::InvertedRange, "shift range [" + line_str(n) + ", " + line_str(m_hi) + "] is inverted");
  }
  if (p == 0) return m;
  MethodMap::Entries moved;
  MethodMap::Entries kept;
  for (const auto& [line, instr] : m.entries()) {
    if (line >= n && line <= m_hi) {
      if (line + p < 1) {
        throw Error(ErrorKind::InvalidLine, "line " + line_str(line) + " would move below 1", line);
      }
      moved.emplace(line + p, instr);
    } else {
      kept.emplace(line, instr);
    }
  }
  for (const auto& [line, instr] : moved) {
    if (kept.count(line)) {
      throw Error(ErrorKind::Collision, "shifted entry lands on occupied line " + line_str(line), line);
    }
    kept.emplace(line, instr);
  }
  MethodMap out = m;
  out.set_entries(std::move(kept));
  return out;
}

std::vector<Line> look_for_jumps(const MethodMap& m) {
  std::vector<Line> out;
  for (const auto& [line, instr] : m.entries()) {
    if (is_jump(instr)) out.push_back(line);
  }
  return out;
}

MethodMap update_jumps(const MethodMap& m, std::span<const Line> jumps, Line pivot, int delta) {
  MethodMap out = m;
  if (delta == 0) return out;
  for (Line j : jumps) {
    const Instruction& instr = m.at(j);
    auto target = jump_target(instr);
    if (!target) throw Error(ErrorKind::InvalidLine, "line " + line_str(j) + " is not a jump", j);
    if (*target >= pivot) out.set(j, with_target(instr, *target + delta));
  }
  return out;
}

MethodMap apply_add(const MethodMap& m, const Instruction& x, Line at, const EditFaults& faults) {
  const Line last = m.last_line();
  if (at < 1 || at > last + 1) {
    throw Error(ErrorKind::InvalidLine,
                "cannot insert at line " + line_str(at) + " (method ends at " + line_str(last) + ")", at);
  }
  const auto jumps = look_for_jumps(m);
  MethodMap out = m;
  const Line first_moved = faults.misplace_shift ? at + 1 : at;
  if (first_moved <= last) out = shift(m, first_moved, last, +1);
  out.set(at, x);
  if (!faults.skip_jump_retarget) {
    std::vector<Line> moved;
    for (Line j : jumps) {
      Line now = j >= first_moved ? j + 1 : j;
      if (now != at) moved.push_back(now);
    }
    out = update_jumps(out, moved, at, +1);
  }
  out.set_pc_max(m.pc_max() + instr_length(x));
  if (auto target = jump_target(x); target && !out.contains(*target)) {
    throw Error(ErrorKind::DanglingTarget,
                "inserted jump targets " + line_str(*target) + " which is not in the method", at);
  }
  return out;
}

MethodMap apply_delete(const MethodMap& m, Line at, const EditFaults& faults) {
  const Instruction& victim = m.at(at);
  for (const auto& [line, instr] : m.entries()) {
    if (line != at && jump_target(instr) == at) {
      throw Error(ErrorKind::JumpIntoDeleted,
                  "line " + line_str(at) + " is the target of the jump at line " + line_str(line), at);
    }
  }
  std::vector<Line> moved;
  for (Line j : look_for_jumps(m)) {
    if (j != at) moved.push_back(j > at ? j - 1 : j);
  }
  MethodMap out = m;
  out.erase(at);
  const Line last = m.last_line();
  if (at + 1 <= last) out = shift(out, at + 1, last, -1);
  if (!faults.skip_jump_retarget) out = update_jumps(out, moved, at + 1, -1);
  out.set_pc_max(m.pc_max() - instr_length(victim));
  return out;
}

MethodMap apply_modify(const MethodMap& m, const Instruction& x, Line at) {
  const Instruction& old = m.at(at);
  MethodMap out = m;
  out.set(at, x);
  out.set_pc_max(m.pc_max() - instr_length(old) + instr_length(x));
  if (auto target = jump_target(x); target && !out.contains(*target)) {
    throw Error(ErrorKind::DanglingTarget,
                "modified jump targets " + line_str(*target) + " which is not in the method", at);
  }
  return out;
}

MethodMap apply_update(const MethodMap& m, const UpdateInstr& u, const EditFaults& faults) {
  switch (u.kind) {
    case UpdateInstr::Kind::Add:
      return apply_add(m, *u.instr, u.at, faults);
    case UpdateInstr::Kind::Modify:
      return apply_modify(m, *u.instr, u.at);
    case UpdateInstr::Kind::Delete:
      if (u.instr && m.contains(u.at) && !(m.at(u.at) == *u.instr)) {
        throw Error(ErrorKind::MismatchedDelete,
                    "expected '" + to_string(*u.instr) + "' at line " + line_str(u.at) + " but found '" +
                        to_string(m.at(u.at)) + "'",
                    u.at);
      }
      return apply_delete(m, u.at, faults);
  }
  return m;
}

AnnotatedMethod apply_patch(const MethodMap& m, const Patch& p, const EditFaults& faults) {
  AnnotatedMethod result{m, {}, {}};
  for (const auto& [line, instr] : m.entries()) result.origins.push_back(Origin{line, {}, {}});

  for (std::size_t k = 0; k < p.items.size(); ++k) {
    const UpdateInstr& u = p.items[k];
    const MethodMap& before = result.base;
    Annotation note{k, u.at, u, std::nullopt, std::nullopt};
    auto index = static_cast<std::size_t>(
        std::distance(before.entries().begin(), before.entries().lower_bound(u.at)));
    try {
      MethodMap after = apply_update(before, u, faults);
      switch (u.kind) {
        case UpdateInstr::Kind::Add:
          result.origins.insert(result.origins.begin() + static_cast<std::ptrdiff_t>(index),
                                Origin{std::nullopt, k, std::nullopt});
          break;
        case UpdateInstr::Kind::Delete:
          note.previous = before.at(u.at);
          note.original_line = result.origins[index].original_line;
          result.origins.erase(result.origins.begin() + static_cast<std::ptrdiff_t>(index));
          break;
        case UpdateInstr::Kind::Modify:
          note.previous = before.at(u.at);
          note.original_line = result.origins[index].original_line;
          result.origins[index].modified_by = k;
          break;
      }
      result.base = std::move(after);
    } catch (const Error& e) {
      throw e.with_item(k);
    }
    if (result.origins.size() != result.base.size()) result.origins.assign(result.base.size(), Origin{});
    result.annotations.push_back(std::move(note));
  }
  return result;
}

}  // namespace patchverify
