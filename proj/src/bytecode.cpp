#include "patchverify/bytecode.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "text_util.hpp"

namespace patchverify {

TypeDesc TypeDesc::class_type(std::string name) {
  if (!is_identifier(name)) throw Error(ErrorKind::Parse, "invalid class name '" + name + "'");
  return TypeDesc(Kind::Class, std::move(name));
}

std::string TypeDesc::to_string() const {
  switch (kind_) {
    case Kind::Int: return "int";
    case Kind::Top: return "top";
    case Kind::Class: return name_;
  }
  return "?";
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  auto head = static_cast<unsigned char>(text.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(text.begin(), text.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

TypeDesc parse_type(std::string_view text) {
  text = detail::trim(text);
  if (text == "int") return TypeDesc::integer();
  if (text == "top") return TypeDesc::top();
  if (text == "void") throw Error(ErrorKind::Parse, "'void' is not a value type");
  return TypeDesc::class_type(std::string(text));
}

// ---------------------------------------------------------------------------
// ClassHierarchy

ClassHierarchy ClassHierarchy::parse(std::string_view text) {
  ClassHierarchy h;
  int lineno = 0;
  for (std::string_view raw : detail::split_lines(text)) {
    ++lineno;
    std::string_view line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    auto words = detail::split_ws(line);
    if (words.size() != 3 || words[1] != "extends" || !is_identifier(words[0]) ||
        !is_identifier(words[2])) {
      throw Error(ErrorKind::Parse, "expected 'B extends A'", lineno);
    }
    try {
      h.add_extends(std::string(words[0]), std::string(words[2]));
    } catch (const Error& e) {
      throw Error(ErrorKind::Parse, e.message(), lineno);
    }
  }
  return h;
}

void ClassHierarchy::add_extends(const std::string& child, const std::string& parent) {
  if (child == parent || is_subclass(parent, child)) {
    throw Error(ErrorKind::Parse, "cyclic inheritance between " + child + " and " + parent);
  }
  auto [it, inserted] = parent_.emplace(child, parent);
  if (!inserted && it->second != parent) {
    throw Error(ErrorKind::Parse, child + " already extends " + it->second);
  }
}

std::vector<std::string> ClassHierarchy::ancestors(const std::string& cls) const {
  std::vector<std::string> chain{cls};
  for (auto it = parent_.find(cls); it != parent_.end(); it = parent_.find(it->second)) {
    chain.push_back(it->second);
  }
  return chain;
}

bool ClassHierarchy::is_subclass(const std::string& sub, const std::string& super) const {
  auto chain = ancestors(sub);
  return std::find(chain.begin(), chain.end(), super) != chain.end();
}

bool ClassHierarchy::is_subtype(const TypeDesc& sub, const TypeDesc& super) const {
  if (super.is_top() || sub == super) return true;
  if (sub.is_class() && super.is_class()) return is_subclass(sub.class_name(), super.class_name());
  return false;
}

TypeDesc ClassHierarchy::lub(const TypeDesc& a, const TypeDesc& b) const {
  if (a == b) return a;
  if (a.is_class() && b.is_class()) {
    auto left = ancestors(a.class_name());
    for (const auto& cls : ancestors(b.class_name())) {
      if (std::find(left.begin(), left.end(), cls) != left.end()) return TypeDesc::class_type(cls);
    }
  }
  return TypeDesc::top();
}

// ---------------------------------------------------------------------------
// Instructions

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string signature_text(const Signature& sig) {
  std::string out = "(";
  for (std::size_t k = 0; k < sig.args.size(); ++k) {
    if (k) out += ",";
    out += sig.args[k].to_string();
  }
  out += ")->";
  out += sig.result ? sig.result->to_string() : "void";
  return out;
}

Signature parse_signature(std::string_view text) {
  std::string compact;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
  }
  auto close = compact.find(')');
  if (compact.empty() || compact.front() != '(' || close == std::string::npos) {
    throw Error(ErrorKind::Parse, "malformed signature '" + std::string(text) + "'");
  }
  Signature sig;
  std::string_view args = std::string_view(compact).substr(1, close - 1);
  if (!args.empty()) {
    std::size_t start = 0;
    while (true) {
      auto comma = args.find(',', start);
      sig.args.push_back(parse_type(args.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  std::string_view rest = std::string_view(compact).substr(close + 1);
  if (rest.substr(0, 2) != "->") {
    throw Error(ErrorKind::Parse, "signature needs '->' result, e.g. (int)->void");
  }
  rest.remove_prefix(2);
  if (rest != "void") sig.result = parse_type(rest);
  return sig;
}

Line parse_line_number(std::string_view text) {
  Line value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 1) {
    throw Error(ErrorKind::Parse, "invalid line number '" + std::string(text) + "'");
  }
  return value;
}

std::string parse_var(std::string_view text) {
  if (!is_identifier(text)) throw Error(ErrorKind::Parse, "invalid variable '" + std::string(text) + "'");
  // s0, s1, ... name operand-stack slots in assertions.
  if (text.size() > 1 && text[0] == 's' &&
      std::all_of(text.begin() + 1, text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw Error(ErrorKind::Parse, "variable name '" + std::string(text) + "' is reserved for stack slots");
  }
  return std::string(text);
}

std::string parse_name(std::string_view text, const char* what) {
  if (!is_identifier(text)) {
    throw Error(ErrorKind::Parse, std::string("invalid ") + what + " '" + std::string(text) + "'");
  }
  return std::string(text);
}

}  // namespace

std::string_view mnemonic(const Instruction& instr) {
  static constexpr std::string_view names[] = {"pop",  "if",  "store", "load",
                                               "new",  "goto", "inc",  "add",
                                               "invokevirtual", "getfield", "putfield"};
  return names[instr.index()];
}

std::string to_string(const Instruction& instr) {
  return std::visit(
      overloaded{
          [](const op::Pop&) -> std::string { return "pop"; },
          [](const op::If& i) { return "if " + std::to_string(i.target); },
          [](const op::Store& i) { return "store " + i.var; },
          [](const op::Load& i) { return "load " + i.var; },
          [](const op::New& i) { return "new " + i.cls; },
          [](const op::Goto& i) { return "goto " + std::to_string(i.target); },
          [](const op::Inc&) -> std::string { return "inc"; },
          [](const op::Add&) -> std::string { return "add"; },
          [](const op::InvokeVirtual& i) {
            return "invokevirtual " + i.cls + " " + i.method + " " + signature_text(i.sig);
          },
          [](const op::GetField& i) { return "getfield " + i.cls + " " + i.field + " " + i.type.to_string(); },
          [](const op::PutField& i) { return "putfield " + i.cls + " " + i.field + " " + i.type.to_string(); },
      },
      instr);
}

Instruction parse_instruction(std::string_view text) {
  auto words = detail::split_ws(detail::trim(text));
  if (words.empty()) throw Error(ErrorKind::Parse, "missing instruction");
  std::string_view name = words[0];
  auto expect_args = [&](std::size_t n) {
    if (words.size() != n + 1) {
      throw Error(ErrorKind::Parse, std::string(name) + " takes " + std::to_string(n) + " operand(s)");
    }
  };
  if (name == "pop") { expect_args(0); return op::Pop{}; }
  if (name == "inc") { expect_args(0); return op::Inc{}; }
  if (name == "add") { expect_args(0); return op::Add{}; }
  if (name == "if") { expect_args(1); return op::If{parse_line_number(words[1])}; }
  if (name == "goto") { expect_args(1); return op::Goto{parse_line_number(words[1])}; }
  if (name == "store") { expect_args(1); return op::Store{parse_var(words[1])}; }
  if (name == "load") { expect_args(1); return op::Load{parse_var(words[1])}; }
  if (name == "new") { expect_args(1); return op::New{parse_name(words[1], "class")}; }
  if (name == "getfield" || name == "putfield") {
    expect_args(3);
    auto cls = parse_name(words[1], "class");
    auto field = parse_name(words[2], "field");
    auto type = parse_type(words[3]);
    if (name == "getfield") return op::GetField{cls, field, type};
    return op::PutField{cls, field, type};
  }
  if (name == "invokevirtual") {
    if (words.size() < 4) throw Error(ErrorKind::Parse, "invokevirtual takes A m (args)->ret");
    // The signature may contain blanks; it runs from the first '(' to the end.
    auto sig_pos = text.find('(');
    if (sig_pos == std::string_view::npos) throw Error(ErrorKind::Parse, "invokevirtual needs a signature");
    auto head = detail::split_ws(text.substr(0, sig_pos));
    if (head.size() != 3) throw Error(ErrorKind::Parse, "invokevirtual takes A m (args)->ret");
    return op::InvokeVirtual{parse_name(head[1], "class"), parse_name(head[2], "method"),
                             parse_signature(text.substr(sig_pos))};
  }
  throw Error(ErrorKind::Parse, "unknown mnemonic '" + std::string(name) + "'");
}

int instr_length(const Instruction& instr) {
  switch (instr.index()) {
    case 8:   // invokevirtual
    case 9:   // getfield
    case 10:  // putfield
      return 3;
    default:
      return 1;
  }
}

int stack_delta(const Instruction& instr) {
  return std::visit(
      overloaded{
          [](const op::Pop&) { return -1; },
          [](const op::If&) { return -1; },
          [](const op::Store&) { return -1; },
          [](const op::Load&) { return 1; },
          [](const op::New&) { return 1; },
          [](const op::Goto&) { return 0; },
          [](const op::Inc&) { return 0; },
          [](const op::Add&) { return -1; },
          [](const op::InvokeVirtual& i) { return -static_cast<int>(i.sig.args.size() + 1); },
          [](const op::GetField&) { return 0; },
          [](const op::PutField&) { return -2; },
      },
      instr);
}

bool is_jump(const Instruction& instr) {
  return std::holds_alternative<op::Goto>(instr) || std::holds_alternative<op::If>(instr);
}

std::optional<Line> jump_target(const Instruction& instr) {
  if (auto* g = std::get_if<op::Goto>(&instr)) return g->target;
  if (auto* i = std::get_if<op::If>(&instr)) return i->target;
  return std::nullopt;
}

Instruction with_target(const Instruction& instr, Line target) {
  if (std::holds_alternative<op::Goto>(instr)) return op::Goto{target};
  if (std::holds_alternative<op::If>(instr)) return op::If{target};
  return instr;
}

// ---------------------------------------------------------------------------
// MethodMap

MethodMap::MethodMap(Entries entries, std::vector<Param> params, std::set<std::string> extra_vars)
    : entries_(std::move(entries)), params_(std::move(params)), vars_(std::move(extra_vars)) {
  for (const auto& p : params_) vars_.insert(p.name);
  for (const auto& [line, instr] : entries_) {
    pc_max_ += instr_length(instr);
    if (auto* s = std::get_if<op::Store>(&instr)) vars_.insert(s->var);
    if (auto* l = std::get_if<op::Load>(&instr)) vars_.insert(l->var);
  }
}

const Instruction& MethodMap::at(Line line) const {
  auto it = entries_.find(line);
  if (it == entries_.end()) {
    throw Error(ErrorKind::InvalidLine, "line " + std::to_string(line) + " is not in the method", line);
  }
  return it->second;
}

std::set<Line> MethodMap::dom() const {
  std::set<Line> out;
  for (const auto& entry : entries_) out.insert(entry.first);
  return out;
}

Line MethodMap::last_line() const { return entries_.empty() ? 0 : entries_.rbegin()->first; }

Line MethodMap::first_line() const { return entries_.empty() ? kHalt : entries_.begin()->first; }

Line MethodMap::next_line(Line line) const {
  auto it = entries_.upper_bound(line);
  return it == entries_.end() ? kHalt : it->first;
}

void check_targets(const MethodMap& m) {
  for (const auto& [line, instr] : m.entries()) {
    if (auto target = jump_target(instr); target && !m.contains(*target)) {
      throw Error(ErrorKind::DanglingTarget,
                  "jump at line " + std::to_string(line) + " targets " + std::to_string(*target) +
                      " which is not in the method",
                  line);
    }
  }
}

std::vector<Line> successors(const MethodMap& m, Line line) {
  const Instruction& instr = m.at(line);
  if (auto* g = std::get_if<op::Goto>(&instr)) return {g->target};
  std::vector<Line> out{m.next_line(line)};
  if (auto* i = std::get_if<op::If>(&instr)) {
    if (i->target != out.front()) out.push_back(i->target);
  }
  return out;
}

MethodMap canonicalize(const MethodMap& m) {
  std::map<Line, Line> renumber;
  Line next = 1;
  for (const auto& entry : m.entries()) renumber[entry.first] = next++;
  MethodMap out = m;
  MethodMap::Entries entries;
  for (const auto& [line, instr] : m.entries()) {
    Instruction copy = instr;
    if (auto target = jump_target(instr)) {
      auto it = renumber.find(*target);
      if (it != renumber.end()) copy = with_target(instr, it->second);
    }
    entries.emplace(renumber[line], std::move(copy));
  }
  out.set_entries(std::move(entries));
  return out;
}

std::vector<Instruction> instruction_sequence(const MethodMap& m) {
  std::vector<Instruction> out;
  out.reserve(m.size());
  for (const auto& entry : m.entries()) out.push_back(entry.second);
  return out;
}

namespace {

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto item = detail::trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

MethodMap parse_method(std::string_view text) {
  MethodMap::Entries entries;
  std::vector<Param> params;
  std::set<std::string> extra_vars;
  int lineno = 0;
  for (std::string_view raw : detail::split_lines(text)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    try {
      if (line.empty()) continue;
      if (line.front() == '#') {
        auto body = detail::trim(line.substr(1));
        auto words = detail::split_ws(body);
        if (!words.empty() && (words[0] == "params" || words[0] == "vars")) {
          bool is_params = words[0] == "params";
          for (auto item : split_list(body.substr(words[0].size()))) {
            if (is_params) {
              auto colon = item.find(':');
              if (colon == std::string_view::npos) {
                throw Error(ErrorKind::Parse, "parameter needs a type, e.g. x:int");
              }
              auto name = parse_var(detail::trim(item.substr(0, colon)));
              for (const auto& p : params) {
                if (p.name == name) throw Error(ErrorKind::Parse, "duplicate parameter '" + name + "'");
              }
              params.push_back({name, parse_type(item.substr(colon + 1))});
            } else {
              extra_vars.insert(parse_var(item));
            }
          }
        }
        continue;
      }
      line = detail::trim(detail::strip_comment(line));
      auto colon = line.find(':');
      if (colon == std::string_view::npos) throw Error(ErrorKind::Parse, "expected 'LINE: instruction'");
      Line label = parse_line_number(detail::trim(line.substr(0, colon)));
      if (entries.count(label)) throw Error(ErrorKind::Parse, "duplicate line " + std::to_string(label));
      entries.emplace(label, parse_instruction(line.substr(colon + 1)));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Parse || e.line()) throw;
      throw e.with_line(lineno);
    }
  }
  MethodMap m(std::move(entries), std::move(params), std::move(extra_vars));
  check_targets(m);
  return m;
}

std::string serialize_method(const MethodMap& m) {
  std::vector<std::string> lines;
  if (!m.params().empty()) {
    std::string header = "# params ";
    for (std::size_t k = 0; k < m.params().size(); ++k) {
      if (k) header += ", ";
      header += m.params()[k].name + ":" + m.params()[k].type.to_string();
    }
    lines.push_back(header);
  }
  std::set<std::string> implicit;
  for (const auto& p : m.params()) implicit.insert(p.name);
  for (const auto& [line, instr] : m.entries()) {
    if (auto* s = std::get_if<op::Store>(&instr)) implicit.insert(s->var);
    if (auto* l = std::get_if<op::Load>(&instr)) implicit.insert(l->var);
  }
  std::vector<std::string> extra;
  for (const auto& v : m.vars()) {
    if (!implicit.count(v)) extra.push_back(v);
  }
  if (!extra.empty()) {
    std::string header = "# vars ";
    for (std::size_t k = 0; k < extra.size(); ++k) header += (k ? ", " : "") + extra[k];
    lines.push_back(header);
  }
  for (const auto& [line, instr] : m.entries()) {
    lines.push_back(std::to_string(line) + ": " + to_string(instr));
  }
  std::string out;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    if (k) out += '\n';
    out += lines[k];
  }
  return out;
}

}  // namespace patchverify
