#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "patchverify/bytecode.hpp"
#include "patchverify/error.hpp"
#include "patchverify/patch.hpp"
#include "patchverify/predicate.hpp"
#include "patchverify/triple.hpp"
#include "patchverify/verifier.hpp"

namespace patchverify::cli {

namespace {

using nlohmann::ordered_json;

struct Options {
  std::string v1, v2, patch, spec, target_spec, hierarchy, out, emit;
  std::optional<int> bound;
  int atom_budget = 8;
  std::string format = "text";
  bool annotate = false;
};

bool structured(const Options& o) { return o.format != "text"; }

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, std::string("cannot read ") + what + " '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Parse, "cannot write '" + path + "'");
  out << text;
}

// Parse errors get the file name prepended so the user knows which input failed.
template <class F>
auto load(const std::string& path, const char* what, F parse) {
  std::string text = read_file(path, what);
  try {
    return parse(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.message(), e.line());
  }
}

BoundedOptions bounded(const Options& o) {
  BoundedOptions b;
  b.bound = o.bound.value_or(8);
  b.atom_budget = o.atom_budget;
  return b;
}

std::string render(const Assignment& a) {
  std::string out;
  for (const auto& [atom, value] : a) {
    if (!out.empty()) out += ", ";
    out += atom.to_string() + "=" + std::to_string(value);
  }
  return out;
}

ordered_json to_json(const Assignment& a) {
  ordered_json j = ordered_json::object();
  for (const auto& [atom, value] : a) j[atom.to_string()] = value;
  return j;
}

ordered_json to_json(const std::optional<TypeState>& st) {
  if (!st) return nullptr;
  ordered_json locals = ordered_json::object();
  for (const auto& [name, type] : st->locals) locals[name] = type.to_string();
  ordered_json stack = ordered_json::array();
  for (const auto& t : st->stack) stack.push_back(t.to_string());
  return {{"F", locals}, {"S", stack}, {"SD", st->depth}};
}

std::string render(const std::optional<TypeState>& st) { return st ? to_string(*st) : "unreachable"; }

ordered_json to_json(const GoalVerdict& v) {
  ordered_json j{{"name", v.name}, {"status", to_string(v.status)}};
  if (v.status == GoalStatus::Refuted) j["counterexample"] = to_json(v.counterexample);
  if (v.status == GoalStatus::Unknown) j["reason"] = v.reason;
  return j;
}

std::string render(const GoalVerdict& v) {
  std::string s = to_string(v.status);
  if (v.status == GoalStatus::Refuted) s += " (counterexample: " + render(v.counterexample) + ")";
  if (v.status == GoalStatus::Unknown) s += " (" + v.reason + ")";
  return s;
}

ordered_json envelope(const char* command, const char* status) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"status", status}};
}

// ---------------------------------------------------------------------------

int cmd_apply(const Options& o, std::ostream& out) {
  MethodMap v1 = load(o.v1, "method", parse_method);
  Patch patch = load(o.patch, "patch", parse_patch);
  AnnotatedMethod am = apply_patch(v1, patch);
  const std::string method_text = serialize_method(am.base) + "\n";
  if (!o.out.empty()) write_file(o.out, method_text);

  if (structured(o)) {
    ordered_json j = envelope("apply", "ok");
    j["items"] = patch.items.size();
    ordered_json lines = ordered_json::array();
    std::size_t k = 0;
    for (const auto& [line, instr] : am.base.entries()) {
      const Origin& org = am.origins[k++];
      ordered_json e{{"line", line}, {"instr", to_string(instr)}};
      e["origin"] = org.added_by ? "added" : org.modified_by ? "modified" : "original";
      if (org.original_line) e["original_line"] = *org.original_line;
      if (org.added_by) e["item"] = *org.added_by;
      if (org.modified_by) e["item"] = *org.modified_by;
      lines.push_back(e);
    }
    j["lines"] = lines;
    ordered_json deleted = ordered_json::array();
    for (const auto& a : am.annotations) {
      if (a.update.kind != UpdateInstr::Kind::Delete) continue;
      deleted.push_back({{"item", a.item}, {"line", a.line}, {"instr", a.previous ? to_string(*a.previous) : ""}});
    }
    j["deleted"] = deleted;
    j["pc_max"] = am.base.pc_max();
    if (o.out.empty()) j["method"] = method_text;
    out << j.dump(2) << "\n";
    return kExitOk;
  }

  if (o.out.empty() && !o.annotate) {
    out << method_text;
    return kExitOk;
  }
  out << "# " << patch.items.size() << " update(s), PC_MAX " << v1.pc_max() << " -> " << am.base.pc_max()
      << "\n";
  std::size_t k = 0;
  for (const auto& [line, instr] : am.base.entries()) {
    const Origin& org = am.origins[k++];
    std::string row = (org.added_by ? "+ " : org.modified_by ? "~ " : "  ") + std::to_string(line) + ": " +
                      to_string(instr);
    std::string note;
    if (org.added_by) {
      note = "added by item " + std::to_string(*org.added_by);
    } else if (org.modified_by) {
      note = "modified by item " + std::to_string(*org.modified_by);
      if (org.original_line && *org.original_line != line) note += ", was line " + std::to_string(*org.original_line);
    } else if (org.original_line && *org.original_line != line) {
      note = "was line " + std::to_string(*org.original_line);
    }
    if (!note.empty()) row += std::string(row.size() < 28 ? 28 - row.size() : 1, ' ') + "; " + note;
    out << row << "\n";
  }
  for (const auto& a : am.annotations) {
    if (a.update.kind != UpdateInstr::Kind::Delete) continue;
    out << "- " << a.line << ": " << (a.previous ? to_string(*a.previous) : "?") << "  ; deleted by item "
        << a.item << "\n";
  }
  if (o.out.empty()) out << "\n" << method_text;
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  ClassHierarchy classes;
  if (!o.hierarchy.empty()) classes = load(o.hierarchy, "hierarchy", ClassHierarchy::parse);
  MethodMap v1 = load(o.v1, "method", parse_method);
  Patch patch = load(o.patch, "patch", parse_patch);
  MethodMap v2 = load(o.v2, "method", parse_method);

  Configuration cfg = transfer_patch(configure(v1, entry_state(v1), classes), patch);
  VSem s12 = to_vsem(cfg);
  VSem s2 = verify_method(v2, entry_state(v2), classes);
  Verdict verdict = check_equivalence(s12, s2);

  if (structured(o)) {
    ordered_json j = envelope("verify", verdict.equivalent() ? "equivalent" : "divergent");
    ordered_json rules = ordered_json::array();
    for (const auto& r : cfg.log) {
      rules.push_back({{"item", r.item},
                       {"rule", r.rule},
                       {"line", r.at},
                       {"before", to_json(r.before)},
                       {"after", to_json(r.after)},
                       {"pc_max_delta", r.pc_max_delta}});
    }
    j["rules"] = rules;
    if (verdict.divergence) {
      const Divergence& d = *verdict.divergence;
      j["divergence"] = {{"line", d.line}, {"aspect", d.aspect}, {"expected", d.expected}, {"found", d.found}};
    }
    out << j.dump(2) << "\n";
  } else {
    for (const auto& r : cfg.log) {
      out << "item " << r.item << ": " << r.rule << " at line " << r.at << ": " << render(r.before) << " -> "
          << render(r.after) << "\n";
    }
    if (verdict.equivalent()) {
      out << "verdict: Equivalent\n";
    } else {
      const Divergence& d = *verdict.divergence;
      out << "verdict: Divergent at " << (d.line == kHalt ? std::string("exit") : "line " + std::to_string(d.line))
          << " (" << d.aspect << "): patched v1 has " << d.expected << ", v2 has " << d.found << "\n";
    }
  }
  return verdict.equivalent() ? kExitOk : kExitRefuted;
}

int cmd_triple(const Options& o, std::ostream& out) {
  MethodMap v1 = load(o.v1, "method", parse_method);
  Spec initial = load(o.spec, "spec", parse_spec);
  Patch patch = load(o.patch, "patch", parse_patch);
  Spec target = load(o.target_spec, "spec", parse_spec);

  TransformOptions topts;
  topts.bounded = bounded(o);
  TransformState state = transform_patch(initial.pre, initial.post, v1, patch, topts);
  const Triple& calc = state.current;
  ChainReport chains = check_chains(state, topts.bounded);

  Triple tgt{target.pre, calc.method, target.post, TripleKind::Target};
  if (!o.v2.empty()) tgt.method = load(o.v2, "method", parse_method);
  std::vector<GoalVerdict> goals = check_implication(calc, tgt, topts.bounded);
  ObligationSet obligations = implication_obligations(calc, tgt);
  if (!o.emit.empty()) write_file(o.emit, emit_obligations(obligations));

  bool refuted = chains.backward.status == GoalStatus::Refuted || chains.forward.status == GoalStatus::Refuted;
  for (const auto& g : goals) refuted = refuted || g.status == GoalStatus::Refuted;

  if (structured(o)) {
    ordered_json j = envelope("triple", refuted ? "refuted" : "proved");
    j["bound"] = topts.bounded.bound;
    ordered_json steps = ordered_json::array();
    for (const auto& s : state.steps) {
      steps.push_back({{"item", s.item},
                       {"line", s.at},
                       {"instr", s.instr},
                       {"wp_suffix", to_string(s.wp_suffix)},
                       {"sp_prefix", to_string(s.sp_prefix)},
                       {"pre", to_string(s.pre)},
                       {"post", to_string(s.post)}});
    }
    j["steps"] = steps;
    j["calculated"] = {{"pre", to_string(calc.pre)}, {"post", to_string(calc.post)},
                       {"method", serialize_method(calc.method)}};
    j["chains"] = {{"backward", to_json(chains.backward)},
                   {"forward", to_json(chains.forward)},
                   {"gap", to_json(chains.gap)}};
    ordered_json gj = ordered_json::array();
    for (const auto& g : goals) gj.push_back(to_json(g));
    j["goals"] = gj;
    out << j.dump(2) << "\n";
  } else {
    for (const auto& s : state.steps) {
      out << "step " << s.item << ": add " << s.instr << " at line " << s.at << "\n";
      out << "  wp of suffix:  " << to_string(s.wp_suffix) << "\n";
      out << "  sp of prefix:  " << to_string(s.sp_prefix) << "\n";
    }
    out << "calculated pre:  " << to_string(calc.pre) << "\n";
    out << "calculated post: " << to_string(calc.post) << "\n";
    out << "chain backward (pre => wp(method, initial post)): " << render(chains.backward) << "\n";
    out << "chain forward (sp(initial pre, method) => post): " << render(chains.forward) << "\n";
    if (chains.gap.status != GoalStatus::Proved) {
      out << "warning: calculated pre does not establish calculated post: " << render(chains.gap) << "\n";
    }
    out << "goal post (calculated post => target post): " << render(goals[0]) << "\n";
    out << "goal pre (target pre => calculated pre): " << render(goals[1]) << "\n";
  }
  return refuted ? kExitRefuted : kExitOk;
}

void report_error(const Error& e, const char* command, const Options& o, std::ostream& out, std::ostream& err) {
  if (structured(o)) {
    ordered_json j = envelope(command, "error");
    ordered_json ej{{"kind", to_string(e.kind())}, {"message", e.message()}};
    if (e.cause()) ej["cause"] = to_string(*e.cause());
    if (e.item()) ej["item"] = *e.item();
    if (e.line()) ej["line"] = *e.line();
    j["error"] = ej;
    out << j.dump(2) << "\n";
    return;
  }
  err << "error: " << e.what();
  if (e.item()) err << " (patch item " << *e.item() << ")";
  if (e.line()) err << " [line " << *e.line() << "]";
  err << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Static checks for bytecode patches", "patchverify"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--bound", o.bound, "Enumeration bound B; values range over [-B, B-1]")
        ->check(CLI::PositiveNumber);
    sub->add_option("--atom-budget", o.atom_budget, "Maximum number of atoms per bounded check")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json", "json-like"}));
    sub->add_option("--hierarchy", o.hierarchy, "Class hierarchy file ('B extends A' lines)");
  };

  CLI::App* apply = app.add_subcommand("apply", "Apply a patch and print the annotated result");
  apply->add_option("--v1", o.v1, "Original method")->required();
  apply->add_option("--patch", o.patch, "Patch file")->required();
  apply->add_option("--out", o.out, "Write the patched method here");
  apply->add_flag("--annotate", o.annotate, "Print the annotation listing even without --out");
  common(apply);

  CLI::App* verify = app.add_subcommand("verify", "Compare the incrementally patched v1 against v2");
  verify->add_option("--v1", o.v1, "Original method")->required();
  verify->add_option("--patch", o.patch, "Patch file")->required();
  verify->add_option("--v2", o.v2, "New method version")->required();
  common(verify);

  CLI::App* triple = app.add_subcommand("triple", "Carry a Hoare triple through an insertion patch");
  triple->add_option("--v1", o.v1, "Original method")->required();
  triple->add_option("--spec", o.spec, "Initial pre/post specification")->required();
  triple->add_option("--patch", o.patch, "Patch file (insertions only)")->required();
  triple->add_option("--target-spec", o.target_spec, "Intended pre/post of the new code")->required();
  triple->add_option("--v2", o.v2, "New method version to compare against (default: patched v1)");
  triple->add_option("--emit-obligations", o.emit, "Write the implication goals as SMT-LIB 2");
  common(triple);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  if (!o.bound) {
    if (const char* env = std::getenv("PATCHVERIFY_BOUND"); env && *env) {
      char* end = nullptr;
      long value = std::strtol(env, &end, 10);
      if (*end != '\0' || value < 1 || value > 1 << 20) {
        err << "error: PATCHVERIFY_BOUND must be a positive integer, got '" << env << "'\n";
        return kExitError;
      }
      o.bound = static_cast<int>(value);
    }
  }

  const char* command = apply->parsed() ? "apply" : verify->parsed() ? "verify" : "triple";
  try {
    if (apply->parsed()) return cmd_apply(o, out);
    if (verify->parsed()) return cmd_verify(o, out);
    return cmd_triple(o, out);
  } catch (const Error& e) {
    report_error(e, command, o, out, err);
    return kExitError;
  }
}

}  // namespace patchverify::cli
