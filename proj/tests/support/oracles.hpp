#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "patchverify/bytecode.hpp"
#include "patchverify/error.hpp"
#include "patchverify/patch.hpp"

namespace testsupport {

using namespace patchverify;

/// A method whose instructions carry stable identities, so control flow can
/// be compared before and after an edit independently of line numbers.
/// Jumps point at identities rather than lines.
struct IdentityCode {
  std::vector<int> order;                // identity at line k+1
  std::map<int, Instruction> code;       // jump targets inside are ignored
  std::map<int, int> target;             // jump identity -> target identity
};

inline constexpr int kHaltId = 0;
using Edges = std::set<std::pair<int, int>>;

/// Identities are the line numbers of `m`, which must be numbered 1..n.
IdentityCode identify(const MethodMap& m);

/// Control-flow edges between identities; falling off the end goes to kHaltId.
Edges edges(const IdentityCode& c);

struct Prediction {
  IdentityCode after;
  std::optional<ErrorKind> error;  // the edit must be rejected with this kind
};

/// What an add or delete must do, worked out on the identity list alone.
/// `fresh_id` names an inserted instruction.
Prediction predict(const IdentityCode& before, const UpdateInstr& item, int fresh_id);

/// Expected edge set after a single add/delete, derived from the edges
/// before: only edges touching the edited node (and the fall-through edge
/// it splits or joins) may change.
Edges expected_edges(const IdentityCode& before, const UpdateInstr& item, int fresh_id);

/// Edges of the engine's result, reading line k as identity after.order[k-1].
Edges observed_edges(const MethodMap& actual, const IdentityCode& after);

/// Same instruction at every position, ignoring jump targets.
bool same_layout(const MethodMap& actual, const IdentityCode& after);

/// Builds the method an IdentityCode describes (jump targets resolved).
MethodMap materialize(const IdentityCode& c);

}  // namespace testsupport
