#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patchverify/patch.hpp"

namespace testsupport {

/// Outcome of a randomized campaign.
struct Tally {
  int cases = 0;       // top-level inputs generated
  int checks = 0;      // individual comparisons made
  int rejected = 0;    // comparisons where both routes rejected
  int failures = 0;
  std::vector<std::string> notes;  // the first few failures

  void fail(std::string what);
  bool ok() const { return failures == 0; }
};

/// Incremental transfer versus full re-verification, compared after every
/// patch prefix. `faults` are applied to the incremental route only.
Tally incremental_campaign(std::uint64_t seed, int methods, const patchverify::EditFaults& faults = {});

/// Control flow over instruction identities before and after each add or
/// delete, against the identity oracle.
Tally cfg_campaign(std::uint64_t seed, int patches, const patchverify::EditFaults& faults = {});

/// wp exactness and sp soundness by enumeration over [-8, 7] on random
/// straight-line segments.
Tally predicate_campaign(std::uint64_t seed, int segments);

}  // namespace testsupport
