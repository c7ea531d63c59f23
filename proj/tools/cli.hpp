#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace patchverify::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRefuted = 1;
inline constexpr int kExitError = 2;

/// Version of the structured (json) output layout.
inline constexpr int kSchemaVersion = 1;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace patchverify::cli
