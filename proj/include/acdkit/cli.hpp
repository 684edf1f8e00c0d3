#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace acdkit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 2;
inline constexpr int kExitInternal = 3;

/// Entry point of the `acdkit` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace acdkit
