#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace qwerty::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsage = 2;

// Entry point shared by the executable and tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qwerty::cli
