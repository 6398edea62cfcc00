#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace diffik::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNotConverged = 1;
inline constexpr int kExitInputError = 2;

/// Environment variable naming the default solver config file.
inline constexpr const char* kConfigEnv = "DIFFIK_CONFIG";

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace diffik::cli
