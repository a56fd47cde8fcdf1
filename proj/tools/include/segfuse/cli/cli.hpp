#pragma once

#include <string>
#include <vector>

namespace segfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitIo = 2;

// Parses argv (argv[0] is the program name) and runs one subcommand.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace segfuse::cli
