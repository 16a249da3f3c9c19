#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tomoplan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Entry point of the tomoplan tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace tomoplan
