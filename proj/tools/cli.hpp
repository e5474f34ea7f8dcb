#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace emoscale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInternalError = 2;

/// Runs one `emoscale` invocation. `args` excludes the program name.
/// Subcommands: synth, train, eval, gradcheck, report.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace emoscale::cli
