#pragma once

#include <iosfwd>

namespace gradstarve::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Environment variable naming the directory that relative output paths are
/// resolved against.
inline constexpr const char* kOutputDirEnv = "GRADSTARVE_OUTPUT_DIR";

/// Runs the command line `argv[1..argc)`; machine-readable output goes to
/// `out`, human summaries and diagnostics to `err`. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gradstarve::cli
