#pragma once

#include <ostream>
#include <string>

namespace lyam::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "LYAM_OUTPUT_DIR";

/// Version, compiler and build type baked in at compile time.
std::string build_id();

/// Runs one `lyam <subcommand> ...` invocation. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lyam::cli
