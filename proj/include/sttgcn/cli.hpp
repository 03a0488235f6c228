#pragma once

#include <iosfwd>

namespace sttgcn {

/// Environment variable overriding the default report directory.
inline constexpr const char* kOutDirEnv = "STTGCN_OUT_DIR";

/// Entry point for the `sttgcn` tool. Returns 0 on success, 2 on usage errors, 1 on data errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sttgcn
