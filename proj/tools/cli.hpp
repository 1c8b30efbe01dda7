#pragma once

#include <iosfwd>

namespace gfsi::cli {

/// Entry point of the gfsi tool. Returns the process exit code:
/// 0 on success, 2 for input errors, 3 for numerical failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gfsi::cli
