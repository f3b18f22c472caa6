#pragma once

#include <iosfwd>

namespace flowph::cli {

/// Runs the command line `argv` (argv[0] is the program name). Machine-readable
/// summaries go to `out`, progress and diagnostics to `err`. Returns the
/// process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flowph::cli
