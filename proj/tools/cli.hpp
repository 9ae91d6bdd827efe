#ifndef DBM_TOOLS_CLI_HPP_
#define DBM_TOOLS_CLI_HPP_

#include <ostream>

namespace dbm {

enum ExitCode : int { kExitOk = 0, kExitInvalid = 2, kExitCoverage = 3, kExitNumeric = 4 };

/// Runs the dbm-overlaps command line. argv[0] is the program name.
/// Results go to `out` unless --out is given; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dbm

#endif  // DBM_TOOLS_CLI_HPP_
