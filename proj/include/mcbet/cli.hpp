#pragma once

#include <iosfwd>

namespace mcbet {

/// Entry point of the `mcbet` command line tool. Returns the process exit code:
/// for `test`, 0 = rejected and 1 = not rejected; 2 on any error.
int run_cli(int argc, char** argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace mcbet
