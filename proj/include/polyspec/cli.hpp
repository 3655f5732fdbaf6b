#pragma once

#include <ostream>

namespace polyspec {

// Entry point of the polyspec binary: subcommands simulate | analytic | estimate | fit | plot.
// Returns 0 on success, 2 on configuration errors, 3 on numerical failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace polyspec
