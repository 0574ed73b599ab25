#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace beamlab::cli {

// Parses argv and runs one subcommand. Diagnostics go to err; primary data
// goes to out or to files named by flags. Returns the process exit code:
// 0 success, 1 validation or usage error, 2 I/O error.
int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace beamlab::cli
