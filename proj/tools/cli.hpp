#pragma once

#include <ostream>

namespace sepcov::cli {

/// Runs one subcommand. Returns 0 on success, 1 on a domain or runtime
/// error and 2 on a usage error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sepcov::cli
