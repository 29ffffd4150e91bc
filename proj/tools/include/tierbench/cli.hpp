#pragma once

#include <iosfwd>

namespace tierbench::cli {

// Exit codes: 0 success, 1 validation or usage failure, 2 I/O or transport failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tierbench::cli
