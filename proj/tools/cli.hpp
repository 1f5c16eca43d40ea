#pragma once

#include <iosfwd>

namespace hmmop::cli {

// Runs one `hmmop` invocation. Returns 0 on success, 1 on a validation error
// and 2 on a runtime failure; errors are reported as a single
// "error: <reason>" line on `err`.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hmmop::cli
