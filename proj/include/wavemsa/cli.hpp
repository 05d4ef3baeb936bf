#pragma once

#include <iosfwd>

namespace wavemsa {

/// Entry point shared by the `wavemsa` executable and the tests. Returns the
/// process exit status: 0 on success, 1 on input/config errors, 2 on usage
/// errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wavemsa
