#pragma once

#include <iosfwd>

namespace gridswitch {

/// Entry point of the gridswitch command line. Exit codes: 0 success,
/// 1 scenario or usage error, 2 numerical failure, 3 failed --check assertion.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridswitch
