#pragma once

#include <iosfwd>

namespace sthcm {

/// Entry point of the `sthcm` binary. Exit codes: 0 success, 1 runtime
/// failure, 2 invalid configuration or usage.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sthcm
