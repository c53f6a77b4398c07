#pragma once

#include <iosfwd>

namespace eegintent {

/// Entry point of the `eegintent` command. Returns the process exit code:
/// 0 success, 2 config error, 3 data error, 4 numerical failure. Errors are
/// reported on `err` as a single-line JSON record.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eegintent
