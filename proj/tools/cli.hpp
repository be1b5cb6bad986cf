#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cafda::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kRuntimeError = 3 };

/// Entry point shared by the binary and the in-process tests.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cafda::cli
