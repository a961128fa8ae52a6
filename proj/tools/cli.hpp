#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lana::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInfeasible = 2 };

/// Runs one command line (without the program name). Results go to `out`
/// unless redirected with --out; diagnostics and progress go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lana::cli
