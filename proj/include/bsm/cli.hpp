#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bsm {

// Exit statuses shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitFitFailure = 2;

// Runs `bsm <subcommand> ...`; `args` excludes the program name. Reports go to
// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bsm
