#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace relight::app {

// Exit codes of the `relight` command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitProcessing = 2;

// Runs one invocation. `args` excludes the program name. A JSON summary line
// goes to `out`; human-readable diagnostics go to `err`.
//
// `--config FILE` (anywhere after the subcommand) loads a JSON object whose
// keys are long flag names of that subcommand; an output manifest also works,
// its "config" member is used. Flags given on the command line win.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relight::app
