#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace sanmt {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

// Runs one CLI invocation; `args` excludes the program name.
// Subcommands: preprocess, train, translate, align, eval, synth, experiment, replay.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace sanmt
