#pragma once

// The command-line surface. Every command resolves its flags into an options
// record, writes a run manifest next to its output, and then executes from
// that record, so `rerun --manifest` reproduces the run.

#include <iosfwd>
#include <string>

namespace trad::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kBackend = 4 };

// Parses argv (argv[0] is the program name) and runs one command.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Runs a command from resolved options (JSON text, as stored in manifests).
int execute(const std::string& command, const std::string& options_json, std::ostream& out, std::ostream& err);

std::string manifest_path_for(const std::string& output_path);

}  // namespace trad::cli
