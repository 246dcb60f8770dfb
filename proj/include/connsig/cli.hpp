#pragma once

// Command-line driver. Every subcommand writes its products into --out, plus a
// manifest.json naming the command, resolved flags, seed, tool version and
// digests of inputs and outputs.

#include <string>
#include <vector>

namespace connsig::cli {

/// Runs one command line (args[0] is the program name) and returns the exit
/// code: 0 success, 1 usage, 2 data, 3 numeric. Errors go to stderr as JSON.
int run(const std::vector<std::string>& args);

}  // namespace connsig::cli
