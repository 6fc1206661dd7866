// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace agentbug {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitBackend = 3 };

/// Entry point of the `agentbug` command. argv[0] is the program name.
int run_cli(int argc, const char* const* argv);
/// Convenience form; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace agentbug
