#pragma once

#include <string>
#include <vector>

namespace rulgn {

/// Exit codes: 0 success, 2 user/config error, 3 numeric failure.
int cli_main(int argc, char** argv);

/// The subcommands, callable in-process with pre-split arguments.
int cli_run(const std::vector<std::string>& args);

}  // namespace rulgn
