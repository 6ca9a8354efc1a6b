#pragma once

#include <string>
#include <vector>

namespace confsel {

// Entry point of the command-line tool, exposed so tests can drive it
// in-process. `args` excludes the program name. Returns the process exit
// code: 0 on success, 2 for flag/config errors, 3 for data-format errors,
// 4 for estimation failures.
int cli_main(const std::vector<std::string>& args);

}  // namespace confsel
