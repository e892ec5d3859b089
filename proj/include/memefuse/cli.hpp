#pragma once

#include <string>
#include <vector>

namespace memefuse {

// Entry point behind main(); `args` excludes the program name.
// Exit codes: 0 success, 2 configuration/schema errors, 3 data errors,
// 4 divergence during training. CLI11 parse errors keep their own codes.
int run_cli(std::vector<std::string> args);

}  // namespace memefuse
