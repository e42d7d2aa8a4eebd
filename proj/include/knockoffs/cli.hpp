#pragma once

#include <string>
#include <vector>

namespace knockoffs {

// Entry point behind main(); args excludes the program name.
// Exit codes: 0 success, 1 bad input or usage, 2 numerical failure.
int cli_main(const std::vector<std::string>& args);

}  // namespace knockoffs
