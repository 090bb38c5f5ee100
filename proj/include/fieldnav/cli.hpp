#pragma once

#include <ostream>

namespace fieldnav {

/// Exit codes: 0 success, 1 planner or check failure, 2 usage or input error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fieldnav
