#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hybridcp {

/// Exit codes: 0 success, 2 bad arguments, 3 bad data.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hybridcp
