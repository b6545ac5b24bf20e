#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace aliasplan {

/// Runs the command line tool. Returns 0 on success, 1 on a validation error
/// and 2 when an internal guarantee breaks.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace aliasplan
