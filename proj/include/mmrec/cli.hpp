#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mmrec {

// Exit codes: 0 success, 1 contract/data error, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mmrec
