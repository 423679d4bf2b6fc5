#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dgnpp {

// Exit codes: 0 success, 1 check failure, 2 I/O or argument error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dgnpp
