#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qiraa::cli {

/// Exit codes: 0 success, 1 data error, 2 usage error.
int run(int argc, char** argv);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qiraa::cli
