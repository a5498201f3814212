#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stylo::cli {

// Exit codes: 0 success, 1 usage error, 2 data or runtime error.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stylo::cli
