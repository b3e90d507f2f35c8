#pragma once

#include <string>
#include <vector>

namespace timberdiff::cli {

/// Entry point shared by the binary and the tests. args excludes the program
/// name. Exit codes: 0 success, 1 evaluation completed with unassociated
/// entities, 2 hard error or usage error.
int run(const std::vector<std::string>& args);

}  // namespace timberdiff::cli
