#pragma once

#include <string>
#include <vector>

namespace potlab::cli {

// Entry point behind the potlab binary; also called in-process by the tests.
// Exit codes: 0 success / all checks passed, 1 at least one failed check,
// 2 usage or input error.
int run(const std::vector<std::string>& args);

}  // namespace potlab::cli
