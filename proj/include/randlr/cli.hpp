#pragma once

#include <string>
#include <vector>

namespace randlr::cli {

// Exit codes: 0 ok, 2 bad arguments, 3 I/O failure, 4 dimension/precondition.
inline constexpr int kExitOk = 0;
inline constexpr int kExitArgs = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDims = 4;

int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace randlr::cli
