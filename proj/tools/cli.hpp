#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bmapinf::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kUnstable = 1;
inline constexpr int kInputError = 2;
inline constexpr int kInternalError = 3;

// Runs one command line (without the program name). Reports go to `out`
// (or the --out file), errors as JSON to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version_string();

}  // namespace bmapinf::cli
