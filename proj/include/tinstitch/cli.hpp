#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tinstitch {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1; // seam-check found a mismatch
inline constexpr int kExitUsage = 2;       // bad flags, missing or unreadable files
inline constexpr int kExitHazard = 3;      // plain in/iw layers in patch mode

// `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tinstitch
