#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace critlab::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_runtime = 3;

inline constexpr const char* version = "0.1.0";

/// Runs one command line (without the program name). Diagnostics go to err,
/// help and progress to out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Flat `key = value` file; blank lines and lines starting with '#' are
/// skipped. Throws std::runtime_error on a line without '='.
std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path);

/// Command line reproducing a manifest: the command name followed by
/// `--key value` for every key naming an option of that command.
std::vector<std::string> replay_args(const std::vector<std::pair<std::string, std::string>>& manifest);

}  // namespace critlab::cli
