// cli.hpp
// Batch entry point: gen | prep | train | eval | ablate | analyze | bench.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace proxsense::cli {

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "PROXSENSE_CONFIG";

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;      // runtime or I/O failure
inline constexpr int kUsageError = 2;   // bad flags, missing keys, bad configuration

// args[0] is the program name. Errors are reported on `err` as one JSON
// object {"error": kind, "message": text}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::vector<std::string> subcommands();
// Long flags accepted by a subcommand, e.g. "--seed".
std::vector<std::string> flags_of(const std::string& subcommand);

}  // namespace proxsense::cli
