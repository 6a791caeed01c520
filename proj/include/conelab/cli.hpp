#pragma once
// Command-line front end: config files, subcommand dispatch, report and CSV emission.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace conelab::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kSuiteFailure = 1, kConfigError = 2 };

// One "key = value" line of a config file; section is "" before the first header.
struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    std::size_t line = 0;
};

// Flat key=value text with [section] headers, '#' or ';' comments and optional
// double quotes around values. Throws PreconditionError on malformed lines.
std::vector<ConfigEntry> parse_config(std::istream& in, const std::string& source = "config");

// 64-bit FNV-1a of the canonical "key=value\n" listing, as 16 hex digits.
std::string config_hash(const std::map<std::string, std::string>& effective);

// Runs one invocation. Diagnostics go to err, results to out or --output.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace conelab::cli
