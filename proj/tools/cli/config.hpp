#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace advml::cli {

// Bad flags, config or arguments: exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An attack returned a point outside its budget or the box. Exit code 1.
class FeasibilityViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptionSpec {
  std::string name;
  std::string default_value;  // empty: unset
  std::string help;
};

// key=value lines; blank lines and lines starting with # are skipped.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Settings of one run after merging defaults, the config file and flags
// (in that order of precedence, lowest first).
class RunConfig {
 public:
  RunConfig() = default;
  RunConfig(std::string command, std::map<std::string, std::string> values);

  const std::string& command() const noexcept { return command_; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::string str_or(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key) const;
  std::optional<double> opt_real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::optional<long long> opt_integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  std::uint64_t seed() const;
  bool flag(const std::string& key) const;
  std::vector<std::size_t> sizes(const std::string& key) const;  // comma list

  // command=<name> followed by every key in order; reading it back with
  // --config reproduces the run.
  std::string snapshot() const;

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

// Layers defaults < file < flags. Keys from the file or flags that are not in
// `specs` are usage errors, and a file naming a different command is too.
RunConfig resolve_config(const std::string& command, const std::vector<OptionSpec>& specs,
                         const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values);

// "0..10" (half-open), "3", "1,4,7" or mixtures; all below `limit`.
std::vector<std::size_t> parse_indices(const std::string& text, std::size_t limit);

// Shortest text that reads back as the same double.
std::string format_double(double v);

}  // namespace advml::cli
