#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace advml::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw UsageError("--" + key + ": '" + text + "' is not a valid number");
  return v;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("config line " + std::to_string(no) + ": expected key=value");
    }
    out[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return out;
}

RunConfig::RunConfig(std::string command, std::map<std::string, std::string> values)
    : command_(std::move(command)), values_(std::move(values)) {}

bool RunConfig::has(const std::string& key) const {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string RunConfig::str(const std::string& key) const {
  if (!has(key)) throw UsageError("--" + key + " is required");
  return values_.at(key);
}

std::string RunConfig::str_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? values_.at(key) : fallback;
}

double RunConfig::real(const std::string& key) const {
  const double v = parse_number<double>(key, str(key));
  if (!std::isfinite(v)) throw UsageError("--" + key + " must be finite");
  return v;
}

std::optional<double> RunConfig::opt_real(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return real(key);
}

long long RunConfig::integer(const std::string& key) const { return parse_number<long long>(key, str(key)); }

std::optional<long long> RunConfig::opt_integer(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return integer(key);
}

std::size_t RunConfig::count(const std::string& key) const {
  const long long v = integer(key);
  if (v < 0) throw UsageError("--" + key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::seed() const { return parse_number<std::uint64_t>("seed", str("seed")); }

bool RunConfig::flag(const std::string& key) const {
  const std::string v = str_or(key, "false");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("--" + key + " must be true or false");
}

std::vector<std::size_t> RunConfig::sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  if (!has(key)) return out;
  std::stringstream ss(values_.at(key));
  std::string part;
  while (std::getline(ss, part, ',')) {
    const long long v = parse_number<long long>(key, trim(part));
    if (v <= 0) throw UsageError("--" + key + " entries must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::string RunConfig::snapshot() const {
  std::string s = "command=" + command_ + "\n";
  for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
  return s;
}

RunConfig resolve_config(const std::string& command, const std::vector<OptionSpec>& specs,
                         const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values) {
  std::map<std::string, std::string> v;
  for (const auto& s : specs) v[s.name] = s.default_value;
  auto overlay = [&](const std::map<std::string, std::string>& src, const char* where) {
    for (const auto& [k, val] : src) {
      if (k == "command") {
        if (val != command) throw UsageError(std::string(where) + " is for command '" + val + "'");
        continue;
      }
      if (!v.count(k)) throw UsageError(std::string(where) + ": unknown option '" + k + "' for " + command);
      v[k] = val;
    }
  };
  overlay(file_values, "config file");
  overlay(flag_values, "flags");
  return RunConfig(command, std::move(v));
}

std::vector<std::size_t> parse_indices(const std::string& text, std::size_t limit) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  auto num = [](const std::string& t) { return parse_number<std::size_t>("indices", trim(t)); };
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(num(part));
    } else {
      const std::size_t a = num(part.substr(0, dots));
      const std::size_t b = num(part.substr(dots + 2));
      if (b < a) throw UsageError("--indices: range " + part + " is reversed");
      for (std::size_t i = a; i < b; ++i) out.push_back(i);
    }
  }
  for (std::size_t i : out) {
    if (i >= limit) throw UsageError("--indices: " + std::to_string(i) + " is past the end of the data");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace advml::cli
