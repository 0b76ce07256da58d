#include "cli/config.hpp"

#include <fmt/format.h>

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace needlets::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || errno == ERANGE) {
    throw InvalidArgument(fmt::format("config key '{}': '{}' is not a number", key, text));
  }
  return v;
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& origin) {
  Config cfg;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(fmt::format("{}:{}: expected 'key = value'", origin, number));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidArgument(fmt::format("{}:{}: empty key", origin, number));
    if (cfg.values_.count(key)) throw InvalidArgument(fmt::format("{}:{}: duplicate key '{}'", origin, number, key));
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot open config file '{}'", path.string()));
  return parse(in, path.string());
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::optional<std::string> Config::get_optional(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

long Config::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string t = trim(it->second);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0' || errno == ERANGE) {
    throw InvalidArgument(fmt::format("config key '{}': '{}' is not an integer", key, it->second));
  }
  return v;
}

std::vector<int> Config::get_int_list(const std::string& key, const std::vector<int>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<int> out;
  for (const auto& item : split(it->second, ", \t")) {
    const double v = parse_double(key, item);
    if (v != static_cast<int>(v)) throw InvalidArgument(fmt::format("config key '{}': '{}' is not an integer", key, item));
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw InvalidArgument(fmt::format("config key '{}' is empty", key));
  return out;
}

double Config::get_angle(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const auto parts = split(it->second, " \t");
  if (parts.size() != 2 || parts[1] != "rad") {
    if (parts.size() == 2 && (parts[1] == "deg" || parts[1] == "degrees")) {
      throw InvalidArgument(fmt::format("config key '{}': degrees are not accepted, give radians as '<x> rad'", key));
    }
    throw InvalidArgument(fmt::format("config key '{}': angle must be written '<x> rad'", key));
  }
  return parse_double(key, parts[0]);
}

std::vector<std::vector<double>> Config::get_matrix(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument(fmt::format("config key '{}' is missing", key));
  std::vector<std::vector<double>> rows;
  for (const auto& row : split(it->second, ";")) {
    std::vector<double> r;
    for (const auto& item : split(row, ", \t")) r.push_back(parse_double(key, item));
    rows.push_back(std::move(r));
  }
  return rows;
}

void Config::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (!allowed.count(key)) throw InvalidArgument(fmt::format("unknown config key '{}'", key));
  }
}

}  // namespace needlets::cli
