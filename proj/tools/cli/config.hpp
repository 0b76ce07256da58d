#pragma once

#include "needlets/error.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace needlets::cli {

/// Flat "key = value" configuration. '#' starts a comment. Angles carry an
/// explicit "rad" suffix; degrees are rejected.
class Config {
 public:
  static Config parse(std::istream& in, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::optional<std::string> get_optional(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
  /// Value like "0.2 rad"; a bare number or "deg" is an error.
  double get_angle(const std::string& key, double fallback) const;
  /// Rows separated by ';', entries by whitespace or ','.
  std::vector<std::vector<double>> get_matrix(const std::string& key) const;

  /// Throws InvalidArgument naming the first key outside `allowed`.
  void require_known(const std::set<std::string>& allowed) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace needlets::cli
