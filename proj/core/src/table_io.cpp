#include "needlets/table_io.hpp"

#include <fmt/format.h>

#include <istream>
#include <ostream>

namespace needlets {

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

void write_table_header(std::ostream& out, std::string_view kind,
                        std::initializer_list<std::string_view> columns) {
  out << "# " << kind << " format-version: " << kTableFormatVersion << '\n';
  bool first = true;
  for (auto c : columns) {
    if (!first) out << '\t';
    out << c;
    first = false;
  }
  out << '\n';
}

bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace needlets
