#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>

namespace needlets {

/// Version stamped into every tabular output so readers can reject formats
/// they do not understand.
inline constexpr int kTableFormatVersion = 1;

/// Shortest round-trip decimal is not required; every writer uses a fixed
/// 17 significant digits so equal doubles always print identically.
std::string format_double(double value);

/// Writes "# <kind> format-version: N" followed by a tab-separated header row.
void write_table_header(std::ostream& out, std::string_view kind,
                        std::initializer_list<std::string_view> columns);

/// Reads the next line that is neither blank nor a '#' comment. Returns false
/// at end of stream.
bool next_data_line(std::istream& in, std::string& line);

}  // namespace needlets
