#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cmrec/matrix.hpp"
#include "cmrec/stability.hpp"

namespace cmrec {

/// Parses RFC 4180 style CSV: comma separated, double quotes around fields
/// containing commas, quotes, or newlines, doubled quotes as escapes, CRLF
/// or LF line ends. A trailing newline does not create an empty record.
/// Throws DataError naming 1-based line and column on malformed input.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// One line per record, quoting only when a field needs it.
std::string format_csv(const std::vector<std::vector<std::string>>& rows);

/// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

/// Strict double parse of a whole field; DataError otherwise.
double parse_double_field(const std::string& field, std::size_t line, std::size_t column);

/// Matrix layout: header row is case ids after an ignored corner cell,
/// each following row is an item id then one cell per case. An empty cell
/// is a missing entry, never zero.
PerformanceMatrix read_matrix_csv(const std::string& text);
PerformanceMatrix load_matrix_csv(const std::string& path);
std::string write_matrix_csv(const PerformanceMatrix& m);
void save_matrix_csv(const PerformanceMatrix& m, const std::string& path);

/// One profile per row, plain numbers, no header. Empty trailing cells are
/// ignored; an entirely empty row is an error.
std::vector<Profile> read_profiles_csv(const std::string& text);
std::vector<Profile> load_profiles_csv(const std::string& path);

/// Whole-file helpers; DataError on I/O failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace cmrec
