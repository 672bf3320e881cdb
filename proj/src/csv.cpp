#include "cmrec/csv.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <system_error>

#include "cmrec/errors.hpp"

namespace cmrec {

namespace {

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& what) {
  throw DataError("CSV parse error at line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ": " + what);
}

}  // namespace

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  std::size_t line = 1;
  std::size_t column = 1;
  bool in_quotes = false;
  bool field_was_quoted = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
          column += 2;
        } else {
          in_quotes = false;
          ++column;
        }
      } else {
        field.push_back(c);
        if (c == '\n') {
          ++line;
          column = 1;
        } else {
          ++column;
        }
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          parse_fail(line, column, "quote inside an unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        ++column;
        break;
      case ',':
        end_field();
        ++column;
        break;
      case '\r':
        if (i + 1 >= text.size() || text[i + 1] != '\n') {
          parse_fail(line, column, "bare carriage return");
        }
        break;
      case '\n':
        end_row();
        ++line;
        column = 1;
        break;
      default:
        if (field_was_quoted) parse_fail(line, column, "content after closing quote");
        field.push_back(c);
        ++column;
    }
  }
  if (in_quotes) parse_fail(line, column, "unterminated quoted field");
  if (!field.empty() || field_was_quoted || !row.empty()) end_row();
  return rows;
}

std::string format_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t f = 0; f < row.size(); ++f) {
      if (f) out.push_back(',');
      const std::string& cell = row[f];
      const bool needs_quotes =
          cell.find_first_of(",\"\r\n") != std::string::npos;
      if (!needs_quotes) {
        out += cell;
      } else {
        out.push_back('"');
        for (char c : cell) {
          if (c == '"') out.push_back('"');
          out.push_back(c);
        }
        out.push_back('"');
      }
    }
    out.push_back('\n');
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double_field(const std::string& field, std::size_t line, std::size_t column) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    parse_fail(line, column, "expected a number, got '" + field + "'");
  }
  return v;
}

PerformanceMatrix read_matrix_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.size() < 2 || rows[0].size() < 2) {
    throw DataError("matrix CSV needs a case-id header row and at least one item row");
  }
  std::vector<std::string> case_ids(rows[0].begin() + 1, rows[0].end());
  std::vector<std::string> item_ids;
  std::vector<std::optional<double>> values;
  values.reserve((rows.size() - 1) * case_ids.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != case_ids.size() + 1) {
      throw DataError("matrix CSV line " + std::to_string(r + 1) + " has " +
                      std::to_string(row.size()) + " cells, expected " +
                      std::to_string(case_ids.size() + 1));
    }
    item_ids.push_back(row[0]);
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c].empty()) {
        values.emplace_back();
      } else {
        values.emplace_back(parse_double_field(row[c], r + 1, c + 1));
      }
    }
  }
  return PerformanceMatrix(std::move(item_ids), std::move(case_ids), std::move(values));
}

std::string write_matrix_csv(const PerformanceMatrix& m) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(m.n_items() + 1);
  std::vector<std::string> header;
  header.emplace_back("item_id");
  for (const auto& c : m.case_ids()) header.push_back(c);
  rows.push_back(std::move(header));
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    std::vector<std::string> row;
    row.push_back(m.item_ids()[i]);
    for (std::size_t c = 0; c < m.n_cases(); ++c) {
      row.push_back(m.present(i, c) ? format_double(m.value(i, c)) : std::string());
    }
    rows.push_back(std::move(row));
  }
  return format_csv(rows);
}

std::vector<Profile> read_profiles_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  std::vector<Profile> profiles;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto row = rows[r];
    while (!row.empty() && row.back().empty()) row.pop_back();
    if (row.empty()) {
      throw DataError("profiles CSV line " + std::to_string(r + 1) + " is empty");
    }
    Profile p;
    p.reserve(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
      p.push_back(parse_double_field(row[c], r + 1, c + 1));
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("read failure on '" + path + "'");
  return std::move(ss).str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw DataError("write failure on '" + path + "'");
}

PerformanceMatrix load_matrix_csv(const std::string& path) {
  return read_matrix_csv(read_text_file(path));
}

void save_matrix_csv(const PerformanceMatrix& m, const std::string& path) {
  write_text_file(path, write_matrix_csv(m));
}

std::vector<Profile> load_profiles_csv(const std::string& path) {
  return read_profiles_csv(read_text_file(path));
}

}  // namespace cmrec
