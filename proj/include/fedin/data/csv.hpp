#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedin {

/// Splits one comma-separated line. Fields may be double-quoted; a doubled
/// quote inside a quoted field is a literal quote. Returns nullopt for an
/// unterminated quote or stray characters after a closing quote.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line);

/// Quotes a field only when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::string text;
};

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::string> comments;  // leading '#' lines, without the marker
  std::vector<CsvRow> rows;
};

/// Reads a UTF-8 CSV with a header row. Leading lines starting with '#' are
/// collected as comments; blank lines are skipped. Rows are returned unsplit
/// so the caller can report malformed ones by line number. Throws IoError.
CsvFile read_csv_file(const std::string& path);

}  // namespace fedin
