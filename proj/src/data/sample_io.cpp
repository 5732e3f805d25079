#include "fedin/data/sample_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fedin/data/csv.hpp"
#include "fedin/model/config.hpp"
#include "fedin/numerics/errors.hpp"

namespace fedin {

namespace {

const std::vector<std::string> kColumns{"user_id", "timestamp", "target_item", "target_category", "label", "history"};

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw DataError(where + ": '" + text + "' is not an integer");
  }
  return value;
}

}  // namespace

void write_samples_csv(const std::string& path, const std::vector<SequenceSample>& samples,
                       const std::vector<int>& item_category, const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& c : comments) out << "# " << c << '\n';
  for (std::size_t i = 0; i < kColumns.size(); ++i) out << (i ? "," : "") << kColumns[i];
  out << '\n';
  for (const auto& s : samples) {
    const auto target = static_cast<std::size_t>(s.target_id);
    const int category = target < item_category.size() ? item_category[target] : -1;
    out << s.user_id << ',' << s.timestamp << ',' << s.target_id << ',' << category << ',' << (s.label > 0.5 ? 1 : 0)
        << ',';
    for (Index i = 0; i < s.valid_len; ++i) out << (i ? " " : "") << s.item_ids[static_cast<std::size_t>(i)];
    out << '\n';
  }
  if (!out) throw IoError("write error on '" + path + "'");
}

SampleFile read_samples_csv(const std::string& path, Index seq_len) {
  const CsvFile file = read_csv_file(path);
  if (file.header != kColumns) throw DataError(path + ": unexpected sample header");
  SampleFile result;
  result.comments = file.comments;
  result.samples.reserve(file.rows.size());
  for (const CsvRow& row : file.rows) {
    const std::string where = path + ":" + std::to_string(row.line);
    const auto fields = split_csv_line(row.text);
    if (!fields || fields->size() != kColumns.size()) throw DataError(where + ": malformed sample row");
    SequenceSample s;
    s.user_id = parse_number<int>((*fields)[0], where);
    s.timestamp = parse_number<std::int64_t>((*fields)[1], where);
    s.target_id = parse_number<int>((*fields)[2], where);
    const int category = parse_number<int>((*fields)[3], where);
    const int label = parse_number<int>((*fields)[4], where);
    if (label != 0 && label != 1) throw DataError(where + ": label must be 0 or 1");
    s.label = label;
    s.item_ids.assign(static_cast<std::size_t>(seq_len), kPaddingItem);
    std::istringstream history((*fields)[5]);
    std::string token;
    while (history >> token) {
      if (s.valid_len >= seq_len) {
        throw DataError(where + ": history longer than sequence length " + std::to_string(seq_len));
      }
      s.item_ids[static_cast<std::size_t>(s.valid_len++)] = parse_number<int>(token, where);
    }
    if (s.valid_len == 0) throw DataError(where + ": empty history");
    result.samples.push_back(std::move(s));
    result.target_category.push_back(category);
  }
  return result;
}

}  // namespace fedin
