#include "fedin/data/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <random>
#include <set>

#include "fedin/data/csv.hpp"
#include "fedin/model/config.hpp"
#include "fedin/numerics/errors.hpp"

namespace fedin {

namespace {

std::size_t column_index(const std::vector<std::string>& header, const std::string& name, const std::string& path) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError(path + ": required column '" + name + "' not in header");
  return static_cast<std::size_t>(it - header.begin());
}

bool parse_int64(const std::string& text, std::int64_t& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !text.empty();
}

}  // namespace

ParseReport parse_interactions(const std::string& path, const ColumnMap& columns) {
  const CsvFile file = read_csv_file(path);
  const std::size_t user_col = column_index(file.header, columns.user, path);
  const std::size_t item_col = column_index(file.header, columns.item, path);
  const std::size_t time_col = column_index(file.header, columns.timestamp, path);
  const bool has_category = !columns.category.empty();
  const bool has_label = !columns.label.empty();
  const std::size_t cat_col = has_category ? column_index(file.header, columns.category, path) : 0;
  const std::size_t label_col = has_label ? column_index(file.header, columns.label, path) : 0;

  ParseReport report;
  report.records.reserve(file.rows.size());
  for (const CsvRow& row : file.rows) {
    auto fail = [&](const std::string& msg) { report.errors.push_back({row.line, msg}); };
    const auto fields = split_csv_line(row.text);
    if (!fields) {
      fail("unbalanced quotes");
      continue;
    }
    if (fields->size() != file.header.size()) {
      fail("expected " + std::to_string(file.header.size()) + " fields, found " + std::to_string(fields->size()));
      continue;
    }
    InteractionRecord r;
    r.user_id = (*fields)[user_col];
    r.item_id = (*fields)[item_col];
    if (r.user_id.empty() || r.item_id.empty()) {
      fail("empty user or item id");
      continue;
    }
    if (!parse_int64((*fields)[time_col], r.timestamp)) {
      fail("timestamp '" + (*fields)[time_col] + "' is not an integer");
      continue;
    }
    if (r.timestamp < 0) {
      fail("negative timestamp");
      continue;
    }
    if (has_category) r.category_id = (*fields)[cat_col];
    if (has_label) {
      const std::string& l = (*fields)[label_col];
      if (l != "0" && l != "1") {
        fail("label '" + l + "' is not 0 or 1");
        continue;
      }
      r.label = l == "1" ? 1 : 0;
    }
    report.records.push_back(std::move(r));
  }
  const double bad = static_cast<double>(report.errors.size());
  if (!file.rows.empty() && bad > columns.max_malformed_fraction * static_cast<double>(file.rows.size())) {
    std::string msg = path + ": " + std::to_string(report.errors.size()) + " of " + std::to_string(file.rows.size()) +
                      " rows malformed";
    for (std::size_t i = 0; i < std::min<std::size_t>(report.errors.size(), 5); ++i) {
      msg += "\n  line " + std::to_string(report.errors[i].line) + ": " + report.errors[i].message;
    }
    throw DataError(msg);
  }
  return report;
}

Vocabulary::Vocabulary(std::vector<std::string> keys) : keys_(std::move(keys)) {
  std::sort(keys_.begin(), keys_.end());
  keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
  for (std::size_t i = 0; i < keys_.size(); ++i) ids_.emplace(keys_[i], static_cast<int>(i) + 1);
}

int Vocabulary::id(const std::string& key) const {
  const auto it = ids_.find(key);
  if (it == ids_.end()) throw DataError("unknown key '" + key + "'");
  return it->second;
}

const std::string& Vocabulary::key(int id) const {
  if (id < 1 || id > static_cast<int>(keys_.size())) throw DataError("id " + std::to_string(id) + " out of range");
  return keys_[static_cast<std::size_t>(id - 1)];
}

Vocabulary item_vocabulary(const std::vector<InteractionRecord>& records) {
  std::vector<std::string> keys;
  keys.reserve(records.size());
  for (const auto& r : records) keys.push_back(r.item_id);
  return Vocabulary(std::move(keys));
}

Vocabulary user_vocabulary(const std::vector<InteractionRecord>& records) {
  std::vector<std::string> keys;
  keys.reserve(records.size());
  for (const auto& r : records) keys.push_back(r.user_id);
  return Vocabulary(std::move(keys));
}

std::vector<SequenceSample> build_samples(const std::vector<InteractionRecord>& records, Index seq_len,
                                          int negatives_per_positive, const Vocabulary& items,
                                          const Vocabulary& users, std::uint64_t seed) {
  if (seq_len < 1) throw ConfigError("build_samples: sequence length must be positive");
  if (negatives_per_positive < 0) throw ConfigError("build_samples: negatives_per_positive must be >= 0");
  const bool explicit_negatives =
      std::any_of(records.begin(), records.end(), [](const InteractionRecord& r) { return r.label == 0; });

  // Stable order: user id, then timestamp, then file order.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> user_ids(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) user_ids[i] = users.id(records[i].user_id);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (user_ids[a] != user_ids[b]) return user_ids[a] < user_ids[b];
    return records[a].timestamp < records[b].timestamp;
  });

  std::mt19937_64 rng(seed);
  const int num_items = static_cast<int>(items.size());
  std::vector<SequenceSample> out;
  std::size_t begin = 0;
  while (begin < order.size()) {
    std::size_t end = begin;
    const int user = user_ids[order[begin]];
    while (end < order.size() && user_ids[order[end]] == user) ++end;

    std::set<int> positive_set;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& r = records[order[i]];
      if (r.label == 1) positive_set.insert(items.id(r.item_id));
    }
    std::vector<int> unseen;  // built lazily for negative sampling fallbacks

    std::vector<int> history;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& r = records[order[i]];
      const int item = items.id(r.item_id);
      if (!history.empty()) {
        SequenceSample s;
        const auto take = std::min<std::size_t>(history.size(), static_cast<std::size_t>(seq_len));
        s.item_ids.assign(static_cast<std::size_t>(seq_len), kPaddingItem);
        std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(), s.item_ids.begin());
        s.valid_len = static_cast<Index>(take);
        s.user_id = user;
        s.timestamp = r.timestamp;
        s.target_id = item;
        s.label = r.label;
        if (explicit_negatives || r.label == 1) out.push_back(s);
        if (!explicit_negatives && r.label == 1 && negatives_per_positive > 0) {
          if (static_cast<int>(positive_set.size()) >= num_items - 1) continue;
          std::uniform_int_distribution<int> pick(1, num_items - 1);
          for (int n = 0; n < negatives_per_positive; ++n) {
            int candidate = pick(rng);
            int attempts = 1;
            while (positive_set.count(candidate) != 0 && attempts < 64) {
              candidate = pick(rng);
              ++attempts;
            }
            if (positive_set.count(candidate) != 0) {
              if (unseen.empty()) {
                for (int id = 1; id < num_items; ++id) {
                  if (positive_set.count(id) == 0) unseen.push_back(id);
                }
              }
              std::uniform_int_distribution<std::size_t> pick_unseen(0, unseen.size() - 1);
              candidate = unseen[pick_unseen(rng)];
            }
            SequenceSample neg = s;
            neg.target_id = candidate;
            neg.label = 0;
            out.push_back(std::move(neg));
          }
        }
      }
      if (r.label == 1) history.push_back(item);
    }
    begin = end;
  }
  return out;
}

}  // namespace fedin
