#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedin/data/sample.hpp"

namespace fedin {

struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  std::string category_id;  // empty when the source has no category column
  std::int64_t timestamp = 0;
  int label = 1;

  bool operator==(const InteractionRecord&) const = default;
};

/// Maps record fields onto CSV header names. Empty `category` or `label`
/// means the column is absent; a missing label column makes every row a
/// positive interaction.
struct ColumnMap {
  std::string user = "user_id";
  std::string item = "item_id";
  std::string category = "category_id";
  std::string timestamp = "timestamp";
  std::string label = "label";
  /// Fraction of malformed rows above which parsing fails outright.
  double max_malformed_fraction = 0.01;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct ParseReport {
  std::vector<InteractionRecord> records;
  std::vector<RowError> errors;
};

/// Reads an interaction CSV. Malformed rows are excluded and listed in
/// `errors`. Throws ConfigError if a mapped column is missing from the
/// header, IoError if the file cannot be read, and DataError when more than
/// `max_malformed_fraction` of the rows are malformed.
ParseReport parse_interactions(const std::string& path, const ColumnMap& columns = {});

/// Dense ids for string keys. Id 0 is reserved (padding); keys get ids
/// 1..size()-1 in lexicographic order so the mapping depends only on the key set.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> keys);

  int id(const std::string& key) const;  // throws DataError for unknown keys
  bool contains(const std::string& key) const { return ids_.count(key) != 0; }
  const std::string& key(int id) const;
  /// Table size including the reserved row 0.
  Index size() const { return static_cast<Index>(keys_.size()) + 1; }

 private:
  std::vector<std::string> keys_;
  std::map<std::string, int> ids_;
};

Vocabulary item_vocabulary(const std::vector<InteractionRecord>& records);
Vocabulary user_vocabulary(const std::vector<InteractionRecord>& records);

/// Per user, chronological samples whose history is the previous <= L
/// positive interactions. Records without history are skipped. If any record
/// has label 0, explicit negatives are used as-is; otherwise every positive
/// spawns `negatives_per_positive` samples with the same history and a target
/// drawn uniformly from items the user never interacted with positively.
/// Output is ordered by (user id, timestamp, record order).
std::vector<SequenceSample> build_samples(const std::vector<InteractionRecord>& records, Index seq_len,
                                          int negatives_per_positive, const Vocabulary& items,
                                          const Vocabulary& users, std::uint64_t seed);

}  // namespace fedin
