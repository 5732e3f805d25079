#pragma once

#include <string>
#include <vector>

#include "fedin/data/sample.hpp"

namespace fedin {

struct SampleFile {
  std::vector<std::string> comments;
  std::vector<SequenceSample> samples;
  std::vector<int> target_category;  // -1 where unknown
};

/// Sample-level CSV: user_id, timestamp, target_item, target_category, label,
/// history (space-separated valid item ids, oldest first). `comments` become
/// leading '#' lines. `item_category` may be empty.
void write_samples_csv(const std::string& path, const std::vector<SequenceSample>& samples,
                       const std::vector<int>& item_category, const std::vector<std::string>& comments);

/// Reads the format written by write_samples_csv and pads histories to
/// `seq_len`. Throws DataError on malformed rows or histories longer than
/// `seq_len`, IoError if unreadable.
SampleFile read_samples_csv(const std::string& path, Index seq_len);

}  // namespace fedin
