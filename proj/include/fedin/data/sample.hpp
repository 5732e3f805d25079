#pragma once

#include <cstdint>
#include <vector>

#include "fedin/numerics/tensor.hpp"

namespace fedin {

/// One instance: chronological history in positions [0, valid_len), padding
/// (item 0) after, plus the candidate target and its label.
struct SequenceSample {
  std::vector<int> item_ids;
  Index valid_len = 0;
  int target_id = 0;
  double label = 0;
  int user_id = 0;
  std::int64_t timestamp = 0;

  bool operator==(const SequenceSample&) const = default;
};

/// Throws DataError if the padding discipline or id ranges are violated.
void validate_sample(const SequenceSample& s, Index seq_len, Index num_items);

}  // namespace fedin
