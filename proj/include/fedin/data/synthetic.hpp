#pragma once

#include <cstdint>
#include <vector>

#include "fedin/data/sample.hpp"

namespace fedin {

/// Periodic-interest generator. Each user has a preferred category and a
/// phase; history slots on the user's period grid hold the preferred
/// category with probability `periodic_strength`, every other slot is an item
/// of a uniformly random category.
struct SyntheticSpec {
  int num_users = 200;
  int num_items = 1000;  // excluding the padding id; ids 1..num_items
  int num_categories = 10;
  int period = 5;
  int sequence_length = 50;
  double periodic_strength = 0.9;
  int negatives_per_positive = 1;
  int samples_per_user = 10;  // positive samples drawn per user
  std::uint64_t seed = 1;

  int items_per_category() const { return num_items / num_categories; }
  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

struct SyntheticDataset {
  std::vector<SequenceSample> samples;
  std::vector<int> item_category;  // indexed by item id; padding maps to -1
  std::vector<int> user_category;  // indexed by user id - 1
  std::vector<int> user_phase;
};

/// Items of category c occupy the id block [1 + c*m, (c+1)*m] with
/// m = items_per_category. Samples are ordered by (timestamp, user, label
/// descending); a user's j-th positive and its negatives share timestamp
/// j * num_users + user.
SyntheticDataset synth_generate(const SyntheticSpec& spec);

/// Item id block start for category c.
int category_first_item(const SyntheticSpec& spec, int category);

}  // namespace fedin
