#pragma once

#include <cstdint>
#include <vector>

#include "fedin/data/sample.hpp"

namespace fedin {

struct DataSplits {
  std::vector<SequenceSample> train, val, test;
};

/// Global chronological partition. Cut points sit at round(frac * n) in the
/// sorted order and then move forward past equal timestamps, so a boundary
/// timestamp always lands in the earlier split. The sort key covers every
/// sample field, making the result independent of input order.
DataSplits temporal_split(std::vector<SequenceSample> samples, double train_frac, double val_frac);

/// Deletes each valid history position with probability rho and compacts the
/// survivors to the front. At least one behavior always survives. Each
/// sample draws from its own stream derived from (seed, sample index).
std::vector<SequenceSample> corrupt_drop(const std::vector<SequenceSample>& samples, double rho, std::uint64_t seed);

/// Replaces each valid history position with probability rho by an item
/// drawn uniformly from ids 1..num_items-1.
std::vector<SequenceSample> corrupt_replace(const std::vector<SequenceSample>& samples, double rho, Index num_items,
                                            std::uint64_t seed);

}  // namespace fedin
