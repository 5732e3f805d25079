#pragma once

#include <vector>

#include "fedin/data/sample.hpp"
#include "fedin/model/model.hpp"

namespace fedin {

struct EntropySample {
  std::size_t index = 0;  // position in the input sample list
  int user_id = 0;
  double label = 0;
  double entropy = 0;
  bool degenerate = false;
};

struct EntropySummary {
  std::size_t count = 0;
  double mean = 0;
  double median = 0;
  double std = 0;  // population standard deviation
};

/// Spectral entropy of the target-attention scores, split by label.
struct EntropyReport {
  Index num_bins = 0;  // non-DC bins, floor(L/2)
  double max_bits = 0;  // log2(num_bins)
  std::vector<EntropySample> samples;
  EntropySummary positive;
  EntropySummary negative;
  std::vector<double> edges;  // histogram_bins + 1 fixed edges over [0, max_bits]
  std::vector<std::size_t> count_pos;
  std::vector<std::size_t> count_neg;

  std::vector<double> values(bool positive_class) const;
};

EntropySummary summarize(std::vector<double> values);

/// Scores every sample with `model.target_score_signal` and takes its
/// spectral entropy. Throws DataError unless both labels are present.
EntropyReport entropy_report(const FedinModel& model, const std::vector<SequenceSample>& samples,
                             int histogram_bins = 20);

}  // namespace fedin
