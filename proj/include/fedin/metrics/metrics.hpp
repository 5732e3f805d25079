#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedin/numerics/errors.hpp"
#include "fedin/numerics/tensor.hpp"

namespace fedin {

/// Raised when a metric is undefined for its input (e.g. AUC with one class).
class UndefinedMetricError : public DataError {
 public:
  using DataError::DataError;
};

struct ScoredExample {
  int user_id = 0;
  double score = 0;
  double label = 0;
};

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Rank statistic with average ranks for ties.
double auc(std::span<const ScoredExample> examples);

/// Per-user AUC over users with both classes, weighted by each user's
/// example count.
double gauc(std::span<const ScoredExample> examples);

/// Mean binary cross-entropy of probabilities clipped to [1e-15, 1 - 1e-15].
double logloss(std::span<const ScoredExample> examples);

struct SpectralEntropy {
  double bits = 0;
  bool degenerate = false;  // no power outside the DC bin
};

/// Shannon entropy (bits) of the power spectrum over bins 1..floor(L/2),
/// normalized to a distribution. Throws DataError on non-finite input.
SpectralEntropy spectral_entropy(std::span<const double> signal);

}  // namespace fedin
