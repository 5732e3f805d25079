#include "fedin/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fedin/numerics/fft.hpp"

namespace fedin {

double auc(std::span<const ScoredExample> examples) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const auto& e : examples) {
    if (!std::isfinite(e.score)) throw DataError("auc: non-finite score");
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return examples[a].score < examples[b].score; });
  double positives = 0, negatives = 0, positive_rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && examples[order[j]].score == examples[order[i]].score) ++j;
    const double average_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (examples[order[t]].label > 0.5) {
        positives += 1;
        positive_rank_sum += average_rank;
      } else {
        negatives += 1;
      }
    }
    i = j;
  }
  if (positives == 0 || negatives == 0) throw UndefinedMetricError("auc: needs at least one positive and one negative");
  return (positive_rank_sum - positives * (positives + 1) / 2) / (positives * negatives);
}

double gauc(std::span<const ScoredExample> examples) {
  std::map<int, std::vector<ScoredExample>> by_user;
  for (const auto& e : examples) by_user[e.user_id].push_back(e);
  double weighted = 0, weight = 0;
  for (const auto& [user, group] : by_user) {
    const bool has_pos = std::any_of(group.begin(), group.end(), [](const ScoredExample& e) { return e.label > 0.5; });
    const bool has_neg = std::any_of(group.begin(), group.end(), [](const ScoredExample& e) { return e.label <= 0.5; });
    if (!has_pos || !has_neg) continue;
    const auto n = static_cast<double>(group.size());
    weighted += n * auc(group);
    weight += n;
  }
  if (weight == 0) throw UndefinedMetricError("gauc: no user has both a positive and a negative example");
  return weighted / weight;
}

double logloss(std::span<const ScoredExample> examples) {
  if (examples.empty()) throw UndefinedMetricError("logloss: no examples");
  double total = 0;
  for (const auto& e : examples) {
    const double p = std::clamp(e.score, 1e-15, 1 - 1e-15);
    total -= e.label > 0.5 ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(examples.size());
}

SpectralEntropy spectral_entropy(std::span<const double> signal) {
  const auto n = static_cast<Index>(signal.size());
  if (n < 2) throw DimensionError("spectral_entropy: signal length must be >= 2");
  MatrixXd column(n, 1);
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(signal[static_cast<std::size_t>(i)])) throw DataError("spectral_entropy: non-finite input");
    column(i, 0) = signal[static_cast<std::size_t>(i)];
  }
  const SpectrumXd s = rfft(column);
  const Index bins = s.real.rows();
  std::vector<double> power(static_cast<std::size_t>(bins - 1));
  double total = 0;
  for (Index k = 1; k < bins; ++k) {
    const double p = s.real(k, 0) * s.real(k, 0) + s.imag(k, 0) * s.imag(k, 0);
    power[static_cast<std::size_t>(k - 1)] = p;
    total += p;
  }
  // Relative threshold: a constant signal leaves only FFT roundoff off DC.
  const double dc = s.real(0, 0) * s.real(0, 0);
  if (total == 0 || total <= 1e-24 * (dc + total)) return {0.0, true};
  // Bins below 1e-24 of the total (amplitude 1e-12 relative) are FFT roundoff.
  double h = 0;
  for (double p : power) {
    const double q = p / total;
    if (q <= 1e-24) continue;
    h -= q * std::log2(q);
  }
  return {std::max(h, 0.0), false};
}

}  // namespace fedin
