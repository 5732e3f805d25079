#include "fedin/data/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include "fedin/model/config.hpp"
#include "fedin/numerics/errors.hpp"

namespace fedin {

namespace {

bool chronological_less(const SequenceSample& a, const SequenceSample& b) {
  return std::tie(a.timestamp, a.user_id, b.label, a.target_id, a.valid_len, a.item_ids) <
         std::tie(b.timestamp, b.user_id, a.label, b.target_id, b.valid_len, b.item_ids);
}

std::mt19937_64 sample_stream(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

DataSplits temporal_split(std::vector<SequenceSample> samples, double train_frac, double val_frac) {
  if (!(train_frac > 0 && val_frac > 0 && train_frac + val_frac < 1)) {
    throw ConfigError("temporal_split: fractions must be positive with sum < 1");
  }
  std::sort(samples.begin(), samples.end(), chronological_less);
  const std::size_t n = samples.size();
  auto cut_at = [&](double frac, std::size_t floor) {
    auto cut = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
    cut = std::clamp(cut, floor, n);
    while (cut > 0 && cut < n && samples[cut].timestamp == samples[cut - 1].timestamp) ++cut;
    return cut;
  };
  const std::size_t train_end = cut_at(train_frac, 0);
  const std::size_t val_end = cut_at(train_frac + val_frac, train_end);

  DataSplits out;
  out.train.assign(std::make_move_iterator(samples.begin()),
                   std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(train_end)));
  out.val.assign(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(train_end)),
                 std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(val_end)));
  out.test.assign(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(val_end)),
                  std::make_move_iterator(samples.end()));
  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw DataError("temporal_split: empty split (train " + std::to_string(out.train.size()) + ", val " +
                    std::to_string(out.val.size()) + ", test " + std::to_string(out.test.size()) + ")");
  }
  return out;
}

std::vector<SequenceSample> corrupt_drop(const std::vector<SequenceSample>& samples, double rho, std::uint64_t seed) {
  if (!(rho >= 0 && rho < 1)) throw ConfigError("corrupt_drop: rho must lie in [0, 1)");
  std::vector<SequenceSample> out = samples;
  if (rho == 0) return out;
  for (std::size_t n = 0; n < out.size(); ++n) {
    SequenceSample& s = out[n];
    std::mt19937_64 rng = sample_stream(seed, n);
    std::bernoulli_distribution drop(rho);
    std::vector<int> kept;
    for (Index i = 0; i < s.valid_len; ++i) {
      if (!drop(rng)) kept.push_back(s.item_ids[static_cast<std::size_t>(i)]);
    }
    if (kept.empty()) {
      std::uniform_int_distribution<Index> pick(0, s.valid_len - 1);
      kept.push_back(s.item_ids[static_cast<std::size_t>(pick(rng))]);
    }
    std::fill(s.item_ids.begin(), s.item_ids.end(), kPaddingItem);
    std::copy(kept.begin(), kept.end(), s.item_ids.begin());
    s.valid_len = static_cast<Index>(kept.size());
  }
  return out;
}

std::vector<SequenceSample> corrupt_replace(const std::vector<SequenceSample>& samples, double rho, Index num_items,
                                            std::uint64_t seed) {
  if (!(rho >= 0 && rho <= 1)) throw ConfigError("corrupt_replace: rho must lie in [0, 1]");
  if (num_items < 2) throw ConfigError("corrupt_replace: vocabulary has no items");
  std::vector<SequenceSample> out = samples;
  if (rho == 0) return out;
  std::uniform_int_distribution<int> pick(1, static_cast<int>(num_items) - 1);
  for (std::size_t n = 0; n < out.size(); ++n) {
    SequenceSample& s = out[n];
    std::mt19937_64 rng = sample_stream(seed, n);
    std::bernoulli_distribution replace(rho);
    for (Index i = 0; i < s.valid_len; ++i) {
      if (replace(rng)) s.item_ids[static_cast<std::size_t>(i)] = pick(rng);
    }
  }
  return out;
}

}  // namespace fedin
