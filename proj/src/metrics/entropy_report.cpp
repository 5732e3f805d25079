#include "fedin/metrics/entropy_report.hpp"

#include <algorithm>
#include <cmath>

#include "fedin/metrics/metrics.hpp"

namespace fedin {

std::vector<double> EntropyReport::values(bool positive_class) const {
  std::vector<double> v;
  for (const auto& s : samples) {
    if ((s.label > 0.5) == positive_class) v.push_back(s.entropy);
  }
  return v;
}

EntropySummary summarize(std::vector<double> values) {
  EntropySummary s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

EntropyReport entropy_report(const FedinModel& model, const std::vector<SequenceSample>& samples, int histogram_bins) {
  if (histogram_bins < 1) throw ConfigError("entropy_report: histogram_bins must be positive");
  EntropyReport rep;
  const Index len = model.config().max_seq_len;
  rep.num_bins = len / 2;
  rep.max_bits = std::log2(static_cast<double>(rep.num_bins));
  rep.edges.resize(static_cast<std::size_t>(histogram_bins) + 1);
  for (int i = 0; i < histogram_bins; ++i) rep.edges[static_cast<std::size_t>(i)] = rep.max_bits * i / histogram_bins;
  rep.edges.back() = rep.max_bits;
  rep.count_pos.assign(static_cast<std::size_t>(histogram_bins), 0);
  rep.count_neg.assign(static_cast<std::size_t>(histogram_bins), 0);

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SequenceSample& s = samples[i];
    const VectorXd scores = model.target_score_signal(s);
    const SpectralEntropy h = spectral_entropy(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
    const double bits = std::clamp(h.bits, 0.0, rep.max_bits);
    rep.samples.push_back({i, s.user_id, s.label, bits, h.degenerate});
    auto bin = static_cast<std::size_t>(std::floor(bits / rep.max_bits * histogram_bins));
    bin = std::min(bin, static_cast<std::size_t>(histogram_bins) - 1);
    (s.label > 0.5 ? rep.count_pos : rep.count_neg)[bin] += 1;
  }
  rep.positive = summarize(rep.values(true));
  rep.negative = summarize(rep.values(false));
  if (rep.positive.count == 0 || rep.negative.count == 0) {
    throw DataError("entropy_report: samples must contain both labels");
  }
  return rep;
}

}  // namespace fedin
