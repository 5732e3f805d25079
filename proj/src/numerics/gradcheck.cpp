#include "fedin/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fedin {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult finite_difference_check(const std::function<long double()>& loss, std::span<GradCheckTarget> targets,
                                        const GradCheckOptions& options) {
  if (!(options.epsilon > 0)) throw UsageError("finite_difference_check: epsilon must be positive");
  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (auto& target : targets) {
    std::vector<Index> coords = target.coords;
    if (coords.empty()) {
      coords.resize(static_cast<size_t>(target.size));
      std::iota(coords.begin(), coords.end(), Index{0});
      if (target.size > options.max_coords_per_target) {
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(static_cast<size_t>(options.max_coords_per_target));
        std::sort(coords.begin(), coords.end());
      }
    }
    GradCheckEntry entry{target.name, 0, 0.0};
    for (Index i : coords) {
      double& x = target.values[i];
      const double saved = x;
      x = saved + options.epsilon;
      const long double up = loss();
      x = saved - options.epsilon;
      const long double down = loss();
      x = saved;
      const auto numeric = static_cast<double>((up - down) / (2 * static_cast<long double>(options.epsilon)));
      const double err = relative_error(target.analytic[i], numeric);
      if (err >= entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_index = i;
        entry.worst_analytic = target.analytic[i];
        entry.worst_numeric = numeric;
      }
      ++entry.checked;
    }
    result.max_rel_error = std::max(result.max_rel_error, entry.max_rel_error);
    result.entries.push_back(std::move(entry));
  }
  return result;
}

std::vector<GradCheckTarget> targets_from_store(ParameterStore& store) {
  std::vector<GradCheckTarget> out;
  out.reserve(store.size());
  for (auto& p : store) {
    out.push_back({p->name, p->value.data(), p->grad.data(), p->size(), {}});
  }
  return out;
}

}  // namespace fedin
