#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedin/numerics/parameter_store.hpp"

namespace fedin {

/// A block of coordinates to verify: `values` is perturbed in place while
/// `analytic` holds the gradient computed by the backward pass.
struct GradCheckTarget {
  std::string name;
  double* values = nullptr;
  const double* analytic = nullptr;
  Index size = 0;
  std::vector<Index> coords;  // empty: all coordinates, or a seeded subsample when large
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  Index max_coords_per_target = 200;
  std::uint64_t seed = 7;
};

struct GradCheckEntry {
  std::string name;
  Index checked = 0;
  double max_rel_error = 0;
  Index worst_index = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

struct GradCheckResult {
  double max_rel_error = 0;
  std::vector<GradCheckEntry> entries;
};

/// max(|a - n| / max(|a|, |n|, 1e-8))
double relative_error(double analytic, double numeric);

/// Central differences (f(x+e) - f(x-e)) / 2e against the analytic gradient.
/// The loss is returned in extended precision so the final reduction does not
/// add a rounding step at the scale of the loss value itself.
GradCheckResult finite_difference_check(const std::function<long double()>& loss, std::span<GradCheckTarget> targets,
                                        const GradCheckOptions& options = {});

/// One target per parameter in the store, reading gradients from `grad`.
std::vector<GradCheckTarget> targets_from_store(ParameterStore& store);

}  // namespace fedin
