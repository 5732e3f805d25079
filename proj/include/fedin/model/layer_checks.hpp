#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedin/model/model.hpp"
#include "fedin/numerics/gradcheck.hpp"

namespace fedin {

struct LayerCheckReport {
  std::string layer;
  GradCheckResult result;
};

/// Shapes used by the standalone layer checks.
struct LayerCheckShape {
  Index seq_len = 16;
  Index dim = 8;
  Index patch = 4;
  Index top_k = 3;
  Index heads = 2;
};

/// Finite-difference verification of every differentiable layer in isolation.
/// Each check drives the layer with random inputs and a random linear
/// read-out, and covers both parameter and input coordinates.
std::vector<LayerCheckReport> run_layer_gradchecks(std::uint64_t seed, const GradCheckOptions& options = {},
                                                   const LayerCheckShape& shape = {});

/// End-to-end check of mean BCE over `batch` for one model. Embedding-table
/// coordinates are restricted to rows the batch touches.
LayerCheckReport run_model_gradcheck(CtrModel& model, std::span<const SequenceSample> batch,
                                     const GradCheckOptions& options = {});

/// Tiny random model config and batch used by the CLI and acceptance checks.
FedinConfig gradcheck_model_config(Ablation ablation = Ablation::Full);
std::vector<SequenceSample> gradcheck_batch(const FedinConfig& cfg, std::uint64_t seed, Index batch = 2);

/// Re-draws the item table in [-range, range] so the check exercises
/// non-uniform attention rather than the near-zero initial embeddings.
void spread_item_embeddings(CtrModel& model, double range, std::uint64_t seed);

/// Spreads the item table and moves biases, shifts and gains off their
/// initial values. At initialization the DC bin of the normalized spectrum is
/// zero and the complex biases are zero, which puts those pre-activations
/// exactly on the CReLU kink where finite differences are meaningless.
void perturb_to_generic_point(CtrModel& model, double embed_range, std::uint64_t seed);

}  // namespace fedin
