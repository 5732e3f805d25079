#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedin/data/interactions.hpp"
#include "fedin/data/synthetic.hpp"
#include "fedin/model/config.hpp"
#include "fedin/training/train.hpp"

namespace fedin {

using Json = nlohmann::json;

/// Every recognised key with its default value. Keys absent here are
/// rejected, and a value must have the same JSON type as its default
/// (integers are accepted where a float is expected).
Json default_config();

/// Merges `patch` into `base` under the rules of default_config. `where`
/// prefixes key paths in error messages.
void merge_config(Json& base, const Json& patch, const std::string& where = "");

/// Applies one `dotted.key=value` override. The value is read as JSON when
/// it parses, otherwise as a string.
void apply_override(Json& config, const std::string& assignment);

/// Defaults <- file (if `path` is non-empty) <- overrides <- FEDIN_SEED.
Json load_config(const std::string& path, const std::vector<std::string>& overrides,
                 const std::optional<std::string>& seed_env);

/// 16 hex digits of FNV-1a over the compact key-sorted serialization.
std::string config_hash(const Json& config);

enum class DataFormat { Synthetic, Samples, Interactions };

struct DataOptions {
  DataFormat format = DataFormat::Synthetic;
  std::string path;
  ColumnMap columns;
  int negatives_per_positive = 1;
  double train_frac = 0.7;
  double val_frac = 0.15;
  std::string train_corruption = "none";  // none, drop or replace
  double train_corruption_rho = 0;
};

struct SweepOptions {
  std::string parameter = "patch_size";
  std::vector<Index> values;
};

struct NoiseOptions {
  std::string mode = "replace";
  std::vector<double> rhos;
  std::string time_checkpoint;
  std::string freq_checkpoint;
};

struct SpectrumOptions {
  std::string checkpoint;
  std::string split = "test";
  int histogram_bins = 20;
};

struct GradcheckSettings {
  std::uint64_t seed = 7;
  Index batch = 2;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  double fault = 0;  // nonzero corrupts the model backward (negative control)
};

struct BenchOptions {
  std::vector<Index> lengths;
  int reps = 20;
  Index embed_dim = 32;
  Index num_heads = 2;
};

/// Typed view of a resolved configuration.
struct ExperimentConfig {
  Json json;
  std::string hash;
  std::uint64_t seed = 1;
  std::string model_kind = "fedin";
  FedinConfig model;  // num_items / num_users are filled in from the data
  TrainConfig train;
  std::string checkpoint;  // train: evaluate this checkpoint instead of training
  DataOptions data;
  SyntheticSpec synthetic;
  std::vector<Ablation> ablate_variants;
  SweepOptions sweep;
  NoiseOptions noise;
  SpectrumOptions spectrum;
  GradcheckSettings gradcheck;
  BenchOptions bench;
};

/// Throws ConfigError on any invalid value.
ExperimentConfig resolve_config(const Json& config);

Json to_json(const FedinConfig& cfg);
FedinConfig fedin_config_from_json(const Json& j);

}  // namespace fedin
