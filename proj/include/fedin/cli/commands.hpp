#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "fedin/cli/config.hpp"
#include "fedin/data/transforms.hpp"
#include "fedin/metrics/entropy_report.hpp"
#include "fedin/model/model.hpp"
#include "fedin/training/train.hpp"

namespace fedin {

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"synth", "train", "ablate", "sweep", "noise", "spectrum", "gradcheck", "bench"};
  return names;
}

/// Exit status for an exception escaping a command: 1 config, 2 data, 3 numeric.
int exit_code_for(const std::exception& e);

struct LoadedData {
  DataSplits splits;
  Index num_items = 0;  // embedding rows including padding
  Index num_users = 0;
  std::vector<int> item_category;  // empty unless known
  std::string source;
};

/// Builds the train/val/test splits described by `cfg.data` (and
/// `cfg.synthetic` for in-memory synthetic data). Applies the optional
/// train-time corruption to the training split only.
LoadedData load_data(const ExperimentConfig& cfg);

/// `cfg.model` with the table sizes of `data` and an optional ablation.
FedinConfig model_config_for(const ExperimentConfig& cfg, const LoadedData& data);

struct TrainedModel {
  std::unique_ptr<CtrModel> model;
  TrainReport report;
};

/// Initializes a `kind` model from `seed` and trains it with `cfg.train`.
TrainedModel train_model(const ExperimentConfig& cfg, const LoadedData& data, const std::string& kind,
                         const FedinConfig& model_cfg, std::ostream* log);

/// Report JSON without provenance fields; `seconds` per epoch is the only
/// wall-clock value.
Json report_json(const TrainReport& report);

/// Checkpoint with a self-describing header: the model kind, its full
/// FedinConfig, the resolved experiment config and its hash.
void save_model(const std::string& path, const ExperimentConfig& cfg, const CtrModel& model);
std::unique_ptr<CtrModel> load_model(const std::string& path);

struct NoisePoint {
  std::string mode;
  std::string branch;
  double rho = 0;
  EvalMetrics metrics;
  double relative_auc = 0;
  double relative_gauc = 0;
};

/// Evaluates `model` on `test` corrupted at every rho. The corruption stream
/// depends only on (seed, rho index), so models compared under one seed see
/// identical corrupted inputs. Relative values divide by the rho = 0 metric of
/// the uncorrupted set.
std::vector<NoisePoint> noise_curve(const CtrModel& model, const std::string& branch,
                                    const std::vector<SequenceSample>& test, const std::string& mode,
                                    const std::vector<double>& rhos, Index num_items, std::uint64_t seed);

struct BenchRow {
  Index length = 0;
  double t_freq = 0;  // median seconds per forward
  double t_attn = 0;
};

/// Frequency-branch forward against unpatched multi-head self-attention over
/// the whole sequence, median of `reps` timed repetitions after one warm-up.
std::vector<BenchRow> run_bench(const BenchOptions& options, std::uint64_t seed);

/// Runs one subcommand, writing every output under `out_dir` along with
/// config.json and manifest.json. Returns 0, or 3 when gradcheck fails.
/// Errors propagate as exceptions.
int run_command(const std::string& command, const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log);

}  // namespace fedin
