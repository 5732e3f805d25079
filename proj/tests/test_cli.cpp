#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "fedin/cli/commands.hpp"
#include "fedin/cli/config.hpp"
#include "fedin/data/csv.hpp"
#include "fedin/data/sample_io.hpp"

using namespace fedin;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "seed": 3,
  "model": {"embed_dim": 8, "max_seq_len": 10, "patch_size": 5, "top_k": 4, "head_hidden": [8], "gate_hidden": 4},
  "train": {"batch_size": 32, "max_epochs": 1, "learning_rate": 0.003},
  "synthetic": {"num_users": 30, "num_items": 150, "samples_per_user": 4},
  "sweep": {"parameter": "patch_size", "values": [2, 5, 10, 3]},
  "noise": {"rhos": [0.0, 0.5]},
  "spectrum": {"histogram_bins": 5},
  "gradcheck": {"batch": 1},
  "bench": {"lengths": [16, 32], "reps": 2, "embed_dim": 8}
})";

Json tiny_json() {
  Json cfg = default_config();
  merge_config(cfg, Json::parse(kTiny));
  return cfg;
}

ExperimentConfig tiny() { return resolve_config(tiny_json()); }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fedin_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

CsvFile read_csv(const fs::path& p) { return read_csv_file(p.string()); }

int run(const std::string& cmd, const ExperimentConfig& cfg, const fs::path& dir) {
  std::ostringstream log;
  return run_command(cmd, cfg, dir.string(), log);
}

int run_binary(const std::string& args) {
  const std::string line = std::string(FEDIN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(line.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, UnknownKeyRejected) {
  Json cfg = default_config();
  EXPECT_THROW(merge_config(cfg, Json::parse(R"({"model": {"embed_dimm": 4}})")), ConfigError);
  EXPECT_THROW(apply_override(cfg, "trainer.learning_rate=0.1"), ConfigError);
}

TEST(Config, TypesChecked) {
  Json cfg = default_config();
  EXPECT_THROW(apply_override(cfg, "model.embed_dim=\"big\""), ConfigError);
  EXPECT_THROW(apply_override(cfg, "train.learning_rate=fast"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "model.embed_dim=2.5"), ConfigError);
  EXPECT_NO_THROW(apply_override(cfg, "train.learning_rate=1"));
  EXPECT_EQ(cfg["train"]["learning_rate"].get<double>(), 1.0);
  EXPECT_THROW(apply_override(cfg, "noequals"), ConfigError);
}

TEST(Config, OverridesApplyInOrder) {
  Json cfg = default_config();
  apply_override(cfg, "model.patch_size=5");
  apply_override(cfg, "model.head_hidden=[4,2]");
  apply_override(cfg, "noise.mode=drop");
  const ExperimentConfig r = resolve_config(cfg);
  EXPECT_EQ(r.model.patch_size, 5);
  EXPECT_EQ(r.model.head_hidden, (std::vector<Index>{4, 2}));
  EXPECT_EQ(r.noise.mode, "drop");
}

TEST(Config, InvalidValuesRejectedAtResolve) {
  Json cfg = default_config();
  apply_override(cfg, "model.patch_size=0");
  EXPECT_THROW(resolve_config(cfg), ConfigError);
  cfg = default_config();
  apply_override(cfg, "model.ablation=no_such_variant");
  EXPECT_THROW(resolve_config(cfg), ConfigError);
  cfg = default_config();
  apply_override(cfg, "noise.mode=shuffle");
  EXPECT_THROW(resolve_config(cfg), ConfigError);
}

TEST(Config, SeedEnvironmentOverride) {
  const Json a = load_config("", {"seed=4"}, std::string("99"));
  EXPECT_EQ(a["seed"].get<std::uint64_t>(), 99u);
  EXPECT_EQ(resolve_config(a).seed, 99u);
  EXPECT_THROW(load_config("", {}, std::string("-3")), ConfigError);
  EXPECT_THROW(load_config("", {}, std::string("12x")), ConfigError);
  EXPECT_EQ(load_config("", {"seed=4"}, std::nullopt)["seed"].get<int>(), 4);
}

TEST(Config, FileLoadingAndErrors) {
  const fs::path dir = fresh_dir("cfgfile");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << kTiny;
  const Json j = load_config((dir / "c.json").string(), {"seed=8"}, std::nullopt);
  EXPECT_EQ(j["model"]["embed_dim"].get<int>(), 8);
  EXPECT_EQ(j["seed"].get<int>(), 8);
  std::ofstream(dir / "bad.json") << "{not json";
  EXPECT_THROW(load_config((dir / "bad.json").string(), {}, std::nullopt), ConfigError);
  EXPECT_THROW(load_config((dir / "missing.json").string(), {}, std::nullopt), ConfigError);
}

TEST(Config, HashStableAndSensitive) {
  const Json a = tiny_json();
  Json b = Json::parse(a.dump());
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  apply_override(b, "train.learning_rate=0.0031");
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(tiny().hash, config_hash(a));
}

TEST(Config, FedinConfigRoundTrip) {
  FedinConfig c = tiny().model;
  c.num_items = 151;
  c.ablation = Ablation::NoFreqTa;
  const FedinConfig back = fedin_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.num_items, 151);
}

TEST(ExitCodes, MapErrorFamilies) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), 1);
  EXPECT_EQ(exit_code_for(DataError("x")), 2);
  EXPECT_EQ(exit_code_for(IoError("x")), 2);
  EXPECT_EQ(exit_code_for(NumericError("x")), 3);
}

// ---------------------------------------------------------------- commands

TEST(Commands, SynthWritesExpectedRowsReproducibly) {
  const auto cfg = tiny();
  const fs::path a = fresh_dir("synth_a"), b = fresh_dir("synth_b");
  ASSERT_EQ(run("synth", cfg, a), 0);
  ASSERT_EQ(run("synth", cfg, b), 0);
  const SampleFile f = read_samples_csv((a / "samples.csv").string(), 10);
  EXPECT_EQ(f.samples.size(), 30u * 4 * 2);
  EXPECT_EQ(slurp(a / "samples.csv"), slurp(b / "samples.csv"));
  bool has_hash = false;
  for (const auto& c : f.comments) has_hash = has_hash || c.find(cfg.hash) != std::string::npos;
  EXPECT_TRUE(has_hash);
  const Json m = read_json(a / "manifest.json");
  EXPECT_EQ(m["config_hash"], cfg.hash);
  EXPECT_EQ(m["seed"], cfg.seed);
  EXPECT_EQ(m["status"], 0);
  EXPECT_EQ(read_json(a / "config.json")["config_hash"], cfg.hash);
}

TEST(Commands, SynthFileFeedsTraining) {
  const auto cfg = tiny();
  const fs::path dir = fresh_dir("synth_feed");
  ASSERT_EQ(run("synth", cfg, dir), 0);
  Json j = tiny_json();
  j["data"]["format"] = "samples";
  j["data"]["path"] = (dir / "samples.csv").string();
  const LoadedData from_file = load_data(resolve_config(j));
  const LoadedData in_memory = load_data(cfg);
  EXPECT_EQ(from_file.splits.train, in_memory.splits.train);
  EXPECT_EQ(from_file.splits.test, in_memory.splits.test);
}

TEST(Commands, InteractionsFormatLoadsFixture) {
  Json j = tiny_json();
  j["data"]["format"] = "interactions";
  j["data"]["path"] = std::string(FEDIN_TEST_DATA_DIR) + "/interactions_1000.csv";
  const LoadedData d = load_data(resolve_config(j));
  EXPECT_GT(d.splits.train.size(), 0u);
  EXPECT_EQ(d.num_users, 38);  // 37 users plus the reserved row
  EXPECT_EQ(d.num_items, 122);  // 101 plain ids, 20 quoted ids, padding
}

TEST(Commands, TrainWritesReportMetricsAndCheckpoint) {
  const auto cfg = tiny();
  const fs::path dir = fresh_dir("train");
  ASSERT_EQ(run("train", cfg, dir), 0);
  const Json rep = read_json(dir / "report.json");
  EXPECT_EQ(rep["config_hash"], cfg.hash);
  const CsvFile metrics = read_csv(dir / "metrics.csv");
  EXPECT_EQ(metrics.header, (std::vector<std::string>{"epoch", "loss", "val_auc", "val_gauc"}));
  EXPECT_EQ(metrics.rows.size(), 1u);
  ASSERT_TRUE(fs::exists(dir / "best.ckpt"));

  Json j = tiny_json();
  j["train"]["checkpoint"] = (dir / "best.ckpt").string();
  const fs::path eval_dir = fresh_dir("train_eval");
  ASSERT_EQ(run("train", resolve_config(j), eval_dir), 0);
  const Json ev = read_json(eval_dir / "eval.json");
  EXPECT_EQ(ev["test"]["auc"], rep["test"]["auc"]);
}

TEST(Commands, AblateEmitsOneRowPerVariantUnderOneSeed) {
  const auto cfg = tiny();
  const fs::path dir = fresh_dir("ablate");
  ASSERT_EQ(run("ablate", cfg, dir), 0);
  const CsvFile f = read_csv(dir / "ablation.csv");
  ASSERT_EQ(f.rows.size(), 5u);
  std::set<std::string> variants, seeds;
  for (const auto& row : f.rows) {
    const auto cells = *split_csv_line(row.text);
    variants.insert(cells[0]);
    seeds.insert(cells[5]);
    EXPECT_EQ(cells[6], "ok");
  }
  EXPECT_EQ(variants.size(), 5u);
  EXPECT_EQ(seeds, std::set<std::string>{std::to_string(cfg.seed)});
}

TEST(Commands, SweepEmitsOneRowPerValue) {
  const auto cfg = tiny();
  const fs::path dir = fresh_dir("sweep");
  ASSERT_EQ(run("sweep", cfg, dir), 0);
  const CsvFile f = read_csv(dir / "sweep.csv");
  ASSERT_EQ(f.rows.size(), 4u);
  EXPECT_EQ(f.header[1], "value");
}

TEST(Commands, NoiseCurveStartsAtOne) {
  const auto cfg = tiny();
  const fs::path dir = fresh_dir("noise");
  ASSERT_EQ(run("noise", cfg, dir), 0);
  const CsvFile f = read_csv(dir / "noise.csv");
  ASSERT_EQ(f.rows.size(), 2u * 2);
  for (const auto& row : f.rows) {
    const auto cells = *split_csv_line(row.text);
    if (std::stod(cells[2]) == 0.0) {
      EXPECT_EQ(std::stod(cells[5]), 1.0);
      EXPECT_EQ(std::stod(cells[6]), 1.0);
    }
  }
}

TEST(Commands, SpectrumCountsMatchLabels) {
  const auto cfg = tiny();
  const fs::path train_dir = fresh_dir("spec_train");
  ASSERT_EQ(run("train", cfg, train_dir), 0);
  Json j = tiny_json();
  j["spectrum"]["checkpoint"] = (train_dir / "best.ckpt").string();
  const auto scfg = resolve_config(j);
  const fs::path dir = fresh_dir("spectrum");
  ASSERT_EQ(run("spectrum", scfg, dir), 0);
  const LoadedData data = load_data(scfg);
  std::size_t pos = 0;
  for (const auto& s : data.splits.test) pos += s.label == 1;
  const Json e = read_json(dir / "entropy.json");
  EXPECT_EQ(e["positive"]["count"].get<std::size_t>(), pos);
  EXPECT_EQ(e["negative"]["count"].get<std::size_t>(), data.splits.test.size() - pos);
  const CsvFile hist = read_csv(dir / "entropy_hist.csv");
  EXPECT_EQ(hist.rows.size(), 5u);
  EXPECT_EQ(read_csv(dir / "entropy_samples.csv").rows.size(), data.splits.test.size());
}

TEST(Commands, GradcheckPassesAndDetectsFault) {
  const fs::path dir = fresh_dir("gradcheck");
  EXPECT_EQ(run("gradcheck", tiny(), dir), 0);
  EXPECT_TRUE(read_json(dir / "gradcheck.json")["pass"].get<bool>());
  Json j = tiny_json();
  j["gradcheck"]["fault"] = 0.01;
  EXPECT_EQ(run("gradcheck", resolve_config(j), fresh_dir("gradcheck_fault")), 3);
}

TEST(Commands, BenchEmitsOneRowPerLength) {
  const fs::path dir = fresh_dir("bench");
  ASSERT_EQ(run("bench", tiny(), dir), 0);
  const CsvFile f = read_csv(dir / "bench.csv");
  EXPECT_EQ(f.header, (std::vector<std::string>{"L", "t_freq", "t_attn"}));
  EXPECT_EQ(f.rows.size(), 2u);
}

TEST(Commands, UnknownCommandIsUsageError) {
  EXPECT_THROW(run("plot", tiny(), fresh_dir("plot")), UsageError);
}

// ---------------------------------------------------------------- binary

TEST(Binary, ExitCodes) {
  const fs::path dir = fresh_dir("binary");
  fs::create_directories(dir);
  std::ofstream(dir / "tiny.json") << kTiny;
  const std::string config = "--config " + (dir / "tiny.json").string();
  EXPECT_EQ(run_binary("synth " + config + " --out " + (dir / "ok").string()), 0);
  EXPECT_EQ(run_binary("synth " + config + " --set model.nope=1 --out " + (dir / "x").string()), 1);
  EXPECT_EQ(run_binary("synth --out " + (dir / "y").string()), 0);  // defaults alone are valid
  EXPECT_EQ(run_binary("frobnicate " + config + " --out " + (dir / "z").string()), 1);
  EXPECT_EQ(run_binary("train " + config + " --set data.format=samples --set data.path=/nonexistent.csv --out " +
                       (dir / "w").string()),
            2);
  EXPECT_EQ(run_binary("gradcheck " + config + " --set gradcheck.fault=0.01 --out " + (dir / "g").string()), 3);
  EXPECT_EQ(std::system(("FEDIN_SEED=abc " + std::string(FEDIN_CLI_PATH) + " synth " + config + " --out " +
                         (dir / "s").string() + " >/dev/null 2>&1")
                            .c_str()) >> 8,
            1);
}
