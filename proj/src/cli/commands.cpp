#include "fedin/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "fedin/data/interactions.hpp"
#include "fedin/data/sample_io.hpp"
#include "fedin/data/synthetic.hpp"
#include "fedin/metrics/metrics.hpp"
#include "fedin/model/layer_checks.hpp"
#include "fedin/numerics/errors.hpp"
#include "fedin/training/checkpoint.hpp"

namespace fedin {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UsageError*>(&e)) return 1;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DimensionError*>(&e)) return 2;
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  return 2;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json metric_value(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

Json eval_json(const EvalMetrics& m) {
  return Json{{"auc", metric_value(m.auc)}, {"gauc", metric_value(m.gauc)}, {"logloss", metric_value(m.logloss)}, {"count", m.count}};
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes provenance-stamped outputs and records them for the manifest.
class Outputs {
 public:
  Outputs(const ExperimentConfig& cfg, std::string command, const std::string& dir)
      : cfg_(cfg), command_(std::move(command)), dir_(dir), start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory '" + dir + "'");
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::vector<std::string> stamp() const {
    return {"command=" + command_, "config_hash=" + cfg_.hash, "seed=" + std::to_string(cfg_.seed)};
  }

  void json(const std::string& name, Json body) {
    body["config_hash"] = cfg_.hash;
    body["seed"] = cfg_.seed;
    write(name, body.dump(2) + "\n");
  }

  void csv(const std::string& name, const std::string& header, const std::vector<std::string>& rows) {
    std::string text;
    for (const auto& c : stamp()) text += "# " + c + "\n";
    text += header + "\n";
    for (const auto& r : rows) text += r + "\n";
    write(name, text);
  }

  void write(const std::string& name, const std::string& text) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw IoError("cannot open '" + path(name) + "' for writing");
    out << text;
    if (!out) throw IoError("write error on '" + path(name) + "'");
    record(name);
  }

  void record(const std::string& name) {
    if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
  }

  void manifest(int status, const std::string& error = "") {
    Json outputs = Json::array();
    for (const auto& f : files_) {
      const std::string bytes = read_file(dir_ / f);
      outputs.push_back({{"file", f}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a(bytes))}});
    }
    Json m{{"command", command_},
           {"config_hash", cfg_.hash},
           {"seed", cfg_.seed},
           {"config", cfg_.json},
           {"outputs", outputs},
           {"status", status},
           {"elapsed_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()}};
    if (!error.empty()) m["error"] = error;
    std::ofstream out(path("manifest.json"), std::ios::binary);
    out << m.dump(2) << "\n";
    if (!out) throw IoError("write error on '" + path("manifest.json") + "'");
  }

 private:
  const ExperimentConfig& cfg_;
  std::string command_;
  fs::path dir_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> files_;
};

std::vector<SequenceSample> corrupt(const std::vector<SequenceSample>& samples, const std::string& mode, double rho,
                                    Index num_items, std::uint64_t seed) {
  if (mode == "drop") return corrupt_drop(samples, rho, seed);
  if (mode == "replace") return corrupt_replace(samples, rho, num_items, seed);
  throw ConfigError("unknown corruption mode '" + mode + "'");
}

void log_epoch(std::ostream* log, const std::string& tag, const EpochRecord& r) {
  if (!log) return;
  *log << "[" << tag << "] epoch " << r.epoch << " loss " << r.train_loss << " val_auc " << r.val_auc << " val_gauc "
       << r.val_gauc << " (" << r.seconds << " s)" << std::endl;
}

std::string metrics_row(const EpochRecord& r) {
  return std::to_string(r.epoch) + "," + num(r.train_loss) + "," + num(r.val_auc) + "," + num(r.val_gauc);
}

constexpr const char* kMetricsHeader = "epoch,loss,val_auc,val_gauc";

// ---------------------------------------------------------------- commands

int cmd_synth(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const SyntheticSpec& spec = cfg.synthetic;
  const SyntheticDataset data = synth_generate(spec);
  std::vector<std::string> comments = out.stamp();
  comments.push_back("num_items=" + std::to_string(spec.num_items));
  comments.push_back("num_users=" + std::to_string(spec.num_users));
  comments.push_back("sequence_length=" + std::to_string(spec.sequence_length));
  write_samples_csv(out.path("samples.csv"), data.samples, data.item_category, comments);
  out.record("samples.csv");

  std::vector<std::string> users;
  for (std::size_t u = 0; u < data.user_category.size(); ++u) {
    users.push_back(std::to_string(u + 1) + "," + std::to_string(data.user_category[u]) + "," +
                    std::to_string(data.user_phase[u]));
  }
  out.csv("users.csv", "user_id,preferred_category,phase", users);
  log << "synth: wrote " << data.samples.size() << " samples" << std::endl;
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const LoadedData data = load_data(cfg);
  if (!cfg.checkpoint.empty()) {
    const auto model = load_model(cfg.checkpoint);
    const EvalMetrics val = evaluate(*model, data.splits.val);
    const EvalMetrics test = evaluate(*model, data.splits.test);
    out.json("eval.json", Json{{"checkpoint", cfg.checkpoint}, {"model", model->kind()}, {"val", eval_json(val)},
                               {"test", eval_json(test)}});
    log << "train: evaluated " << cfg.checkpoint << " val_auc " << val.auc << " test_auc " << test.auc << std::endl;
    return 0;
  }
  const FedinConfig model_cfg = model_config_for(cfg, data);
  TrainedModel tm = train_model(cfg, data, cfg.model_kind, model_cfg, &log);
  Json report = report_json(tm.report);
  report["model"] = tm.model->kind();
  report["ablation"] = to_string(model_cfg.ablation);
  out.json("report.json", report);
  std::vector<std::string> rows;
  for (const auto& r : tm.report.epochs) rows.push_back(metrics_row(r));
  out.csv("metrics.csv", kMetricsHeader, rows);
  save_model(out.path("best.ckpt"), cfg, *tm.model);
  out.record("best.ckpt");
  log << "train: best epoch " << tm.report.best_epoch << " test_auc " << tm.report.test.auc << " test_gauc "
      << tm.report.test.gauc << std::endl;
  return 0;
}

int cmd_ablate(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const LoadedData data = load_data(cfg);
  std::vector<std::string> rows;
  std::string first_error;
  int first_code = 0;
  for (Ablation a : cfg.ablate_variants) {
    FedinConfig mc = model_config_for(cfg, data);
    mc.ablation = a;
    try {
      TrainedModel tm = train_model(cfg, data, "fedin", mc, &log);
      rows.push_back(std::string(to_string(a)) + "," + num(tm.report.test.auc) + "," + num(tm.report.test.gauc) + "," +
                     num(tm.report.test.logloss) + "," + std::to_string(tm.report.best_epoch) + "," +
                     std::to_string(cfg.seed) + ",ok");
    } catch (const std::exception& e) {
      if (first_error.empty()) {
        first_error = std::string(to_string(a)) + ": " + e.what();
        first_code = exit_code_for(e);
      }
      rows.push_back(std::string(to_string(a)) + ",nan,nan,nan,0," + std::to_string(cfg.seed) + ",FAILED");
      log << "ablate: " << to_string(a) << " failed: " << e.what() << std::endl;
    }
  }
  out.csv("ablation.csv", "variant,auc,gauc,logloss,best_epoch,seed,status", rows);
  if (!first_error.empty()) {
    if (first_code == 3) throw NumericError(first_error);
    if (first_code == 1) throw ConfigError(first_error);
    throw DataError(first_error);
  }
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const LoadedData data = load_data(cfg);
  std::vector<std::string> rows, timing;
  for (Index v : cfg.sweep.values) {
    FedinConfig mc = model_config_for(cfg, data);
    if (cfg.sweep.parameter == "patch_size") {
      mc.patch_size = v;
    } else {
      mc.top_k = v;
    }
    mc.validate();
    TrainedModel tm = train_model(cfg, data, cfg.model_kind, mc, &log);
    rows.push_back(cfg.sweep.parameter + "," + std::to_string(v) + "," + num(tm.report.test.auc) + "," +
                   num(tm.report.test.gauc) + "," + std::to_string(tm.report.best_epoch));
    double seconds = 0;
    for (const auto& e : tm.report.epochs) seconds += e.seconds;
    timing.push_back(std::to_string(v) + "," + std::to_string(mc.num_patches()) + "," +
                     num(seconds / static_cast<double>(tm.report.epochs.size())));
  }
  out.csv("sweep.csv", "parameter,value,auc,gauc,best_epoch", rows);
  out.csv("sweep_timing.csv", "value,num_patches,seconds_per_epoch", timing);
  return 0;
}

int cmd_noise(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const LoadedData data = load_data(cfg);
  auto branch_model = [&](const std::string& ckpt, Ablation variant, const std::string& name) {
    if (!ckpt.empty()) return load_model(ckpt);
    FedinConfig mc = model_config_for(cfg, data);
    mc.ablation = variant;
    TrainedModel tm = train_model(cfg, data, "fedin", mc, &log);
    save_model(out.path(name + ".ckpt"), cfg, *tm.model);
    out.record(name + ".ckpt");
    return std::move(tm.model);
  };
  const auto time_model = branch_model(cfg.noise.time_checkpoint, Ablation::NoFreqBranch, "time_branch");
  const auto freq_model = branch_model(cfg.noise.freq_checkpoint, Ablation::NoTimeBranch, "freq_branch");
  std::vector<std::string> rows;
  for (const auto& [branch, model] : {std::pair{"time", time_model.get()}, std::pair{"freq", freq_model.get()}}) {
    for (const NoisePoint& p :
         noise_curve(*model, branch, data.splits.test, cfg.noise.mode, cfg.noise.rhos, data.num_items, cfg.seed)) {
      rows.push_back(p.mode + "," + p.branch + "," + num(p.rho) + "," + num(p.metrics.auc) + "," + num(p.metrics.gauc) +
                     "," + num(p.relative_auc) + "," + num(p.relative_gauc));
    }
  }
  out.csv("noise.csv", "mode,branch,rho,auc,gauc,relative_auc,relative_gauc", rows);
  return 0;
}

Json summary_json(const EntropySummary& s) {
  return Json{{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"std", s.std}};
}

int cmd_spectrum(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  if (cfg.spectrum.checkpoint.empty()) throw ConfigError("spectrum.checkpoint is required");
  const auto model = load_model(cfg.spectrum.checkpoint);
  const auto* fedin = dynamic_cast<const FedinModel*>(model.get());
  if (!fedin) throw ConfigError("spectrum needs a fedin checkpoint, got " + model->kind());
  const LoadedData data = load_data(cfg);
  const auto& split = cfg.spectrum.split == "train" ? data.splits.train
                      : cfg.spectrum.split == "val" ? data.splits.val
                                                    : data.splits.test;
  const EntropyReport rep = entropy_report(*fedin, split, cfg.spectrum.histogram_bins);
  const FedinModel control(fedin->config(), cfg.seed);
  const EntropyReport ctrl = entropy_report(control, split, cfg.spectrum.histogram_bins);

  out.json("entropy.json",
           Json{{"checkpoint", cfg.spectrum.checkpoint},
                {"split", cfg.spectrum.split},
                {"num_bins", rep.num_bins},
                {"max_bits", rep.max_bits},
                {"positive", summary_json(rep.positive)},
                {"negative", summary_json(rep.negative)},
                {"gap", rep.negative.mean - rep.positive.mean},
                {"degenerate", std::count_if(rep.samples.begin(), rep.samples.end(), [](const auto& s) { return s.degenerate; })},
                {"control", {{"positive", summary_json(ctrl.positive)},
                             {"negative", summary_json(ctrl.negative)},
                             {"gap", ctrl.negative.mean - ctrl.positive.mean}}},
                {"histogram", {{"edges", rep.edges}, {"count_pos", rep.count_pos}, {"count_neg", rep.count_neg}}},
                {"values_pos", rep.values(true)},
                {"values_neg", rep.values(false)}});
  std::vector<std::string> hist;
  for (std::size_t b = 0; b < rep.count_pos.size(); ++b) {
    hist.push_back(num(rep.edges[b]) + "," + num(rep.edges[b + 1]) + "," + std::to_string(rep.count_pos[b]) + "," +
                   std::to_string(rep.count_neg[b]));
  }
  out.csv("entropy_hist.csv", "bin_left,bin_right,count_pos,count_neg", hist);
  std::vector<std::string> per;
  for (const auto& s : rep.samples) {
    per.push_back(std::to_string(s.index) + "," + std::to_string(s.user_id) + "," + num(s.label) + "," + num(s.entropy) +
                  "," + (s.degenerate ? "1" : "0"));
  }
  out.csv("entropy_samples.csv", "index,user_id,label,entropy,degenerate", per);
  log << "spectrum: mean entropy pos " << rep.positive.mean << " neg " << rep.negative.mean << " (control gap "
      << ctrl.negative.mean - ctrl.positive.mean << ")" << std::endl;
  return 0;
}

int cmd_gradcheck(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  const GradcheckSettings& g = cfg.gradcheck;
  GradCheckOptions opts;
  opts.epsilon = g.epsilon;
  opts.seed = g.seed;
  std::vector<LayerCheckReport> reports = run_layer_gradchecks(g.seed, opts);
  for (Ablation a : all_ablations()) {
    const FedinConfig mc = gradcheck_model_config(a);
    FedinModel model(mc, g.seed);
    perturb_to_generic_point(model, 0.5, g.seed + 1);
    if (g.fault != 0) model.inject_gradient_fault_for_testing(g.fault);
    const auto batch = gradcheck_batch(mc, g.seed + 2, g.batch);
    LayerCheckReport r = run_model_gradcheck(model, batch, opts);
    r.layer = std::string("model:") + to_string(a);
    reports.push_back(std::move(r));
  }
  {
    const FedinConfig mc = gradcheck_model_config();
    SumPoolingModel model(mc, g.seed);
    spread_item_embeddings(model, 0.5, g.seed + 1);
    const auto batch = gradcheck_batch(mc, g.seed + 2, g.batch);
    LayerCheckReport r = run_model_gradcheck(model, batch, opts);
    r.layer = "model:sum_pooling";
    reports.push_back(std::move(r));
  }

  std::vector<std::string> rows;
  Json checks = Json::array();
  bool all_pass = true;
  for (const auto& r : reports) {
    const bool pass = r.result.max_rel_error < g.tolerance;
    all_pass = all_pass && pass;
    checks.push_back({{"check", r.layer}, {"max_rel_error", r.result.max_rel_error}, {"pass", pass}});
    for (const auto& e : r.result.entries) {
      rows.push_back(r.layer + "," + e.name + "," + std::to_string(e.checked) + "," + num(e.max_rel_error) + "," +
                     std::to_string(e.worst_index) + "," + num(e.worst_analytic) + "," + num(e.worst_numeric) + "," +
                     (e.max_rel_error < g.tolerance ? "1" : "0"));
    }
    log << "gradcheck " << r.layer << ": " << r.result.max_rel_error << (pass ? " ok" : " FAIL") << std::endl;
  }
  out.csv("gradcheck.csv", "check,parameter,checked,max_rel_error,worst_index,analytic,numeric,pass", rows);
  out.json("gradcheck.json", Json{{"tolerance", g.tolerance}, {"epsilon", g.epsilon}, {"checks", checks}, {"pass", all_pass}});
  return all_pass ? 0 : 3;
}

int cmd_bench(const ExperimentConfig& cfg, Outputs& out, std::ostream& log) {
  std::vector<std::string> rows;
  for (const BenchRow& r : run_bench(cfg.bench, cfg.seed)) {
    rows.push_back(std::to_string(r.length) + "," + num(r.t_freq) + "," + num(r.t_attn));
    log << "bench L=" << r.length << " t_freq " << r.t_freq << " s, t_attn " << r.t_attn << " s" << std::endl;
  }
  out.csv("bench.csv", "L,t_freq,t_attn", rows);
  return 0;
}

}  // namespace

// ---------------------------------------------------------------- library API

LoadedData load_data(const ExperimentConfig& cfg) {
  LoadedData d;
  const Index len = cfg.model.max_seq_len;
  std::vector<SequenceSample> samples;
  switch (cfg.data.format) {
    case DataFormat::Synthetic: {
      const SyntheticDataset syn = synth_generate(cfg.synthetic);
      samples = syn.samples;
      d.item_category = syn.item_category;
      d.num_items = cfg.synthetic.num_items + 1;
      d.num_users = cfg.synthetic.num_users + 1;
      d.source = "synthetic";
      break;
    }
    case DataFormat::Samples: {
      SampleFile f = read_samples_csv(cfg.data.path, len);
      samples = std::move(f.samples);
      int max_item = 0, max_user = 0;
      for (const auto& s : samples) {
        max_item = std::max(max_item, s.target_id);
        for (int id : s.item_ids) max_item = std::max(max_item, id);
        max_user = std::max(max_user, s.user_id);
      }
      d.num_items = max_item + 1;
      d.num_users = max_user + 1;
      d.source = cfg.data.path;
      break;
    }
    case DataFormat::Interactions: {
      ParseReport parsed = parse_interactions(cfg.data.path, cfg.data.columns);
      const Vocabulary items = item_vocabulary(parsed.records);
      const Vocabulary users = user_vocabulary(parsed.records);
      samples = build_samples(parsed.records, len, cfg.data.negatives_per_positive, items, users, cfg.seed);
      d.num_items = items.size();
      d.num_users = users.size();
      d.source = cfg.data.path;
      break;
    }
  }
  if (samples.empty()) throw DataError("no usable samples in " + d.source);
  for (const auto& s : samples) validate_sample(s, len, d.num_items);
  d.splits = temporal_split(std::move(samples), cfg.data.train_frac, cfg.data.val_frac);
  if (cfg.data.train_corruption != "none" && cfg.data.train_corruption_rho > 0) {
    d.splits.train = corrupt(d.splits.train, cfg.data.train_corruption, cfg.data.train_corruption_rho, d.num_items,
                             cfg.seed ^ 0x5bd1e995ULL);
  }
  return d;
}

FedinConfig model_config_for(const ExperimentConfig& cfg, const LoadedData& data) {
  FedinConfig mc = cfg.model;
  mc.num_items = data.num_items;
  mc.num_users = data.num_users;
  mc.validate();
  return mc;
}

TrainedModel train_model(const ExperimentConfig& cfg, const LoadedData& data, const std::string& kind,
                         const FedinConfig& model_cfg, std::ostream* log) {
  TrainedModel tm;
  tm.model = make_model(kind, model_cfg, cfg.seed);
  const std::string tag = kind == "fedin" ? std::string("fedin/") + to_string(model_cfg.ablation) : kind;
  EpochCallback cb{[&](const EpochRecord& r) { log_epoch(log, tag, r); }};
  tm.report = train(*tm.model, data.splits.train, data.splits.val, data.splits.test, cfg.train, cb);
  return tm;
}

Json report_json(const TrainReport& report) {
  Json epochs = Json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_auc", metric_value(e.val_auc)},
                      {"val_gauc", metric_value(e.val_gauc)},
                      {"seconds", e.seconds}});
  }
  return Json{{"epochs", epochs},
              {"best_epoch", report.best_epoch},
              {"best_val", eval_json(report.best_val)},
              {"test", eval_json(report.test)},
              {"steps", report.steps},
              {"early_stopped", report.early_stopped}};
}

void save_model(const std::string& path, const ExperimentConfig& cfg, const CtrModel& model) {
  const Json header{{"kind", model.kind()},
                    {"model", to_json(model.config())},
                    {"seed", cfg.seed},
                    {"config_hash", cfg.hash},
                    {"config", cfg.json}};
  save_checkpoint(path, header.dump(), model.params());
}

std::unique_ptr<CtrModel> load_model(const std::string& path) {
  const Checkpoint ckpt = load_checkpoint(path);
  const Json header = Json::parse(ckpt.config_text, nullptr, false);
  if (header.is_discarded() || !header.contains("kind") || !header.contains("model")) {
    throw DataError(path + ": checkpoint header is not a model description");
  }
  std::unique_ptr<CtrModel> model;
  try {
    model = make_model(header.at("kind").get<std::string>(), fedin_config_from_json(header.at("model")), 0);
  } catch (const ConfigError& e) {
    throw DataError(path + ": " + e.what());
  }
  apply_checkpoint(ckpt, model->params());
  return model;
}

std::vector<NoisePoint> noise_curve(const CtrModel& model, const std::string& branch,
                                    const std::vector<SequenceSample>& test, const std::string& mode,
                                    const std::vector<double>& rhos, Index num_items, std::uint64_t seed) {
  const EvalMetrics clean = evaluate(model, test);
  std::vector<NoisePoint> points;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    NoisePoint p;
    p.mode = mode;
    p.branch = branch;
    p.rho = rhos[i];
    p.metrics = rhos[i] == 0 ? clean : evaluate(model, corrupt(test, mode, rhos[i], num_items, seed * 1000003ULL + i));
    p.relative_auc = p.metrics.auc / clean.auc;
    p.relative_gauc = p.metrics.gauc / clean.gauc;
    points.push_back(p);
  }
  return points;
}

std::vector<BenchRow> run_bench(const BenchOptions& options, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };
  std::vector<BenchRow> rows;
  for (Index len : options.lengths) {
    FedinConfig mc;
    mc.embed_dim = options.embed_dim;
    mc.max_seq_len = len;
    mc.patch_size = 1;
    mc.top_k = 1;
    mc.num_heads = options.num_heads;
    mc.num_items = 2;
    mc.num_users = 1;
    ParameterStore store;
    Rng rng(seed);
    FreqBranch freq(store, "freq", mc);
    freq.init(rng);
    MultiHeadSelfAttention attn(store, "attn", options.embed_dim, options.num_heads);
    attn.init(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd x(len, options.embed_dim);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    VectorXd target(options.embed_dim);
    for (Index i = 0; i < target.size(); ++i) target(i) = normal(rng);

    std::vector<double> tf, ta;
    double sink = 0;
    for (int r = 0; r <= options.reps; ++r) {
      FreqBranchCache fc;
      auto t0 = clock::now();
      sink += freq.forward(x, target, fc)(0, 0);
      auto t1 = clock::now();
      AttentionCache ac;
      sink += attn.forward(x, ac)(0, 0);
      auto t2 = clock::now();
      if (r == 0) continue;
      tf.push_back(std::chrono::duration<double>(t1 - t0).count());
      ta.push_back(std::chrono::duration<double>(t2 - t1).count());
    }
    if (!std::isfinite(sink)) throw NumericError("bench: non-finite output");
    rows.push_back({len, median(tf), median(ta)});
  }
  return rows;
}

int run_command(const std::string& command, const ExperimentConfig& cfg, const std::string& out_dir, std::ostream& log) {
  static const std::map<std::string, int (*)(const ExperimentConfig&, Outputs&, std::ostream&)> table{
      {"synth", cmd_synth},   {"train", cmd_train},       {"ablate", cmd_ablate},       {"sweep", cmd_sweep},
      {"noise", cmd_noise},   {"spectrum", cmd_spectrum}, {"gradcheck", cmd_gradcheck}, {"bench", cmd_bench}};
  const auto it = table.find(command);
  if (it == table.end()) throw UsageError("unknown command '" + command + "'");
  Outputs out(cfg, command, out_dir);
  out.write("config.json", Json{{"config", cfg.json}, {"config_hash", cfg.hash}, {"seed", cfg.seed}}.dump(2) + "\n");
  log << "config " << cfg.hash << " seed " << cfg.seed << " " << cfg.json.dump() << std::endl;
  int status = 0;
  try {
    status = it->second(cfg, out, log);
  } catch (const std::exception& e) {
    out.manifest(exit_code_for(e), e.what());
    throw;
  }
  out.manifest(status);
  return status;
}

}  // namespace fedin
