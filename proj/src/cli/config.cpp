#include "fedin/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedin/numerics/errors.hpp"
#include "fedin/numerics/fft.hpp"

namespace fedin {

namespace {

Json::array_t index_array(const std::vector<Index>& v) {
  Json::array_t a;
  for (Index x : v) a.emplace_back(x);
  return a;
}

bool same_kind(const Json& expected, const Json& value) {
  if (expected.is_number_float()) return value.is_number();
  if (expected.is_number_integer()) return value.is_number_integer();
  if (expected.is_array()) return value.is_array();
  return expected.type() == value.type();
}

const char* kind_name(const Json& j) {
  if (j.is_number_float()) return "number";
  if (j.is_number_integer()) return "integer";
  return j.type_name();
}

template <typename T>
T get(const Json& j, const char* key) {
  return j.at(key).get<T>();
}

}  // namespace

Json to_json(const FedinConfig& cfg) {
  return Json{{"embed_dim", cfg.embed_dim},
              {"max_seq_len", cfg.max_seq_len},
              {"patch_size", cfg.patch_size},
              {"top_k", cfg.top_k},
              {"alpha", cfg.alpha},
              {"num_heads", cfg.num_heads},
              {"transformer_layers", cfg.transformer_layers},
              {"cmlp_hidden", cfg.cmlp_hidden},
              {"gate_hidden", cfg.gate_hidden},
              {"head_hidden", index_array(cfg.head_hidden)},
              {"ablation", to_string(cfg.ablation)},
              {"use_topk", cfg.use_topk},
              {"patch_positional", cfg.patch_positional},
              {"num_items", cfg.num_items},
              {"num_users", cfg.num_users}};
}

FedinConfig fedin_config_from_json(const Json& j) {
  FedinConfig cfg;
  try {
    cfg.embed_dim = get<Index>(j, "embed_dim");
    cfg.max_seq_len = get<Index>(j, "max_seq_len");
    cfg.patch_size = get<Index>(j, "patch_size");
    cfg.top_k = get<Index>(j, "top_k");
    cfg.alpha = get<double>(j, "alpha");
    cfg.num_heads = get<Index>(j, "num_heads");
    cfg.transformer_layers = get<Index>(j, "transformer_layers");
    cfg.cmlp_hidden = get<Index>(j, "cmlp_hidden");
    cfg.gate_hidden = get<Index>(j, "gate_hidden");
    cfg.head_hidden = get<std::vector<Index>>(j, "head_hidden");
    cfg.ablation = ablation_from_string(get<std::string>(j, "ablation"));
    cfg.use_topk = get<bool>(j, "use_topk");
    cfg.patch_positional = get<bool>(j, "patch_positional");
    if (j.contains("num_items")) cfg.num_items = get<Index>(j, "num_items");
    if (j.contains("num_users")) cfg.num_users = get<Index>(j, "num_users");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return cfg;
}

Json default_config() {
  const FedinConfig m;
  const TrainConfig t;
  const SyntheticSpec s;
  const ColumnMap c;
  Json model = to_json(m);
  model.erase("num_items");
  model.erase("num_users");
  model["kind"] = "fedin";

  Json variants = Json::array();
  for (Ablation a : all_ablations()) variants.push_back(to_string(a));

  return Json{
      {"seed", 1},
      {"model", model},
      {"train",
       {{"learning_rate", t.learning_rate},
        {"batch_size", t.batch_size},
        {"max_epochs", t.max_epochs},
        {"patience", t.patience},
        {"adam_beta1", t.adam_beta1},
        {"adam_beta2", t.adam_beta2},
        {"adam_eps", t.adam_eps},
        {"clip_norm", t.clip_norm},
        {"selection_metric", to_string(t.selection_metric)},
        {"checkpoint", ""}}},
      {"data",
       {{"format", "synthetic"},
        {"path", ""},
        {"columns",
         {{"user", c.user},
          {"item", c.item},
          {"category", c.category},
          {"timestamp", c.timestamp},
          {"label", c.label},
          {"max_malformed_fraction", c.max_malformed_fraction}}},
        {"negatives_per_positive", 1},
        {"train_frac", 0.7},
        {"val_frac", 0.15},
        {"train_corruption", "none"},
        {"train_corruption_rho", 0.0}}},
      {"synthetic",
       {{"num_users", s.num_users},
        {"num_items", s.num_items},
        {"num_categories", s.num_categories},
        {"period", s.period},
        {"periodic_strength", s.periodic_strength},
        {"negatives_per_positive", s.negatives_per_positive},
        {"samples_per_user", s.samples_per_user},
        {"seed", -1}}},
      {"ablate", {{"variants", variants}}},
      {"sweep", {{"parameter", "patch_size"}, {"values", {5, 10, 25, 50}}}},
      {"noise",
       {{"mode", "replace"}, {"rhos", {0.0, 0.2, 0.4, 0.6, 0.8}}, {"time_checkpoint", ""}, {"freq_checkpoint", ""}}},
      {"spectrum", {{"checkpoint", ""}, {"split", "test"}, {"histogram_bins", 20}}},
      {"gradcheck", {{"seed", 7}, {"batch", 2}, {"epsilon", 1e-5}, {"tolerance", 1e-4}, {"fault", 0.0}}},
      {"bench", {{"lengths", {128, 256, 512, 1024, 2048}}, {"reps", 20}, {"embed_dim", 32}, {"num_heads", 2}}},
  };
}

void merge_config(Json& base, const Json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError("config" + (where.empty() ? "" : " key '" + where + "'") + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    Json& slot = base[key];
    if (slot.is_object()) {
      merge_config(slot, value, path);
      continue;
    }
    if (!same_kind(slot, value)) {
      throw ConfigError("config key '" + path + "' expects " + kind_name(slot) + ", got " + value.type_name());
    }
    if (slot.is_array() && !slot.empty()) {
      for (const auto& item : value) {
        if (!same_kind(slot.front(), item)) {
          throw ConfigError("config key '" + path + "' expects elements of type " + kind_name(slot.front()));
        }
      }
    }
    if (slot.is_number_float()) {
      slot = value.get<double>();
    } else if (slot.is_array() && !slot.empty() && slot.front().is_number_float()) {
      Json::array_t a;
      for (const auto& item : value) a.emplace_back(item.get<double>());
      slot = a;
    } else {
      slot = value;
    }
  }
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    parts.push_back(part);
  }

  const Json* slot = &config;
  for (const auto& part : parts) {
    if (!slot->is_object() || !slot->contains(part)) throw ConfigError("unknown config key '" + key + "'");
    slot = &(*slot)[part];
  }
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded() || (slot->is_string() && !value.is_string())) value = text;

  Json patch = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = Json{{*it, patch}};
  merge_config(config, patch);
}

Json load_config(const std::string& path, const std::vector<std::string>& overrides,
                 const std::optional<std::string>& seed_env) {
  Json config = default_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    Json file = Json::parse(in, nullptr, false);
    if (file.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
    merge_config(config, file);
  }
  for (const auto& o : overrides) apply_override(config, o);
  if (seed_env) {
    const std::string& s = *seed_env;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size() || s.front() == '-') throw ConfigError("FEDIN_SEED='" + s + "' is not an unsigned integer");
    config["seed"] = v;
  }
  return config;
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig resolve_config(const Json& config) {
  ExperimentConfig x;
  x.json = config;
  x.hash = config_hash(config);
  try {
    const Json& seed = config.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
      throw ConfigError("seed must be a non-negative integer");
    }
    x.seed = seed.get<std::uint64_t>();

    const Json& m = config.at("model");
    x.model_kind = get<std::string>(m, "kind");
    if (x.model_kind != "fedin" && x.model_kind != "sum_pooling") {
      throw ConfigError("model.kind must be fedin or sum_pooling, got '" + x.model_kind + "'");
    }
    x.model = fedin_config_from_json(m);

    const Json& t = config.at("train");
    x.train.learning_rate = get<double>(t, "learning_rate");
    x.train.batch_size = get<Index>(t, "batch_size");
    x.train.max_epochs = get<int>(t, "max_epochs");
    x.train.patience = get<int>(t, "patience");
    x.train.adam_beta1 = get<double>(t, "adam_beta1");
    x.train.adam_beta2 = get<double>(t, "adam_beta2");
    x.train.adam_eps = get<double>(t, "adam_eps");
    x.train.clip_norm = get<double>(t, "clip_norm");
    x.train.selection_metric = selection_metric_from_string(get<std::string>(t, "selection_metric"));
    x.train.seed = x.seed;
    x.checkpoint = get<std::string>(t, "checkpoint");
    x.train.validate();

    FedinConfig probe = x.model;
    probe.num_items = 2;
    probe.validate();

    const Json& d = config.at("data");
    const auto format = get<std::string>(d, "format");
    if (format == "synthetic") {
      x.data.format = DataFormat::Synthetic;
    } else if (format == "samples") {
      x.data.format = DataFormat::Samples;
    } else if (format == "interactions") {
      x.data.format = DataFormat::Interactions;
    } else {
      throw ConfigError("data.format must be synthetic, samples or interactions, got '" + format + "'");
    }
    x.data.path = get<std::string>(d, "path");
    if (x.data.format != DataFormat::Synthetic && x.data.path.empty()) {
      throw ConfigError("data.path is required for data.format=" + format);
    }
    const Json& c = d.at("columns");
    x.data.columns.user = get<std::string>(c, "user");
    x.data.columns.item = get<std::string>(c, "item");
    x.data.columns.category = get<std::string>(c, "category");
    x.data.columns.timestamp = get<std::string>(c, "timestamp");
    x.data.columns.label = get<std::string>(c, "label");
    x.data.columns.max_malformed_fraction = get<double>(c, "max_malformed_fraction");
    x.data.negatives_per_positive = get<int>(d, "negatives_per_positive");
    x.data.train_frac = get<double>(d, "train_frac");
    x.data.val_frac = get<double>(d, "val_frac");
    if (!(x.data.train_frac > 0 && x.data.val_frac > 0 && x.data.train_frac + x.data.val_frac < 1)) {
      throw ConfigError("data.train_frac and data.val_frac must be positive with sum < 1");
    }
    x.data.train_corruption = get<std::string>(d, "train_corruption");
    x.data.train_corruption_rho = get<double>(d, "train_corruption_rho");
    if (x.data.train_corruption != "none" && x.data.train_corruption != "drop" && x.data.train_corruption != "replace") {
      throw ConfigError("data.train_corruption must be none, drop or replace");
    }
    if (!(x.data.train_corruption_rho >= 0 && x.data.train_corruption_rho <= 1)) {
      throw ConfigError("data.train_corruption_rho must lie in [0, 1]");
    }
    if (x.data.negatives_per_positive < 0) throw ConfigError("data.negatives_per_positive must be >= 0");

    const Json& s = config.at("synthetic");
    x.synthetic.num_users = get<int>(s, "num_users");
    x.synthetic.num_items = get<int>(s, "num_items");
    x.synthetic.num_categories = get<int>(s, "num_categories");
    x.synthetic.period = get<int>(s, "period");
    x.synthetic.sequence_length = static_cast<int>(x.model.max_seq_len);
    x.synthetic.periodic_strength = get<double>(s, "periodic_strength");
    x.synthetic.negatives_per_positive = get<int>(s, "negatives_per_positive");
    x.synthetic.samples_per_user = get<int>(s, "samples_per_user");
    const auto synth_seed = get<long long>(s, "seed");
    x.synthetic.seed = synth_seed < 0 ? x.seed : static_cast<std::uint64_t>(synth_seed);
    x.synthetic.validate();

    for (const auto& v : config.at("ablate").at("variants")) x.ablate_variants.push_back(ablation_from_string(v.get<std::string>()));
    if (x.ablate_variants.empty()) throw ConfigError("ablate.variants must not be empty");

    const Json& sw = config.at("sweep");
    x.sweep.parameter = get<std::string>(sw, "parameter");
    if (x.sweep.parameter != "patch_size" && x.sweep.parameter != "top_k") {
      throw ConfigError("sweep.parameter must be patch_size or top_k, got '" + x.sweep.parameter + "'");
    }
    x.sweep.values = get<std::vector<Index>>(sw, "values");
    if (x.sweep.values.empty()) throw ConfigError("sweep.values must not be empty");

    const Json& n = config.at("noise");
    x.noise.mode = get<std::string>(n, "mode");
    if (x.noise.mode != "drop" && x.noise.mode != "replace") throw ConfigError("noise.mode must be drop or replace");
    x.noise.rhos = get<std::vector<double>>(n, "rhos");
    if (x.noise.rhos.empty()) throw ConfigError("noise.rhos must not be empty");
    for (double r : x.noise.rhos) {
      const bool ok = x.noise.mode == "drop" ? (r >= 0 && r < 1) : (r >= 0 && r <= 1);
      if (!ok) throw ConfigError("noise.rhos: " + std::to_string(r) + " is out of range for " + x.noise.mode + " noise");
    }
    x.noise.time_checkpoint = get<std::string>(n, "time_checkpoint");
    x.noise.freq_checkpoint = get<std::string>(n, "freq_checkpoint");

    const Json& sp = config.at("spectrum");
    x.spectrum.checkpoint = get<std::string>(sp, "checkpoint");
    x.spectrum.split = get<std::string>(sp, "split");
    if (x.spectrum.split != "train" && x.spectrum.split != "val" && x.spectrum.split != "test") {
      throw ConfigError("spectrum.split must be train, val or test");
    }
    x.spectrum.histogram_bins = get<int>(sp, "histogram_bins");
    if (x.spectrum.histogram_bins < 1) throw ConfigError("spectrum.histogram_bins must be positive");

    const Json& g = config.at("gradcheck");
    x.gradcheck.seed = get<std::uint64_t>(g, "seed");
    x.gradcheck.batch = get<Index>(g, "batch");
    x.gradcheck.epsilon = get<double>(g, "epsilon");
    x.gradcheck.tolerance = get<double>(g, "tolerance");
    x.gradcheck.fault = get<double>(g, "fault");
    if (x.gradcheck.batch < 1 || !(x.gradcheck.epsilon > 0) || !(x.gradcheck.tolerance > 0)) {
      throw ConfigError("gradcheck: batch, epsilon and tolerance must be positive");
    }

    const Json& b = config.at("bench");
    x.bench.lengths = get<std::vector<Index>>(b, "lengths");
    x.bench.reps = get<int>(b, "reps");
    x.bench.embed_dim = get<Index>(b, "embed_dim");
    x.bench.num_heads = get<Index>(b, "num_heads");
    for (Index len : x.bench.lengths) {
      if (len < 2 || !is_power_of_two(len)) throw ConfigError("bench.lengths must be powers of two >= 2");
    }
    if (x.bench.lengths.empty() || x.bench.reps < 1 || x.bench.embed_dim < 1 || x.bench.num_heads < 1 ||
        x.bench.embed_dim % x.bench.num_heads != 0) {
      throw ConfigError("bench: need lengths, reps >= 1 and embed_dim divisible by num_heads");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return x;
}

}  // namespace fedin
