#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedin/model/layer_checks.hpp"
#include "fedin/model/model.hpp"
#include "fedin/training/train.hpp"

using namespace fedin;

namespace {

FedinConfig small_config() {
  FedinConfig cfg;
  cfg.embed_dim = 8;
  cfg.max_seq_len = 20;
  cfg.patch_size = 5;
  cfg.top_k = 6;
  cfg.num_items = 30;
  cfg.num_users = 5;
  return cfg;
}

std::vector<SequenceSample> batch_for(const FedinConfig& cfg, std::uint64_t seed, Index n) {
  return gradcheck_batch(cfg, seed, n);
}

}  // namespace

TEST(Config, ValidationRejectsBadShapes) {
  FedinConfig cfg = small_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.top_k = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.top_k = cfg.max_seq_len + 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.patch_size = cfg.max_seq_len + 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.num_heads = 3;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(ablation_from_string("bogus"), ConfigError);
  for (Ablation a : all_ablations()) EXPECT_EQ(ablation_from_string(to_string(a)), a);
}

TEST(Config, DerivedQuantities) {
  FedinConfig cfg = small_config();
  EXPECT_EQ(cfg.num_patches(), 4);
  cfg.patch_size = 6;
  EXPECT_EQ(cfg.num_patches(), 4);  // zero-padded tail patch
  EXPECT_EQ(cfg.spectrum_bins(), 11);
  EXPECT_DOUBLE_EQ(cfg.resolved_alpha(), std::sqrt(8.0));
  EXPECT_EQ(cfg.resolved_cmlp_hidden(), 8);
}

TEST(Model, PredictionsAreProbabilitiesForEveryVariant) {
  for (Ablation a : all_ablations()) {
    FedinConfig cfg = small_config();
    cfg.ablation = a;
    FedinModel model(cfg, 1);
    for (const auto& s : batch_for(cfg, 2, 4)) {
      const double p = model.predict(s);
      EXPECT_GT(p, 0.0) << to_string(a);
      EXPECT_LT(p, 1.0) << to_string(a);
    }
  }
}

TEST(Model, SameSeedSameParameters) {
  const FedinConfig cfg = small_config();
  FedinModel a(cfg, 9), b(cfg, 9), c(cfg, 10);
  ASSERT_EQ(a.params().size(), b.params().size());
  bool differs = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params()[i].name, b.params()[i].name);
    EXPECT_TRUE(a.params()[i].value == b.params()[i].value);
    differs = differs || !(a.params()[i].value == c.params()[i].value);
  }
  EXPECT_TRUE(differs);
}

TEST(Model, PaddingRowStartsAtZero) {
  const FedinConfig cfg = small_config();
  FedinModel model(cfg, 1);
  EXPECT_TRUE(model.params().at("embed.item").value.row(kPaddingItem).isZero());
}

TEST(Model, RejectsInvalidSamples) {
  const FedinConfig cfg = small_config();
  FedinModel model(cfg, 1);
  SequenceSample s = batch_for(cfg, 2, 1).front();
  SequenceSample bad = s;
  bad.target_id = static_cast<int>(cfg.num_items);
  EXPECT_THROW(model.predict(bad), DataError);
  bad = s;
  bad.valid_len = 0;
  EXPECT_THROW(model.predict(bad), DataError);
  bad = s;
  bad.item_ids.pop_back();
  EXPECT_THROW(model.predict(bad), DataError);
}

TEST(Model, TargetScoreSignalHasWindowLength) {
  const FedinConfig cfg = small_config();
  FedinModel model(cfg, 1);
  const auto s = batch_for(cfg, 3, 1).front();
  EXPECT_EQ(model.target_score_signal(s).size(), cfg.max_seq_len);
}

TEST(Model, TopKEqualToLengthMatchesUnmaskedAttention) {
  FedinConfig with_k = small_config();
  with_k.top_k = with_k.max_seq_len;
  FedinConfig without = with_k;
  without.use_topk = false;
  FedinModel a(with_k, 4), b(without, 4);
  for (const auto& s : batch_for(with_k, 5, 6)) EXPECT_EQ(a.forward(s, nullptr), b.forward(s, nullptr));
}

TEST(Model, TopKEqualToLengthMatchesUnmaskedTraining) {
  FedinConfig with_k = small_config();
  with_k.top_k = with_k.max_seq_len;
  FedinConfig without = with_k;
  without.use_topk = false;
  FedinModel a(with_k, 4), b(without, 4);
  const auto data = batch_for(with_k, 5, 8);
  std::vector<const SequenceSample*> batch;
  for (const auto& s : data) batch.push_back(&s);
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  for (long step = 1; step <= 3; ++step) EXPECT_EQ(train_step(a, batch, step, tc), train_step(b, batch, step, tc));
}

TEST(Model, AblatedBranchParametersDoNotAffectOutput) {
  for (auto [ablation, prefix] : {std::pair{Ablation::NoFreqBranch, "freq."}, std::pair{Ablation::NoTimeBranch, "time."}}) {
    FedinConfig cfg = small_config();
    cfg.ablation = ablation;
    FedinModel model(cfg, 1);
    const auto s = batch_for(cfg, 2, 1).front();
    const double before = model.forward(s, nullptr);
    for (auto& p : model.params()) {
      if (p->name.rfind(prefix, 0) == 0) p->value.array() += 0.3;
    }
    EXPECT_EQ(model.forward(s, nullptr), before) << to_string(ablation);
  }
}

TEST(Model, SumPoolingIgnoresHistoryOrder) {
  const FedinConfig cfg = small_config();
  SumPoolingModel model(cfg, 1);
  auto s = batch_for(cfg, 2, 1).front();
  const double before = model.forward(s, nullptr);
  std::reverse(s.item_ids.begin(), s.item_ids.begin() + s.valid_len);
  EXPECT_NEAR(model.forward(s, nullptr), before, 1e-12);
  EXPECT_EQ(make_model("sum_pooling", cfg, 1)->kind(), "sum_pooling");
  EXPECT_THROW(make_model("nope", cfg, 1), ConfigError);
}
