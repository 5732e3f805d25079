#include <gtest/gtest.h>

#include "fedin/model/layer_checks.hpp"
#include "fedin/numerics/gradcheck.hpp"

using namespace fedin;

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 0.1);  // floor of 1e-8 in the denominator
}

TEST(GradCheck, QuadraticIsExact) {
  std::vector<double> x{0.3, -1.2, 2.0};
  std::vector<double> g(3);
  for (int i = 0; i < 3; ++i) g[static_cast<size_t>(i)] = 2 * (i + 1) * x[static_cast<size_t>(i)];
  std::vector<GradCheckTarget> targets{{"x", x.data(), g.data(), 3, {}}};
  const auto loss = [&] {
    long double s = 0;
    for (int i = 0; i < 3; ++i) s += (i + 1) * static_cast<long double>(x[static_cast<size_t>(i)]) * x[static_cast<size_t>(i)];
    return s;
  };
  const GradCheckResult r = finite_difference_check(loss, targets);
  EXPECT_LT(r.max_rel_error, 1e-8);
  EXPECT_EQ(r.entries.at(0).checked, 3);
  EXPECT_DOUBLE_EQ(x[0], 0.3);  // values restored after perturbation
}

TEST(GradCheck, DetectsWrongGradient) {
  std::vector<double> x{1.0};
  std::vector<double> g{2.5};  // true derivative of x^2 is 2
  std::vector<GradCheckTarget> targets{{"x", x.data(), g.data(), 1, {}}};
  const GradCheckResult r = finite_difference_check([&] { return static_cast<long double>(x[0]) * x[0]; }, targets);
  EXPECT_NEAR(r.max_rel_error, 0.2, 1e-6);
}

TEST(GradCheck, EveryLayerBelowTolerance) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto reports = run_layer_gradchecks(seed);
    ASSERT_GE(reports.size(), 15u);
    for (const auto& r : reports) {
      EXPECT_LT(r.result.max_rel_error, 1e-4) << r.layer << " seed " << seed;
      for (const auto& e : r.result.entries) EXPECT_GT(e.checked, 0) << r.layer << "/" << e.name;
    }
  }
}

class ModelGradCheck : public ::testing::TestWithParam<Ablation> {};

TEST_P(ModelGradCheck, EndToEndBelowTolerance) {
  const FedinConfig cfg = gradcheck_model_config(GetParam());
  FedinModel model(cfg, 3);
  perturb_to_generic_point(model, 0.5, 4);
  const auto batch = gradcheck_batch(cfg, 5);
  const LayerCheckReport r = run_model_gradcheck(model, batch);
  EXPECT_LT(r.result.max_rel_error, 1e-4);
  // Every parameter group is covered.
  EXPECT_EQ(r.result.entries.size(), model.params().size());
}

INSTANTIATE_TEST_SUITE_P(AllVariants, ModelGradCheck,
                         ::testing::Values(Ablation::Full, Ablation::NoTimeBranch, Ablation::NoFreqBranch,
                                           Ablation::NoFreqTa, Ablation::NoFreqScaling),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(GradCheck, SumPoolingBaseline) {
  const FedinConfig cfg = gradcheck_model_config();
  SumPoolingModel model(cfg, 3);
  spread_item_embeddings(model, 0.5, 4);
  const auto batch = gradcheck_batch(cfg, 5);
  EXPECT_LT(run_model_gradcheck(model, batch).result.max_rel_error, 1e-4);
}

TEST(GradCheck, InjectedFaultIsCaught) {
  const FedinConfig cfg = gradcheck_model_config();
  FedinModel model(cfg, 3);
  perturb_to_generic_point(model, 0.5, 4);
  model.inject_gradient_fault_for_testing(0.01);
  const auto batch = gradcheck_batch(cfg, 5);
  EXPECT_GT(run_model_gradcheck(model, batch).result.max_rel_error, 1e-3);
}
