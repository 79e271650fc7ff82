#include "deltashap/synthetic.hpp"

#include "deltashap/attribution.hpp"
#include "deltashap/errors.hpp"
#include "deltashap/imputation.hpp"
#include "fixtures.hpp"
#include "gtest/gtest.h"

namespace deltashap {
namespace {

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.instances = 200;
  s.seed = seed;
  return s;
}

TEST(Generate, SameSeedSameBits) {
  const auto a = generate(small_spec(3));
  const auto b = generate(small_spec(3));
  ASSERT_EQ(a.dataset.size(), b.dataset.size());
  for (std::size_t i = 0; i < a.dataset.size(); ++i) {
    EXPECT_EQ(a.dataset.instances[i].window, b.dataset.instances[i].window);
    EXPECT_EQ(a.dataset.instances[i].label, b.dataset.instances[i].label);
  }
  EXPECT_EQ(a.drivers, b.drivers);
  const auto c = generate(small_spec(4));
  EXPECT_NE(a.dataset.instances[0].window, c.dataset.instances[0].window);
}

TEST(Generate, ShapesAndValidity) {
  const auto g = generate(small_spec(5));
  EXPECT_EQ(g.dataset.size(), 200u);
  EXPECT_EQ(g.dataset.schema.feature_count(), 6u);
  EXPECT_TRUE(validate_dataset(g.dataset).ok());
  EXPECT_GT(g.positive_rate, 0.0);
  EXPECT_LT(g.positive_rate, 1.0);
}

TEST(Generate, FullObservationGivesAllTrueMasks) {
  SyntheticSpec s = small_spec(6);
  s.observation_prob = {1.0};
  const auto g = generate(s);
  for (const auto& inst : g.dataset.instances) {
    for (auto bit : inst.window.mask()) EXPECT_EQ(bit, 1);
  }
}

TEST(Generate, ThresholdLabelsFollowScorer) {
  SyntheticSpec s = small_spec(7);
  s.labeling = LabelMode::threshold;
  s.observation_prob = {1.0};
  const auto g = generate(s);
  const auto scorer = builtin_scorer(s.scorer, s.window_length,
                                     s.feature_count);
  for (const auto& inst : g.dataset.instances) {
    EXPECT_EQ(inst.label, scorer->predict(inst.window) > 0.5 ? 1 : 0);
  }
}

TEST(Generate, SingleClassGivesHint) {
  SyntheticSpec s = small_spec(8);
  s.instances = 1;
  s.labeling = LabelMode::threshold;
  try {
    generate(s);
    FAIL() << "expected DegenerateLabels";
  } catch (const DegenerateLabels& e) {
    EXPECT_NE(std::string(e.what()).find("seed"), std::string::npos);
  }
}

TEST(Generate, RejectsBadSpec) {
  SyntheticSpec s = small_spec(9);
  s.observation_prob = {0.0};
  EXPECT_THROW(generate(s), ConfigError);
  s = small_spec(9);
  s.ar_coefficient = {1.0};
  EXPECT_THROW(generate(s), ConfigError);
  s = small_spec(9);
  s.observation_prob = {0.5, 0.5};
  EXPECT_THROW(generate(s), ConfigError);
}

TEST(LogitContributions, SumToLogitChange) {
  const InteractionSyntheticModel model(3, 0.0, {0.1, -0.08, 0.06, 0.04},
                                        {{0, 1, 0.05}, {2, 3, -0.03}},
                                        {0.0, 0.0, 0.0, 0.0});
  const auto s = testing::forward_fill(4);
  CounterRng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Window w =
        prepare_window(testing::random_raw_window(3, 4, 0.7, rng), s);
    const auto b = baseline_row(w, s);
    const auto closed = logit_contributions(model, w, b.values);
    double total = 0.0;
    for (double c : closed) total += c;
    EXPECT_NEAR(total,
                model.logit(w) - model.logit(w.with_final_row(b.values)),
                1e-12);
  }
}

TEST(Generate, DriverRankedFirstByExactShapley) {
  SyntheticSpec s;
  s.instances = 400;
  s.seed = 11;
  const auto g = generate(s);
  const auto scorer = builtin_scorer(s.scorer, s.window_length,
                                     s.feature_count);
  const BaselineStrategy strategy(BaselineKind::forward_fill, g.dataset.schema);
  std::size_t counted = 0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < g.dataset.size(); ++i) {
    if (!g.drivers[i]) continue;
    const Window w = prepare_window(g.dataset.instances[i].window, strategy);
    const auto phi = exact_shapley(*scorer, w, strategy).phi;
    std::size_t best = 0;
    for (std::size_t j = 1; j < phi.size(); ++j) {
      if (std::abs(phi[j]) > std::abs(phi[best])) best = j;
    }
    ++counted;
    agree += best == *g.drivers[i];
  }
  ASSERT_GT(counted, 300u);
  EXPECT_GE(static_cast<double>(agree) / counted, 0.95)
      << agree << " of " << counted;
}

TEST(ObservedMedians, MedianOfObservedOnly) {
  Dataset ds;
  ds.schema = FeatureSchema::with_default_names(2);
  ds.max_sequence_length = 1;
  const double nan = testing::kNaN;
  ds.instances.push_back({Window(1, 2, {1.0, nan}, {1, 0}), 0, "a"});
  ds.instances.push_back({Window(1, 2, {3.0, nan}, {1, 0}), 1, "b"});
  ds.instances.push_back({Window(1, 2, {2.0, nan}, {1, 0}), 1, "c"});
  EXPECT_EQ(observed_medians(ds), (std::vector<double>{2.0, 0.0}));
}

}  // namespace
}  // namespace deltashap
