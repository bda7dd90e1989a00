#include <gtest/gtest.h>

#include "evenif/baselines.hpp"
#include "evenif/error.hpp"
#include "evenif/sgen.hpp"
#include "helpers.hpp"

using namespace evenif;
using namespace evenif::fixture;

namespace {

struct Problem {
  FeatureSchema schema;
  Encoder encoder;

  explicit Problem(std::vector<FeatureSpec> features) {
    schema.features = std::move(features);
    encoder = Encoder(schema, CategoricalEncoding::one_hot,
                      std::vector<Bounds>(schema.size(), Bounds{0, 1}));
  }
};

Problem one_dim() {
  return Problem({continuous("a", true, Direction::decrease, Polarity::negative)});
}

std::vector<Vec> grid_1d() {
  std::vector<Vec> d;
  for (int i = 0; i <= 100; ++i) d.push_back(Vec{i / 100.0});
  return d;
}

// Counterfactual-class rows for the PIECE* instance: a spread over
// [0.45, 0.65], b tightly around 0.1.
std::vector<Vec> piece_rows() {
  std::vector<Vec> rows;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 4; ++j) rows.push_back(Vec{0.45 + 0.01 * i, 0.08 + 0.01 * j});
  return rows;
}

}  // namespace

TEST(Baselines, Names) {
  for (auto k : {BaselineKind::dice_star, BaselineKind::piece_star, BaselineKind::dser_star,
                 BaselineKind::karimi_star, BaselineKind::dominguez_star})
    EXPECT_EQ(baseline_from_string(to_string(k)), k);
  EXPECT_THROW(baseline_from_string("lime"), ValidationError);
}

TEST(Dice, OneDimensionalLandsNearTheBoundary) {
  const Problem p = one_dim();
  const LogisticModel model(Vec{10}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.9});
  const auto data = grid_1d();
  const auto set = dice_star(space, model, &data, 1, BaselineConfig{}, 3);
  ASSERT_EQ(set.items.size(), 1u);
  const double sf = set.items[0].theta[0];
  EXPECT_GT(sf, 0.5);
  EXPECT_LT(sf, 0.52);
  EXPECT_EQ(model.label(set.items[0].theta), 1);
  EXPECT_EQ(set.method, "dice_star");
}

TEST(Dice, DiverseCounterfactualsGiveDistinctSemifactuals) {
  const Problem p({continuous("a", true, Direction::decrease, Polarity::negative),
                   continuous("b", true, Direction::decrease, Polarity::negative)});
  const LogisticModel model(Vec{5, 5}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.9, 0.9});
  const auto set = dice_star(space, model, nullptr, 2, BaselineConfig{}, 1);
  ASSERT_EQ(set.items.size(), 2u);
  EXPECT_GT(distance(set.items[0].theta, set.items[1].theta, Norm::l2), 1e-3);
  for (const auto& it : set.items) {
    EXPECT_EQ(model.label(it.theta), 1);
    EXPECT_TRUE(space.contains(it.action));
  }
}

TEST(Dice, EmptyActionSpaceIsAnError) {
  const Problem p = one_dim();
  EXPECT_THROW(ActionSpace(p.encoder, p.schema, Vec{0.0}), EmptyActionSpace);
}

TEST(Piece, PlanIsAscendingProbability) {
  const Problem p({continuous("a", true, Direction::both), continuous("b", true, Direction::both)});
  const ActionSpace space(p.encoder, p.schema, Vec{0.72, 0.9});
  const auto plan = piece_plan(space, piece_rows());
  ASSERT_EQ(plan.size(), 2u);
  EXPECT_EQ(plan[0].gene, 1u);
  EXPECT_EQ(plan[1].gene, 0u);
  EXPECT_LT(plan[0].probability, plan[1].probability);
  EXPECT_NEAR(plan[0].expected, 0.1, 1e-9);
  EXPECT_NEAR(plan[1].expected, 0.55, 1e-9);
}

TEST(Piece, FeatureAtExpectationContributesNothing) {
  const Problem p({continuous("a", true, Direction::both), continuous("b", true, Direction::both)});
  const ActionSpace space(p.encoder, p.schema, Vec{0.55, 0.9});
  const auto plan = piece_plan(space, piece_rows());
  for (const auto& f : plan)
    if (f.gene == 0) EXPECT_NEAR(f.expected, space.x()[0], 1e-9);
}

TEST(Piece, ExactlyOneSwapStaysPositive) {
  const Problem p({continuous("a", true, Direction::both), continuous("b", true, Direction::both)});
  const LogisticModel model(Vec{4, 1}, -2.9);
  const ActionSpace space(p.encoder, p.schema, Vec{0.72, 0.9});
  std::vector<Vec> train = piece_rows();
  train.push_back(Vec{0.95, 0.95});  // a positive row, ignored
  const auto set = piece_star(space, model, train, 1, BaselineConfig{}, 0);
  ASSERT_EQ(set.items.size(), 1u);
  const auto& it = set.items[0];
  EXPECT_EQ(it.theta[0], 0.72);
  EXPECT_NEAR(it.theta[1], 0.1, 1e-9);
  EXPECT_FALSE(set.no_effective_semifactual);
  EXPECT_EQ(model.label(it.theta), 1);
}

TEST(Piece, EverySwapCrossing) {
  const Problem p({continuous("a", true, Direction::both), continuous("b", true, Direction::both)});
  const LogisticModel model(Vec{4, 1}, -3.7);
  const ActionSpace space(p.encoder, p.schema, Vec{0.72, 0.9});
  const auto set = piece_star(space, model, piece_rows(), 2, BaselineConfig{}, 0);
  EXPECT_TRUE(set.no_effective_semifactual);
  ASSERT_EQ(set.items.size(), 2u);
  for (const auto& it : set.items) {
    EXPECT_EQ(it.theta, space.x());
    EXPECT_EQ(it.gain, 0.0);
  }
}

TEST(Piece, DegenerateFeatureIsSkippedWithWarning) {
  const Problem p({continuous("a", true, Direction::both), continuous("b", true, Direction::both)});
  const ActionSpace space(p.encoder, p.schema, Vec{0.72, 0.9});
  std::vector<Vec> rows = piece_rows();
  for (auto& r : rows) r[0] = 0.3;
  std::vector<std::string> warnings;
  const auto plan = piece_plan(space, rows, &warnings);
  ASSERT_EQ(plan.size(), 1u);
  EXPECT_EQ(plan[0].gene, 1u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("'a'"), std::string::npos);
}

TEST(Dser, OneDimensionalNearOracle) {
  const Problem p = one_dim();
  const LogisticModel model(Vec{10}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.9});
  double oracle = 0;
  for (int k = 0; k <= 1000; ++k) {
    const double a = k / 1000.0;
    if (a <= 0.9 && model.label(Vec{a}) == 1) oracle = std::max(oracle, 0.9 - a);
  }
  const auto data = grid_1d();
  const auto set = dser_star(space, model, &data, 1, BaselineConfig{}, 2);
  EXPECT_GE(set.items[0].gain, 0.95 * oracle);
  EXPECT_EQ(model.label(set.items[0].theta), 1);
}

TEST(Dser, RepulsionSeparatesSolutions) {
  const Problem p({continuous("a", true, Direction::decrease, Polarity::negative),
                   continuous("b", true, Direction::decrease, Polarity::negative)});
  const LogisticModel model(Vec{5, 5}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.9, 0.9});
  const auto set = dser_star(space, model, nullptr, 2, BaselineConfig{}, 4);
  ASSERT_EQ(set.items.size(), 2u);
  EXPECT_GT(distance(set.items[0].theta, set.items[1].theta, Norm::l2), 0.0);
}

TEST(Dser, ProjectBlock) {
  EXPECT_EQ(project_block(Vec{0.1, 0.8, 0.1}), 1u);
  EXPECT_EQ(project_block(Vec{0.4, 0.4, 0.2}), 0u);
}

TEST(CausalWalk, OneDimensionalStops) {
  const Problem p = one_dim();
  const LogisticModel model(Vec{10}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.9});
  const Scm scm = Scm::independent({"a"});
  BaselineConfig cfg;
  const auto k = karimi_star(space, model, scm, cfg, 0);
  const auto d = dominguez_star(space, model, scm, cfg, 0);
  ASSERT_EQ(k.items.size(), 1u);
  const double ka = k.items[0].theta[0];
  const double da = d.items[0].theta[0];
  EXPECT_GT(ka, 0.5);
  EXPECT_LE(ka, 0.5 + cfg.step + 1e-9);
  EXPECT_GT(da - cfg.objective.epsilon, 0.5 - 1e-9);
  EXPECT_LE(da, 0.5 + cfg.objective.epsilon + cfg.step + 1e-9);
}

TEST(CausalWalk, StartInsideEpsilonReturnsX) {
  const Problem p = one_dim();
  const LogisticModel model(Vec{10}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.55});
  const auto d = dominguez_star(space, model, Scm::independent({"a"}), BaselineConfig{}, 0);
  EXPECT_TRUE(d.no_effective_semifactual);
  EXPECT_EQ(d.items[0].gain, 0.0);
}

TEST(CausalWalk, DominguezKeepsALargerMargin) {
  Rng rng(17);
  std::uniform_real_distribution<double> w(0.5, 4.0);
  const Problem p({continuous("a", true, Direction::decrease, Polarity::negative),
                   continuous("b", true, Direction::decrease, Polarity::negative),
                   continuous("c")});
  const Scm scm = Scm::independent({"a", "b", "c"});
  for (int trial = 0; trial < 20; ++trial) {
    const Vec wv{w(rng), w(rng), w(rng) - 2};
    const Vec x{0.9, 0.85, 0.5};
    const double bias = -dot(wv, x) + 0.4 * (wv[0] + wv[1]);
    const LogisticModel model(wv, bias);
    ASSERT_EQ(model.label(x), 1);
    const ActionSpace space(p.encoder, p.schema, x);
    const auto k = karimi_star(space, model, scm, BaselineConfig{}, 1);
    const auto d = dominguez_star(space, model, scm, BaselineConfig{}, 1);
    ASSERT_EQ(k.items.size(), d.items.size());
    for (std::size_t i = 0; i < k.items.size(); ++i) {
      const double mk = dot(wv, k.items[i].theta) + bias;
      const double md = dot(wv, d.items[i].theta) + bias;
      EXPECT_GE(md, mk - 1e-12);
      if (mk < 1.01 * BaselineConfig{}.step * norm(wv, Norm::l2))
        EXPECT_GT(md, mk) << "trial " << trial << " item " << i;
    }
  }
}

TEST(WorstCase, LinearClosedForm) {
  const Problem p({continuous("a"), continuous("b")});
  const LogisticModel model(Vec{3, -4}, 0.2);
  const Vec theta{0.5, 0.4};
  const double z = dot(model.weights(), theta) + model.bias();
  const double want = sigmoid(z - 0.1 * 5.0);
  EXPECT_NEAR(worst_case_score(model, p.encoder, theta, 0.1, 10), want, 1e-9);
}
