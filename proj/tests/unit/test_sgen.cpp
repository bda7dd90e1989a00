#include <gtest/gtest.h>

#include "evenif/error.hpp"
#include "evenif/sgen.hpp"
#include "helpers.hpp"

using namespace evenif;
using namespace evenif::fixture;

namespace {

struct OneDim {
  FeatureSchema schema;
  Encoder encoder;
  LogisticModel model{Vec{10.0}, -5.0};
  std::vector<Vec> data;

  OneDim() {
    schema.features = {continuous("a", true, Direction::decrease, Polarity::negative)};
    encoder = Encoder(schema, CategoricalEncoding::one_hot, {Bounds{0, 1}});
    for (int i = 0; i <= 100; ++i) data.push_back(Vec{i / 100.0});
  }
};

struct TwoDim {
  FeatureSchema schema;
  Encoder encoder;
  LogisticModel model{Vec{3.0, 4.0}, -3.0};
  std::vector<Vec> data;

  TwoDim() {
    schema.features = {continuous("a", true, Direction::decrease, Polarity::negative),
                       continuous("b", true, Direction::decrease, Polarity::negative)};
    encoder = Encoder(schema, CategoricalEncoding::one_hot, {Bounds{0, 1}, Bounds{0, 1}});
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) data.push_back(Vec{i / 20.0, j / 20.0});
  }
};

GaConfig quick_ga() {
  GaConfig g;
  g.generations = 10;
  return g;
}

}  // namespace

TEST(Project, ClampAndIdempotence) {
  TwoDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.8, 0.9});
  EXPECT_EQ(project_action(Vec{0.5, 0.5}, space), (Vec{0.5, 0.5}));
  EXPECT_EQ(project_action(Vec{1.5, -2}, space), (Vec{0.8, 0.0}));
  Rng rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 1000; ++i) {
    const Vec once = project_action(Vec{u(rng), u(rng)}, space);
    ASSERT_EQ(project_action(once, space), once);
  }
}

TEST(Noncausal, ItemsKeepTheOutcomeAndStayFeasible) {
  TwoDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.8, 0.9});
  for (std::size_t m : {1u, 3u, 5u}) {
    const auto set = explain_noncausal(space, p.model, &p.data, m, ObjectiveConfig{},
                                       quick_ga(), 4);
    ASSERT_EQ(set.items.size(), m);
    EXPECT_EQ(set.m, m);
    EXPECT_EQ(set.method, "sgen");
    for (const auto& it : set.items) {
      EXPECT_EQ(it.robust_label, 1);
      EXPECT_EQ(p.model.label(it.theta), 1);
      EXPECT_TRUE(space.contains(it.action));
      EXPECT_GT(it.gain, 0.0);
    }
  }
}

TEST(Noncausal, SeedDeterminism) {
  TwoDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.8, 0.9});
  const auto a = explain_noncausal(space, p.model, &p.data, 4, ObjectiveConfig{}, quick_ga(), 9);
  const auto b = explain_noncausal(space, p.model, &p.data, 4, ObjectiveConfig{}, quick_ga(), 9);
  EXPECT_EQ(a.to_json(space).dump(), b.to_json(space).dump());
  const auto c = explain_noncausal(space, p.model, &p.data, 4, ObjectiveConfig{}, quick_ga(), 10);
  EXPECT_NE(a.to_json(space).dump(), c.to_json(space).dump());
}

TEST(Noncausal, ElitismNeverLosesTheBest) {
  TwoDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.8, 0.9});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GaTrace trace;
    explain_noncausal(space, p.model, &p.data, 2, ObjectiveConfig{}, GaConfig{}, seed,
                      Deadline::none(), &trace);
    ASSERT_EQ(trace.best_fitness.size(), 21u);
    for (std::size_t g = 1; g < trace.best_fitness.size(); ++g)
      EXPECT_GE(trace.best_fitness[g], trace.best_fitness[g - 1]);
  }
}

TEST(Noncausal, RefusesNegativeIndividuals) {
  OneDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.3});
  EXPECT_THROW(explain_noncausal(space, p.model, &p.data, 1, ObjectiveConfig{}, quick_ga(), 0),
               NotPositiveOutcome);
}

TEST(Noncausal, OneDimensionalNearOracle) {
  OneDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.9});
  ObjectiveConfig cfg;
  cfg.epsilon = 0.05;
  cfg.margin = 0.015;
  const auto set = explain_noncausal(space, p.model, &p.data, 1, cfg, GaConfig{}, 1);
  const double sf = set.items[0].theta[0];
  EXPECT_GE(sf, 0.55);
  EXPECT_LT(sf, 0.9);
  // The semifactual must keep its whole 0.05-ball positive: a >= 0.55.
  double best = 0;
  for (int k = 0; k <= 1000; ++k) {
    const double a = k / 1000.0;
    if (a <= 0.9 && a - 0.05 > 0.5) best = std::max(best, 0.9 - a);
  }
  EXPECT_GE(set.items[0].gain, 0.95 * best);
}

TEST(Noncausal, DuplicatesWhenOptimaAreScarce) {
  // Single categorical gene with one feasible move: only one distinct action.
  FeatureSchema s;
  s.features = {categorical("level", {"a", "b"}, true, Direction::increase, Polarity::positive)};
  const Encoder enc(s, CategoricalEncoding::one_hot, {Bounds{0, 0}});
  const LogisticModel model(Vec{1.0, 2.0}, 0.0);
  const ActionSpace space(enc, s, Vec{1.0, 0.0});
  const auto set = explain_noncausal(space, model, nullptr, 4, ObjectiveConfig{}, quick_ga(), 2);
  ASSERT_EQ(set.items.size(), 4u);
  for (const auto& it : set.items) EXPECT_EQ(it.action, set.items[0].action);
  EXPECT_EQ(set.diversity, 0.0);
}

TEST(Causal, SubsetsAreSingletonsPlusAll) {
  TwoDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.8, 0.9});
  const auto subsets = actionable_subsets(space);
  ASSERT_EQ(subsets.size(), 3u);
  EXPECT_EQ(subsets[0], (std::vector<std::size_t>{0}));
  EXPECT_EQ(subsets[1], (std::vector<std::size_t>{1}));
  EXPECT_EQ(subsets[2], (std::vector<std::size_t>{0, 1}));
}

TEST(Causal, LambdaDecaysGeometrically) {
  OneDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.9});
  const Scm scm = Scm::independent({"a"});
  CausalTrace trace;
  ObjectiveConfig cfg = causal_objective_defaults();
  cfg.epsilon = 0.05;
  explain_causal(space, p.model, scm, cfg, CausalConfig{}, 3, Deadline::none(), &trace);
  ASSERT_FALSE(trace.runs.empty());
  for (const auto& r : trace.runs) {
    if (r.skipped) continue;
    EXPECT_GT(r.iterations, 0);
    EXPECT_NEAR(r.lambda, std::pow(0.9, r.iterations), 1e-12);
  }
}

TEST(Causal, ChainBeatsSubstitution) {
  FeatureSchema s;
  s.features = {continuous("root", true, Direction::increase, Polarity::positive),
                continuous("child", false, Direction::frozen, Polarity::positive)};
  const Encoder enc(s, CategoricalEncoding::one_hot, {Bounds{0, 1}, Bounds{0, 1}});
  const Scm scm = Scm({ScmNode{"root", {}, {}, 0, 1}, ScmNode{"child", {0}, {0.8}, 0, 1}})
                      .bind(enc);
  const LogisticModel model(Vec{-2.0, 1.0}, 1.5);
  const ActionSpace space(enc, s, Vec{0.2, 0.3});
  const auto set = explain_causal(space, model, scm, causal_objective_defaults(),
                                  CausalConfig{}, 5);
  ASSERT_EQ(set.items.size(), 1u);
  const auto& it = set.items[0];
  const double substitution = gain(space, it.action, nullptr, Norm::l1);
  EXPECT_GT(it.gain, substitution);
  EXPECT_NEAR(it.gain, 1.8 * substitution, 1e-9);
  EXPECT_EQ(model.label(it.theta), 1);
}

TEST(Causal, NeverReturnsABreachedState) {
  TwoDim p;
  const ActionSpace space(p.encoder, p.schema, Vec{0.8, 0.9});
  const Scm scm = Scm::independent({"a", "b"});
  ObjectiveConfig cfg = causal_objective_defaults();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto set = explain_causal(space, p.model, scm, cfg, CausalConfig{}, seed);
    EXPECT_EQ(set.items.size(), 3u);
    for (const auto& it : set.items) {
      EXPECT_EQ(p.model.label(it.theta), 1);
      EXPECT_TRUE(space.contains(it.action));
      EXPECT_EQ(it.robustness_mc, 1.0);
    }
    const auto again = explain_causal(space, p.model, scm, cfg, CausalConfig{}, seed);
    EXPECT_EQ(set.to_json(space).dump(), again.to_json(space).dump());
  }
}

// The score term pulls the first iterate back onto x; the walk has to leave
// x again once lambda has decayed.
TEST(Causal, LeavesXAfterBeingPulledBack) {
  FeatureSchema s;
  FeatureSpec a = continuous("a", true, Direction::decrease, Polarity::negative);
  FeatureSpec b = continuous("b", true, Direction::decrease, Polarity::negative);
  a.max_delta = 0.234;
  b.max_delta = 0.234;
  s.features = {a, b};
  const Encoder enc(s, CategoricalEncoding::one_hot, {Bounds{0, 1}, Bounds{0, 1}});
  const LogisticModel model(Vec{3.24, 2.53}, -2.557);
  const ActionSpace space(enc, s, Vec{0.413, 0.71});
  const Scm scm = Scm::independent({"a", "b"}).bind(enc);
  ObjectiveConfig cfg = causal_objective_defaults();
  cfg.epsilon = 0.05;
  CausalTrace trace;
  const auto set = explain_causal(space, model, scm, cfg, CausalConfig{}, 0, Deadline::none(),
                                  &trace);
  double best = 0;
  for (const auto& it : set.items) {
    EXPECT_EQ(model.label(it.theta), 1);
    best = std::max(best, it.gain);
  }
  EXPECT_GT(best, 0.1);
  for (const auto& r : trace.runs)
    if (!r.skipped) EXPECT_GT(r.iterations, 5);
}

TEST(Causal, RejectsDiscreteGenesAndUnboundScm) {
  FeatureSchema s;
  s.features = {categorical("level", {"a", "b", "c"}, true, Direction::increase)};
  const Encoder enc(s, CategoricalEncoding::one_hot, {Bounds{0, 0}});
  const LogisticModel model(Vec{1.0, 2.0, 3.0}, 0.0);
  const ActionSpace space(enc, s, Vec{1.0, 0.0, 0.0});
  const Scm three = Scm::independent({"x", "y", "z"});
  EXPECT_THROW(explain_causal(space, model, three, causal_objective_defaults(), CausalConfig{}, 0),
               ValidationError);
  const Scm one = Scm::independent({"x"});
  EXPECT_THROW(explain_causal(space, model, one, causal_objective_defaults(), CausalConfig{}, 0),
               ValidationError);
}

TEST(GaConfig, PopulationAndValidation) {
  GaConfig g;
  for (auto [m, pop] : std::vector<std::pair<std::size_t, int>>{
           {1, 12}, {2, 24}, {4, 48}, {6, 72}, {8, 96}, {10, 120}})
    EXPECT_EQ(g.population_for(m), pop);
  g.elites = 200;
  EXPECT_THROW(g.validate(1), ValidationError);
  const GaConfig back = GaConfig::from_json(GaConfig{}.to_json());
  EXPECT_EQ(back.generations, 20);
  EXPECT_EQ(back.mutation_rate, 0.05);
}
