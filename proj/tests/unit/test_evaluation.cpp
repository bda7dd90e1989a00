#include <gtest/gtest.h>

#include "evenif/error.hpp"
#include "evenif/evaluation.hpp"
#include "evenif/stats.hpp"
#include "helpers.hpp"

using namespace evenif;
using namespace evenif::fixture;

namespace {

struct Line {
  FeatureSchema schema;
  Encoder encoder;

  Line() {
    schema.features = {continuous("a", true, Direction::decrease, Polarity::negative),
                       continuous("b")};
    encoder = Encoder(schema, CategoricalEncoding::one_hot, {Bounds{0, 1}, Bounds{0, 1}});
  }
};

ExplanationItem item_at(const ActionSpace& space, Vec theta) {
  ExplanationItem it;
  it.action = space.values_of(theta);
  it.theta = std::move(theta);
  return it;
}

// Two-sided p-value of Student's t by Simpson integration of the density.
double t_pvalue(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
                   std::sqrt(df * M_PI);
  auto f = [&](double u) { return c * std::pow(1 + u * u / df, -(df + 1) / 2); };
  const int n = 200000;
  const double h = std::abs(t) / n;
  double s = f(0) + f(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

BenchRow row(const std::string& ds, const std::string& method, double gain,
             std::size_t m = 1) {
  BenchRow r;
  r.dataset = ds;
  r.model = "logistic";
  r.method = method;
  r.m = m;
  r.metrics.gain = gain;
  r.metrics.plausibility = gain / 2;
  r.metrics.diversity = 0;
  r.metrics.robustness = 0.75;
  return r;
}

BenchmarkPlan small_plan() {
  BenchmarkPlan p;
  p.name = "small";
  DatasetSpec d;
  d.id = "german";
  d.synthetic = "german";
  d.rows = 150;
  d.seed = 2;
  p.datasets = {d};
  p.models = {"logistic", "tree"};
  p.methods = {"sgen", "dice_star", "piece_star"};
  p.m_values = {1, 2};
  p.seeds = {0, 1};
  p.engine.ga.generations = 3;
  p.engine.baseline.dice_candidates = 200;
  p.evaluation.adversarial = false;
  p.threads = 1;
  return p;
}

}  // namespace

TEST(Evaluate, UnchangedItemHasZeroGainAndDiversity) {
  Line p;
  const LogisticModel model(Vec{10, 0}, -5);
  const Vec x{0.9, 0.5};
  const ActionSpace space(p.encoder, p.schema, x);
  ExplanationSet set;
  set.items = {item_at(space, x)};
  const std::vector<Vec> train{{0.1, 0.1}};
  const SetMetrics m = evaluate_explanations(set, model, space, train, Norm::l2, EvalConfig{}, 1);
  EXPECT_EQ(m.gain, 0.0);
  EXPECT_EQ(m.action_gain, 0.0);
  EXPECT_EQ(m.diversity, 0.0);
  EXPECT_EQ(m.items, 1u);
}

TEST(Evaluate, PlausibilityIsNearestDistance) {
  Line p;
  const LogisticModel model(Vec{10, 0}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.9, 0.5});
  ExplanationSet set;
  set.items = {item_at(space, Vec{0.7, 0.5}), item_at(space, Vec{0.8, 0.5})};
  const std::vector<Vec> train{{0.7, 0.5}, {0.8, 0.9}};
  const SetMetrics m = evaluate_explanations(set, model, space, train, Norm::l2, EvalConfig{}, 1);
  EXPECT_NEAR(m.plausibility, (0.0 + 0.1) / 2, 1e-12);
  EXPECT_NEAR(m.gain, (0.2 + 0.1) / 2, 1e-12);
  EXPECT_NEAR(m.diversity, 0.1, 1e-12);
}

TEST(Evaluate, FarInsideIsFullyRobust) {
  Line p;
  const LogisticModel model(Vec{10, 0}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.95, 0.5});
  ExplanationSet set;
  set.items = {item_at(space, Vec{0.8, 0.5})};
  const std::vector<Vec> train{{0, 0}};
  EvalConfig cfg;
  cfg.epsilon = 0.1;
  const SetMetrics m = evaluate_explanations(set, model, space, train, Norm::l2, cfg, 3);
  EXPECT_EQ(m.robustness, 1.0);
  EXPECT_EQ(m.adversarial_pass, 1.0);
}

TEST(Evaluate, EngineGainMatchesRecomputedGain) {
  Line p;
  const LogisticModel model(Vec{10, 0}, -5);
  const ActionSpace space(p.encoder, p.schema, Vec{0.95, 0.5});
  std::vector<Vec> train;
  for (int i = 0; i <= 10; ++i) train.push_back(Vec{i / 10.0, 0.5});
  const auto set = run_method("sgen", ExplainInputs{&space, &model, &train, nullptr}, 3,
                              EngineConfig{}, 5);
  double mean = 0;
  for (const auto& it : set.items) mean += it.gain / 3;
  const SetMetrics m = evaluate_explanations(set, model, space, train, Norm::l2, EvalConfig{}, 1);
  EXPECT_NEAR(m.gain, mean, 1e-12);
}

TEST(SingleFeature, PerturbsOneFeatureAtATime) {
  Line p;
  // Only b matters, and b sits 0.05 above the boundary: perturbing a never
  // flips, perturbing b flips with probability 1/4.
  const LogisticModel model(Vec{0, 10}, -5);
  Rng rng(5);
  const double r = single_feature_robustness(model, p.encoder, Vec{0.5, 0.55}, 1, 0.1, 20000, rng);
  EXPECT_NEAR(r, 1.0 - 0.5 * 0.25, 0.015);
}

TEST(Adversarial, LinearRadiusMatchesClosedForm) {
  const LogisticModel model(Vec{3, 4}, -3.5);
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.3, 0.7);
  for (int i = 0; i < 20; ++i) {
    const Vec theta{u(rng), u(rng)};
    const double z = dot(model.weights(), theta) + model.bias();
    if (z <= 0) continue;
    const auto r = adversarial_radius(model, theta, 0.1, nullptr, 7);
    EXPECT_NEAR(r.radius, z / 5.0, 0.05 * z / 5.0);
    EXPECT_EQ(r.pass, r.radius > 0.1);
  }
}

TEST(Adversarial, NearBoundaryOneDimensional) {
  const LogisticModel model(Vec{10}, -5);
  const Vec theta{0.55};
  const auto r = adversarial_radius(model, theta, 0.1, nullptr, 3);
  EXPECT_NEAR(r.radius, 0.05, 0.0025);
  EXPECT_FALSE(r.pass);
}

TEST(Adversarial, OnBoundaryAndConstantModels) {
  const LogisticModel model(Vec{10}, -5);
  const auto on = adversarial_radius(model, Vec{0.5}, 0.1, nullptr, 3);
  EXPECT_EQ(on.radius, 0.0);
  EXPECT_FALSE(on.pass);
  const LogisticModel always(Vec{0.0}, 5.0);
  const auto inf = adversarial_radius(always, Vec{0.5}, 0.1, nullptr, 3);
  EXPECT_TRUE(std::isinf(inf.radius));
  EXPECT_TRUE(inf.pass);
}

TEST(Adversarial, TreeModelAxisThreshold) {
  std::vector<TreeModel::Node> nodes(3);
  nodes[0] = {1, 0.4, 1, 2, 0, 0};
  nodes[1] = {-1, 0, -1, -1, 0, 10};
  nodes[2] = {-1, 0, -1, -1, 10, 10};
  const TreeModel tree(2, nodes);
  const Vec theta{0.5, 0.47};
  const auto r = adversarial_radius(tree, theta, 0.1, nullptr, 3);
  EXPECT_GE(r.radius, 0.07 - 1e-9);  // upper-bound probe: never below the truth
  EXPECT_NEAR(r.radius, 0.07, 0.0035);
  EXPECT_FALSE(r.pass);
}

TEST(Aggregate, MinMaxPerDataset) {
  const BenchmarkReport rep = aggregate_normalized({row("d", "a", 1), row("d", "b", 3)});
  ASSERT_EQ(rep.cells.size(), 2u);
  EXPECT_EQ(rep.cell("a", 1)->gain.mean, 0.0);
  EXPECT_EQ(rep.cell("b", 1)->gain.mean, 1.0);
  EXPECT_EQ(rep.cell("b", 1)->raw_gain.mean, 3.0);
  EXPECT_EQ(rep.cell("b", 1)->robustness.mean, 0.75);
  EXPECT_TRUE(rep.warnings.size() == 1);  // diversity is constant
}

TEST(Aggregate, IdenticalGainsAreDegenerate) {
  const BenchmarkReport rep = aggregate_normalized({row("d", "a", 2), row("d", "b", 2)});
  EXPECT_EQ(rep.cell("a", 1)->gain.mean, 0.0);
  bool warned = false;
  for (const auto& w : rep.warnings) warned |= w.find("gain") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(Aggregate, SingleMethodStaysRaw) {
  const BenchmarkReport rep = aggregate_normalized({row("d", "a", 2), row("d", "a", 5)});
  EXPECT_NEAR(rep.cell("a", 1)->gain.mean, 3.5, 1e-12);
  ASSERT_FALSE(rep.warnings.empty());
  EXPECT_NE(rep.warnings[0].find("single method"), std::string::npos);
}

TEST(Aggregate, StandardErrorAndOrdering) {
  // Three seeds of one method next to an anchor method spanning [0, 10].
  const BenchmarkReport rep = aggregate_normalized(
      {row("d", "a", 2), row("d", "a", 4), row("d", "a", 9), row("d", "z", 0), row("d", "z", 10)});
  const Summary& s = rep.cell("a", 1)->gain;
  // normalized 0.2, 0.4, 0.9: mean 0.5, sd sqrt(0.13), se sd / sqrt(3)
  EXPECT_NEAR(s.mean, 0.5, 1e-12);
  EXPECT_NEAR(s.se, std::sqrt(0.13) / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(s.n, 3u);
}

TEST(Aggregate, ErrorRowsAreExcluded) {
  BenchRow bad = row("d", "a", 100);
  bad.status = "error";
  const BenchmarkReport rep = aggregate_normalized({row("d", "a", 1), row("d", "b", 3), bad});
  EXPECT_EQ(rep.cell("a", 1)->gain.n, 1u);
  EXPECT_EQ(rep.cell("a", 1)->gain.mean, 0.0);
}

TEST(Stats, StandardErrorHandComputed) {
  const std::vector<double> v{1, 2, 6};
  EXPECT_NEAR(mean(v), 3.0, 1e-15);
  EXPECT_NEAR(stdev(v), std::sqrt(7.0), 1e-12);
  EXPECT_NEAR(standard_error(v), std::sqrt(7.0 / 3.0), 1e-12);
  EXPECT_EQ(standard_error(std::vector<double>{4}), 0.0);
}

TEST(Stats, PairedTTestAgainstIntegratedDensity) {
  const std::vector<double> a{0.61, 0.72, 0.55, 0.80, 0.66, 0.71, 0.59, 0.77};
  const std::vector<double> b{0.58, 0.70, 0.50, 0.74, 0.67, 0.65, 0.55, 0.70};
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double t = mean(d) / (stdev(d) / std::sqrt(8.0));
  const TTest r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, t, 1e-12);
  EXPECT_EQ(r.df, 7.0);
  EXPECT_NEAR(r.p, t_pvalue(t, 7.0), 1e-7);
  EXPECT_THROW(paired_t_test(std::vector<double>{1}, std::vector<double>{2}), ValidationError);
  EXPECT_THROW(paired_t_test(a, std::vector<double>{1, 2}), ValidationError);
}

TEST(Stats, CohensD) {
  const std::vector<double> a{2, 4, 6}, b{1, 2, 3};
  const double pooled = std::sqrt((2 * 4.0 + 2 * 1.0) / 4.0);
  EXPECT_NEAR(cohens_d(a, b), 2.0 / pooled, 1e-12);
}

TEST(Benchmark, EmptyPlanGivesEmptyReport) {
  BenchmarkPlan p;
  const BenchmarkReport rep = run_benchmark(p);
  EXPECT_TRUE(rep.rows.empty());
  EXPECT_TRUE(rep.cells.empty());
  EXPECT_EQ(rep.csv().find('\n'), rep.csv().size() - 1);  // header only
}

TEST(Benchmark, DeterministicAndThreadInvariant) {
  BenchmarkPlan p = small_plan();
  const std::string a = run_benchmark(p).csv();
  const std::string b = run_benchmark(p).csv();
  EXPECT_EQ(a, b);
  p.threads = 3;
  EXPECT_EQ(run_benchmark(p).csv(), a);
}

TEST(Benchmark, GridShape) {
  const BenchmarkReport rep = run_benchmark(small_plan());
  // 2 models x 3 methods x 2 m x 2 seeds
  EXPECT_EQ(rep.rows.size(), 24u);
  for (const auto& r : rep.rows) {
    EXPECT_NE(r.status, "error") << r.error;
    EXPECT_GE(r.metrics.robustness, 0.0);
    EXPECT_LE(r.metrics.robustness, 1.0);
  }
  for (const auto& c : rep.cells) {
    EXPECT_GE(c.gain.mean, 0.0);
    EXPECT_LE(c.gain.mean, 1.0);
  }
  EXPECT_EQ(rep.csv().rfind("dataset,model,method,m,seed,gain,plausibility,robustness,diversity", 0),
            0u);
  const json s = rep.summary();
  EXPECT_TRUE(s.contains("cells"));
}

TEST(Benchmark, PlanParsing) {
  const json j = {{"name", "x"},
                  {"datasets", {{{"synthetic", "adult"}, {"rows", 300}}}},
                  {"models", {"logistic"}},
                  {"methods", {"sgen_causal"}},
                  {"m", {1}},
                  {"n_seeds", 3},
                  {"seed_offset", 10}};
  const BenchmarkPlan p = BenchmarkPlan::from_json(j);
  EXPECT_EQ(p.datasets[0].id, "adult");
  EXPECT_EQ(p.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
  EXPECT_THROW(BenchmarkPlan::from_json(json{{"m", {0}}}), ValidationError);
  EXPECT_THROW(BenchmarkPlan::from_json(json{{"datasets", {{{"rows", 5}}}}}), ValidationError);
}
