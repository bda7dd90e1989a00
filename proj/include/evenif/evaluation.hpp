#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evenif/engine.hpp"

namespace evenif {

struct EvalConfig {
  // Half-width of the single-feature perturbation (scaled units) and the
  // adversarial radius threshold.
  double epsilon = 0.1;
  int n_perturb = 100;
  // Compute the adversarial-radius pass rate (one probe per item).
  bool adversarial = true;

  static EvalConfig from_json(const json& j, EvalConfig base);
  static EvalConfig from_json(const json& j) { return from_json(j, EvalConfig()); }
  json to_json() const;
};

struct SetMetrics {
  double gain = 0.0;          // mean gated gain of the semifactual states
  double action_gain = 0.0;   // same, for the non-causal substitution
  double plausibility = 0.0;  // mean distance to the nearest training row
  double robustness = 0.0;    // single-feature perturbation label-match rate
  double diversity = 0.0;
  double adversarial_pass = 0.0;  // fraction of items with radius > epsilon
  std::size_t items = 0;
};

// `norm` is the gain norm the method was run with.
SetMetrics evaluate_explanations(const ExplanationSet& set, const Predictor& model,
                                 const ActionSpace& space, const std::vector<Vec>& train,
                                 Norm norm, const EvalConfig& cfg, std::uint64_t seed);

// n perturbations of one uniformly chosen feature each: real coordinates by
// U(-epsilon, epsilon) clipped to their box, categorical features to a random
// other level. Returns the fraction keeping `label`.
double single_feature_robustness(const Predictor& model, const Encoder& encoder,
                                 std::span<const double> theta, int label,
                                 double epsilon, int n, Rng& rng);

struct AdversarialConfig {
  int restarts = 10;
  int iterations = 100;
  // Directional search for models without an analytic gradient.
  int directions = 64;
};

struct AdversarialResult {
  double radius = std::numeric_limits<double>::infinity();
  bool pass = true;
};

// Smallest l2 perturbation of the real coordinates found to turn label 1 into
// 0; pass iff radius > epsilon. Radius 0 when theta is not labelled 1, +inf
// when no flip is found. `encoder` supplies coordinate boxes and may be null.
AdversarialResult adversarial_radius(const Predictor& model, std::span<const double> theta,
                                     double epsilon, const Encoder* encoder,
                                     std::uint64_t seed, const AdversarialConfig& cfg = {});

// ------------------------------------------------------------- reporting

struct BenchRow {
  std::string dataset;
  std::string model;
  std::string method;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::string individual;
  // ok | no_effective | error
  std::string status = "ok";
  std::string error;
  SetMetrics metrics;
};

struct Summary {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

struct AggregateCell {
  std::string dataset;  // "*" when pooled over datasets
  std::string model;    // "*" when pooled over models
  std::string method;
  std::size_t m = 0;
  Summary gain, plausibility, robustness, diversity;  // normalized
  Summary raw_gain, raw_plausibility, raw_diversity, action_gain, adversarial_pass;
};

struct BenchmarkReport {
  std::vector<BenchRow> rows;
  // Pooled over datasets and models, keyed by (method, m).
  std::vector<AggregateCell> cells;
  // Per (dataset, model, method, m).
  std::vector<AggregateCell> per_dataset;
  std::vector<std::string> warnings;

  // Long format, one line per row:
  // dataset,model,method,m,seed,gain,plausibility,robustness,diversity,
  // action_gain,adversarial_pass,individual,status,error
  std::string csv() const;
  json summary() const;
  const AggregateCell* cell(const std::string& method, std::size_t m) const;
};

// Min-max normalizes gain, plausibility and diversity over the successful
// rows of each dataset (robustness stays raw), then pools the normalized
// values per (method, m) and reports mean and standard error.
BenchmarkReport aggregate_normalized(std::vector<BenchRow> rows);

// ------------------------------------------------------------ benchmark plan

struct DatasetSpec {
  std::string id;
  // Either a synthetic domain name or csv + schema paths.
  std::string synthetic;
  std::size_t rows = 1000;
  std::uint64_t seed = 0;
  std::string csv;
  std::string schema;
  std::string scm;  // optional, raw units
  std::string encoding;  // empty: domain default / one_hot
};

struct BenchmarkPlan {
  std::string name = "benchmark";
  std::vector<DatasetSpec> datasets;
  std::vector<std::string> models;
  std::vector<std::string> methods;
  std::vector<std::size_t> m_values;
  std::vector<std::uint64_t> seeds;
  std::size_t individuals_per_seed = 1;
  double test_fraction = 0.3;
  std::uint64_t split_seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
  EngineConfig engine;
  EvalConfig evaluation;
  json train = json::object();  // TrainOptions overrides, keyed by model kind

  // Relative paths resolve against `base_dir`.
  static BenchmarkPlan from_json(const json& j, const std::string& base_dir = ".");
};

// Runs the full grid. Per-cell failures become rows with status "error".
// Results depend only on the plan, not on the thread count.
BenchmarkReport run_benchmark(const BenchmarkPlan& plan);

// Writes <dir>/<name>.csv and <dir>/<name>.summary.json.
void write_report(const BenchmarkReport& report, const std::string& dir,
                  const std::string& name);

}  // namespace evenif
