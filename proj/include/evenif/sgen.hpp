#pragma once

#include <cstdint>
#include <vector>

#include "evenif/explanation.hpp"
#include "evenif/objective.hpp"

namespace evenif {

struct GaConfig {
  int generations = 20;
  int population = 0;  // 0: 12 per requested semifactual
  double mutation_rate = 0.05;
  int elites = 4;
  double crossover_prob = 0.5;
  // Gaussian mutation sd as a fraction of each gene's feasible width.
  double sigma_factor = 0.05;
  int tournament = 3;
  // Two actions are distinct when their scaled l-inf distance exceeds this.
  double unique_tol = 1e-6;

  int population_for(std::size_t m) const;
  void validate(std::size_t m) const;
  static GaConfig from_json(const json& j, GaConfig base);
  static GaConfig from_json(const json& j) { return from_json(j, GaConfig()); }
  json to_json() const;
};

struct GaTrace {
  std::vector<double> best_fitness;  // initial population, then per generation
};

// Genetic search over sets of m actions. Throws NotPositiveOutcome when
// h(x) = 0 and NoEffectiveSemifactual when no candidate keeps the outcome
// with positive gain.
ExplanationSet explain_noncausal(const ActionSpace& space, const Predictor& model,
                                 const std::vector<Vec>* data, std::size_t m,
                                 const ObjectiveConfig& cfg, const GaConfig& ga,
                                 std::uint64_t seed,
                                 const Deadline& deadline = Deadline::none(),
                                 GaTrace* trace = nullptr);

struct CausalConfig {
  double tau = 0.01;
  double lambda0 = 1.0;
  double eta = 0.9;
  int max_iter = 500;
  double tol = 1e-6;
  // Initial step as a fraction of the feasible interval.
  double init_fraction = 0.1;

  void validate() const;
  static CausalConfig from_json(const json& j, CausalConfig base);
  static CausalConfig from_json(const json& j) { return from_json(j, CausalConfig()); }
  json to_json() const;
};

struct CausalRun {
  std::vector<std::size_t> genes;
  bool skipped = false;
  bool breached = false;
  int iterations = 0;
  double lambda = 0.0;  // after the last update
};

struct CausalTrace {
  std::vector<CausalRun> runs;
};

// Actionable subsets the causal engine optimises: every singleton with room
// to move, plus the full set when it has more than one gene.
std::vector<std::vector<std::size_t>> actionable_subsets(const ActionSpace& space);

// Projected-gradient maximin through `scm` (bound to the space's encoder).
// m equals the number of actionable subsets.
ExplanationSet explain_causal(const ActionSpace& space, const Predictor& model,
                              const Scm& scm, const ObjectiveConfig& cfg,
                              const CausalConfig& cc, std::uint64_t seed,
                              const Deadline& deadline = Deadline::none(),
                              CausalTrace* trace = nullptr);

// Coordinate-wise clamp to the feasible intervals; idempotent.
Vec project_action(std::span<const double> values, const ActionSpace& space);

// Causal-engine objective defaults: l1 gain, no empirical plausibility.
ObjectiveConfig causal_objective_defaults();

}  // namespace evenif
