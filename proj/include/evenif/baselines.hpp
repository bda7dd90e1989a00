#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evenif/explanation.hpp"
#include "evenif/objective.hpp"

namespace evenif {

enum class BaselineKind { dice_star, piece_star, dser_star, karimi_star, dominguez_star };

BaselineKind baseline_from_string(const std::string& s);
std::string to_string(BaselineKind k);

// Shared knobs. `cfg` supplies the gain norm, epsilon and the Monte Carlo
// settings used to score the returned items.
struct BaselineConfig {
  ObjectiveConfig objective;
  // DiCE*: random candidate actions drawn when looking for counterfactuals.
  int dice_candidates = 2000;
  // DSER*: hill-climbing iterations per semifactual.
  int dser_iterations = 600;
  // Karimi* / Dominguez*: normalised step length and step budget.
  double step = 0.01;
  int max_steps = 2000;
  // Dominguez*: projected-gradient iterations of the worst-case probe.
  int probe_iterations = 10;

  static BaselineConfig from_json(const json& j, BaselineConfig base);
  static BaselineConfig from_json(const json& j) { return from_json(j, BaselineConfig()); }
  json to_json() const;
};

ExplanationSet dice_star(const ActionSpace& space, const Predictor& model,
                         const std::vector<Vec>* data, std::size_t m,
                         const BaselineConfig& cfg, std::uint64_t seed);

// Distributions are fitted on the training rows the model assigns to the
// counterfactual class.
ExplanationSet piece_star(const ActionSpace& space, const Predictor& model,
                          const std::vector<Vec>& train, std::size_t m,
                          const BaselineConfig& cfg, std::uint64_t seed);

ExplanationSet dser_star(const ActionSpace& space, const Predictor& model,
                         const std::vector<Vec>* data, std::size_t m,
                         const BaselineConfig& cfg, std::uint64_t seed);

// One gradient walk per actionable subset (the causal engine's subsets).
// `robust` selects Dominguez* (stop before the worst-case epsilon probe
// crosses) over Karimi* (stop before the semifactual crosses).
ExplanationSet causal_walk(const ActionSpace& space, const Predictor& model,
                           const Scm& scm, bool robust, const BaselineConfig& cfg,
                           std::uint64_t seed);

inline ExplanationSet karimi_star(const ActionSpace& space, const Predictor& model,
                                  const Scm& scm, const BaselineConfig& cfg,
                                  std::uint64_t seed) {
  return causal_walk(space, model, scm, false, cfg, seed);
}

inline ExplanationSet dominguez_star(const ActionSpace& space, const Predictor& model,
                                     const Scm& scm, const BaselineConfig& cfg,
                                     std::uint64_t seed) {
  return causal_walk(space, model, scm, true, cfg, seed);
}

// PIECE* internals, exposed for inspection.
struct PieceFeature {
  std::size_t gene = 0;
  double probability = 0.0;  // of x's value under the counterfactual class
  double expected = 0.0;     // gene value the feature is moved to
};

// Per-gene probabilities and targets in ascending-probability order; genes
// whose distribution cannot be fitted are left out and named in `warnings`.
std::vector<PieceFeature> piece_plan(const ActionSpace& space,
                                     const std::vector<Vec>& counterfactual_rows,
                                     std::vector<std::string>* warnings = nullptr);

// Smallest worst-case score over the epsilon l2 ball around theta, clipped
// to the encoder's coordinate boxes (projected gradient descent on the score).
double worst_case_score(const Predictor& model, const Encoder& encoder,
                        std::span<const double> theta, double epsilon,
                        int iterations);

// Projection of a relaxed one-hot block onto its nearest level (argmax).
std::size_t project_block(std::span<const double> block);

}  // namespace evenif
