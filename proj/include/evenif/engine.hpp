#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evenif/baselines.hpp"
#include "evenif/sgen.hpp"

namespace evenif {

// Every knob of every method, as one JSON document:
//   {"objective", "causal_objective", "ga", "causal", "baseline"}
struct EngineConfig {
  ObjectiveConfig objective;
  ObjectiveConfig causal_objective = causal_objective_defaults();
  GaConfig ga;
  CausalConfig causal;
  BaselineConfig baseline;

  static EngineConfig from_json(const json& j, EngineConfig base);
  static EngineConfig from_json(const json& j) { return from_json(j, EngineConfig()); }
  json to_json() const;
};

// sgen, sgen_causal, dice_star, piece_star, dser_star, karimi_star,
// dominguez_star
const std::vector<std::string>& method_names();
bool is_causal_method(const std::string& method);
// Throws ValidationError on an unknown name.
void check_method(const std::string& method);

struct ExplainInputs {
  const ActionSpace* space = nullptr;
  const Predictor* model = nullptr;
  // Encoded training rows; needed by piece_star, feeds plausibility elsewhere.
  const std::vector<Vec>* train = nullptr;
  // Bound to the space's encoder. Causal methods fall back to an SCM
  // without edges when null.
  const Scm* scm = nullptr;
};

// Causal methods ignore m (one item per actionable subset).
ExplanationSet run_method(const std::string& method, const ExplainInputs& in,
                          std::size_t m, const EngineConfig& cfg, std::uint64_t seed,
                          const Deadline& deadline = Deadline::none());

}  // namespace evenif
