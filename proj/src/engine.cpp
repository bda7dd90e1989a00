#include "evenif/engine.hpp"

#include <algorithm>

#include "evenif/error.hpp"

namespace evenif {

EngineConfig EngineConfig::from_json(const json& j, EngineConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("config must be a JSON object", "config");
  for (const auto& [key, _] : j.items())
    if (key != "objective" && key != "causal_objective" && key != "ga" && key != "causal" &&
        key != "baseline")
      throw ValidationError("unknown config section '" + key + "'", key);
  if (j.contains("objective")) c.objective = ObjectiveConfig::from_json(j["objective"], c.objective);
  if (j.contains("causal_objective"))
    c.causal_objective = ObjectiveConfig::from_json(j["causal_objective"], c.causal_objective);
  if (j.contains("ga")) c.ga = GaConfig::from_json(j["ga"], c.ga);
  if (j.contains("causal")) c.causal = CausalConfig::from_json(j["causal"], c.causal);
  if (j.contains("baseline")) c.baseline = BaselineConfig::from_json(j["baseline"], c.baseline);
  c.objective.validate();
  c.causal_objective.validate();
  c.causal.validate();
  return c;
}

json EngineConfig::to_json() const {
  return {{"objective", objective.to_json()},
          {"causal_objective", causal_objective.to_json()},
          {"ga", ga.to_json()},
          {"causal", causal.to_json()},
          {"baseline", baseline.to_json()}};
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {
      "sgen", "sgen_causal", "dice_star", "piece_star", "dser_star", "karimi_star",
      "dominguez_star"};
  return names;
}

bool is_causal_method(const std::string& method) {
  return method == "sgen_causal" || method == "karimi_star" || method == "dominguez_star";
}

void check_method(const std::string& method) {
  const auto& n = method_names();
  if (std::find(n.begin(), n.end(), method) == n.end())
    throw ValidationError("unknown method '" + method + "'", "method");
}

ExplanationSet run_method(const std::string& method, const ExplainInputs& in,
                          std::size_t m, const EngineConfig& cfg, std::uint64_t seed,
                          const Deadline& deadline) {
  check_method(method);
  if (!in.space || !in.model) throw Error("run_method needs a space and a model");
  const ActionSpace& space = *in.space;
  const Predictor& model = *in.model;

  if (is_causal_method(method)) {
    Scm fallback;
    const Scm* scm = in.scm;
    if (!scm) {
      std::vector<std::string> names;
      for (std::size_t c = 0; c < space.encoder().width(); ++c)
        names.push_back("c" + std::to_string(c));
      fallback = Scm::independent(names);
      scm = &fallback;
    }
    if (method == "sgen_causal")
      return explain_causal(space, model, *scm, cfg.causal_objective, cfg.causal, seed,
                            deadline);
    BaselineConfig bc = cfg.baseline;
    bc.objective = cfg.causal_objective;
    return causal_walk(space, model, *scm, method == "dominguez_star", bc, seed);
  }

  if (method == "sgen")
    return explain_noncausal(space, model, in.train, m, cfg.objective, cfg.ga, seed, deadline);
  BaselineConfig bc = cfg.baseline;
  bc.objective = cfg.objective;
  if (method == "dice_star") return dice_star(space, model, in.train, m, bc, seed);
  if (method == "dser_star") return dser_star(space, model, in.train, m, bc, seed);
  if (!in.train || in.train->empty())
    throw ValidationError("piece_star needs training data", "method");
  return piece_star(space, model, *in.train, m, bc, seed);
}

}  // namespace evenif
