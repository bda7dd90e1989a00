#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evenif/action_space.hpp"
#include "evenif/linalg.hpp"

namespace evenif {

struct ExplanationItem {
  Vec action;  // gene values, indexed like ActionSpace::genes()
  Vec theta;   // semifactual state
  double gain = 0.0;
  double plausibility = 1.0;
  double robustness_mc = 0.0;
  int robust_label = 0;  // H_a
  double score = 0.0;    // model score at theta
  double objective = 0.0;
};

struct ExplanationSet {
  std::string method;
  std::uint64_t seed = 0;
  std::size_t m = 0;
  std::vector<ExplanationItem> items;
  double diversity = 0.0;
  // Set when a method could not keep the outcome and returns x unchanged.
  bool no_effective_semifactual = false;
  std::vector<std::string> warnings;
  json config = json::object();

  std::vector<Vec> states() const;
  // {"method", "seed", "m", "diversity", "items": [{"action": {feature: delta},
  //  "semifactual": record, "gain", "plausibility", "robustness_mc", "score",
  //  "sentence"}], ...}
  json to_json(const ActionSpace& space,
               const std::string& positive_label_meaning = {}) const;
};

// "Even if you decrease duration by 6 and change housing from own to rent,
// you would still get: loan accepted."
std::string render_sentence(const ActionSpace& space, const ExplanationItem& item,
                            const std::string& positive_label_meaning);

// Raw-unit change of every actionable feature.
json action_deltas(const ActionSpace& space, const Vec& values);

// Wall-clock budget shared by the engines; check() throws TimeoutError.
class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(std::chrono::milliseconds budget)
      : end_(std::chrono::steady_clock::now() + budget) {}
  static Deadline none() { return {}; }
  bool expired() const {
    return end_ && std::chrono::steady_clock::now() > *end_;
  }
  void check() const;

 private:
  std::optional<std::chrono::steady_clock::time_point> end_;
};

}  // namespace evenif
