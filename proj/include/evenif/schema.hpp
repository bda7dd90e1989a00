#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace evenif {

using json = nlohmann::json;

enum class FeatureKind { continuous, categorical };
enum class Direction { increase, decrease, both, frozen };
// Which direction of change counts as positive gain: `positive` means an
// increase is beneficial, `negative` a decrease, `neutral` either.
enum class Polarity { positive, negative, neutral };

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
  // Ordered levels; the order is what increase/decrease refer to.
  std::vector<std::string> levels;
  bool actionable = false;
  Direction direction = Direction::frozen;
  // Raw units for continuous features, level indices for categorical ones.
  // Unset means the observed data range / all levels.
  std::optional<Bounds> bounds;
  // Largest allowed change from the individual's value, raw units.
  std::optional<double> max_delta;
  Polarity polarity = Polarity::neutral;

  bool categorical() const noexcept { return kind == FeatureKind::categorical; }
  // -1 when `level` is not one of the levels.
  int level_index(std::string_view level) const;
};

struct FeatureSchema {
  std::vector<FeatureSpec> features;
  std::string label = "label";
  double psi = 0.5;
  std::string positive_label_meaning;

  // Throws ValidationError naming the first offending feature.
  void validate() const;
  std::size_t index_of(std::string_view name) const;  // throws NotFound
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t size() const noexcept { return features.size(); }

  static FeatureSchema from_json(const json& j);
  json to_json() const;
  // Stable 64-bit FNV-1a of the feature layout and label, hex encoded.
  std::string hash() const;
};

FeatureSchema load_schema(const std::string& path);

// Per-request constraint overrides, keyed by feature name:
//   {"age": {"actionable": true, "direction": "increase",
//            "bounds": [18, 45], "polarity": "positive", "max_delta": 5}}
// Returns the overridden schema; throws ValidationError naming the feature on
// unknown names or inconsistent combinations.
FeatureSchema apply_overrides(const FeatureSchema& schema,
                              const json& overrides);

Direction direction_from_string(const std::string& s);
std::string to_string(Direction d);
Polarity polarity_from_string(const std::string& s);
std::string to_string(Polarity p);

json read_json_file(const std::string& path);

}  // namespace evenif
