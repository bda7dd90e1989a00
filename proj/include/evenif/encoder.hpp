#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evenif/linalg.hpp"
#include "evenif/schema.hpp"

namespace evenif {

// Raw cell: number for continuous features, level name for categorical ones.
using Value = std::variant<double, std::string>;
using Record = std::map<std::string, Value>;

json record_to_json(const Record& r);
Record record_from_json(const json& j);

enum class CategoricalEncoding {
  one_hot,  // one coordinate per level
  ordinal,  // one real coordinate, level index scaled to [0,1]
};

CategoricalEncoding encoding_from_string(const std::string& s);
std::string to_string(CategoricalEncoding e);

// Where a feature lives in the encoded vector.
struct Slot {
  std::size_t offset = 0;
  std::size_t width = 1;
  bool categorical = false;
  std::size_t n_levels = 0;
  // Raw value mapped to 0 and raw span mapped to 1 (continuous: training
  // extrema; ordinal categorical: 0 and n_levels-1).
  double origin = 0.0;
  double span = 1.0;
};

// Encodes records into scaled vectors. Continuous features are min-max scaled
// with the training extrema; categorical ones are one-hot or ordinal.
class Encoder {
 public:
  Encoder() = default;
  Encoder(FeatureSchema schema, CategoricalEncoding encoding,
          std::vector<Bounds> ranges);

  // Ranges are the per-feature extrema over `rows` (continuous features).
  static Encoder fit(const FeatureSchema& schema,
                     const std::vector<Record>& rows,
                     CategoricalEncoding encoding);

  const FeatureSchema& schema() const noexcept { return schema_; }
  CategoricalEncoding encoding() const noexcept { return encoding_; }
  std::size_t width() const noexcept { return width_; }
  const std::vector<Slot>& slots() const noexcept { return slots_; }
  const std::vector<Bounds>& ranges() const noexcept { return ranges_; }

  Vec encode(const Record& r) const;
  // Categorical blocks decode to their argmax level (ties: lowest index);
  // ordinal coordinates round to the nearest level.
  Record decode(std::span<const double> x) const;

  double scale(std::size_t feature, double raw) const;
  double unscale(std::size_t feature, double scaled) const;

  // Level index of a categorical feature inside an encoded vector.
  int level_of(std::size_t feature, std::span<const double> x) const;
  // Signed change of feature `feature` from `x` to `y`: scaled units for real
  // coordinates, level steps for one-hot blocks.
  double feature_delta(std::size_t feature, std::span<const double> x,
                       std::span<const double> y) const;

  // Coordinates that are real valued (continuous, or ordinal categorical).
  const std::vector<std::size_t>& real_coords() const noexcept {
    return real_coords_;
  }
  // Scaled clip box of every real coordinate, from schema bounds when given
  // and the observed range otherwise.
  Bounds coord_bounds(std::size_t coord) const;
  // Feature owning a coordinate.
  std::size_t feature_of(std::size_t coord) const { return coord_feature_[coord]; }

  json to_json() const;
  static Encoder from_json(const json& j);

 private:
  FeatureSchema schema_;
  CategoricalEncoding encoding_ = CategoricalEncoding::one_hot;
  std::vector<Bounds> ranges_;
  std::vector<Slot> slots_;
  std::vector<std::size_t> real_coords_;
  std::vector<std::size_t> coord_feature_;
  std::size_t width_ = 0;
};

}  // namespace evenif
