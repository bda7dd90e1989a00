#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "evenif/dataset.hpp"
#include "evenif/predictor.hpp"

namespace evenif::fixture {

inline FeatureSpec continuous(std::string name, bool actionable = false,
                              Direction dir = Direction::frozen,
                              Polarity pol = Polarity::neutral) {
  FeatureSpec f;
  f.name = std::move(name);
  f.actionable = actionable;
  f.direction = dir;
  f.polarity = pol;
  return f;
}

inline FeatureSpec categorical(std::string name, std::vector<std::string> levels,
                               bool actionable = false, Direction dir = Direction::frozen,
                               Polarity pol = Polarity::neutral) {
  FeatureSpec f = continuous(std::move(name), actionable, dir, pol);
  f.kind = FeatureKind::categorical;
  f.levels = std::move(levels);
  return f;
}

// Rows on a regular grid over [0,1]^k (k continuous features f0..), labelled
// by `label_of`.
template <class F>
EncodedDataset grid_dataset(const FeatureSchema& schema, std::size_t per_axis, F label_of) {
  Dataset d;
  d.schema = schema;
  const std::size_t k = schema.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) total *= per_axis;
  for (std::size_t r = 0; r < total; ++r) {
    Record rec;
    Vec v(k);
    std::size_t q = r;
    for (std::size_t i = 0; i < k; ++i) {
      v[i] = static_cast<double>(q % per_axis) / static_cast<double>(per_axis - 1);
      q /= per_axis;
      rec[schema.features[i].name] = v[i];
    }
    d.ids.push_back(std::to_string(r));
    d.rows.push_back(rec);
    d.labels.push_back(label_of(v));
  }
  return EncodedDataset(std::move(d), CategoricalEncoding::one_hot);
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace evenif::fixture
