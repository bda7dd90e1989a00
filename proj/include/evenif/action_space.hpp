#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evenif/encoder.hpp"

namespace evenif {

// One actionable feature. Real-valued genes hold the scaled coordinate value;
// one-hot categorical genes (`discrete`) hold a level index.
struct Gene {
  std::size_t feature = 0;
  std::size_t coord = 0;
  bool discrete = false;
  double lo = 0.0;
  double hi = 0.0;
  double origin = 0.0;

  bool degenerate() const noexcept { return hi - lo < 1e-9; }
};

// do(X_I := theta_I) over the actionable features I. `values` is indexed like
// ActionSpace::genes().
struct Action {
  enum class Provenance { generated, user_specified };
  Vec values;
  Provenance provenance = Provenance::generated;
};

// Feasible actions for one individual: per-feature intervals that honour the
// configured bounds, direction and max_delta relative to x.
class ActionSpace {
 public:
  // `constraints` carries actionability (possibly overridden per request);
  // `encoder` fixes the layout. Throws EmptyActionSpace when no feature can
  // move.
  ActionSpace(const Encoder& encoder, const FeatureSchema& constraints,
              std::span<const double> x);

  const std::vector<Gene>& genes() const noexcept { return genes_; }
  std::size_t size() const noexcept { return genes_.size(); }
  const Vec& x() const noexcept { return x_; }
  const Encoder& encoder() const noexcept { return *encoder_; }
  const FeatureSchema& constraints() const noexcept { return constraints_; }

  Vec origin() const;
  // Uniform over the feasible box; never returns the no-change action.
  Vec sample(Rng& rng) const;
  Vec clip(std::span<const double> values) const;
  bool contains(std::span<const double> values, double tol = 1e-9) const;
  // Max per-gene change below 1e-9.
  bool is_no_change(std::span<const double> values) const;

  // Non-causal substitution: x with the actionable features replaced.
  Vec apply(std::span<const double> values) const;
  // Gene values read back from an encoded vector (argmax for one-hot blocks).
  Vec values_of(std::span<const double> encoded) const;

  // Interval of gene g expressed in raw units (level indices for categorical).
  Bounds raw_interval(std::size_t g) const;

 private:
  const Encoder* encoder_;
  FeatureSchema constraints_;
  Vec x_;
  std::vector<Gene> genes_;
};

}  // namespace evenif
