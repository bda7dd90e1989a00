#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evenif/encoder.hpp"
#include "evenif/linalg.hpp"

namespace evenif {

// x_i := intercept + sum_j weights[j] * x_{parents[j]} + u_i
struct ScmNode {
  std::string name;
  std::vector<std::size_t> parents;
  Vec weights;
  double intercept = 0.0;
  // Standard deviation of u_i; only used to synthesize data.
  double noise = 1.0;
};

// do(X_node := value)
using Intervention = std::pair<std::size_t, double>;

// Linear additive-noise structural causal model over an ordered node list.
class Scm {
 public:
  Scm() = default;
  // Throws ValidationError on cycles, self loops, or bad parent indices.
  explicit Scm(std::vector<ScmNode> nodes);

  // {"nodes": [{"name", "parents": [names], "weights": [..], "intercept"}]}
  static Scm from_json(const json& j);
  json to_json() const;

  // Nodes with no edges at all.
  static Scm independent(std::vector<std::string> names);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<ScmNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  std::size_t index_of(const std::string& name) const;  // throws NotFound

  Vec abduct(std::span<const double> x) const;
  Vec push(std::span<const double> u) const;
  // Abduct u from x, sever and fix the intervened nodes, then re-evaluate the
  // rest in topological order.
  Vec process_semifactual(std::span<const double> x,
                          std::span<const Intervention> interventions) const;
  // d theta' / d theta_I as a size() x |I| matrix (row-major). Constant in
  // x and theta because the equations are linear.
  std::vector<Vec> jacobian(std::span<const std::size_t> intervened) const;

  // True when some non-intervened node descends from an intervened one
  // through a nonzero edge.
  bool has_active_descendants(std::span<const std::size_t> intervened) const;

  // Samples from the observational distribution, u_i ~ N(0, noise_i^2).
  std::vector<Vec> sample(std::size_t n, Rng& rng) const;

  // Re-expresses the model over an encoder's coordinates: one node per
  // coordinate, in encoder order. Features absent from this model become
  // roots; raw equations are rescaled to the encoder's [0,1] units. One-hot
  // categorical features may not take part in an equation.
  Scm bind(const Encoder& encoder) const;

 private:
  std::vector<ScmNode> nodes_;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> children_;
};

Scm load_scm(const std::string& path);

}  // namespace evenif
