#include "evenif/action_space.hpp"

#include <algorithm>
#include <cmath>

#include "evenif/error.hpp"

namespace evenif {

namespace {

constexpr double kNoChange = 1e-9;

Bounds directed(double origin, double lo, double hi, Direction dir,
                std::optional<double> max_step) {
  Bounds b{std::min(lo, origin), std::max(hi, origin)};
  if (dir == Direction::increase) b.lo = origin;
  if (dir == Direction::decrease) b.hi = origin;
  if (max_step) {
    b.lo = std::max(b.lo, origin - *max_step);
    b.hi = std::min(b.hi, origin + *max_step);
  }
  return b;
}

}  // namespace

ActionSpace::ActionSpace(const Encoder& encoder, const FeatureSchema& constraints,
                         std::span<const double> x)
    : encoder_(&encoder), constraints_(constraints), x_(x.begin(), x.end()) {
  if (x.size() != encoder.width())
    throw ValidationError("individual width does not match schema");
  if (constraints.size() != encoder.schema().size())
    throw ValidationError("constraint schema does not match encoder schema");
  bool any_room = false;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const FeatureSpec& f = constraints.features[i];
    if (!f.actionable || f.direction == Direction::frozen) continue;
    const Slot& slot = encoder.slots()[i];
    Gene g;
    g.feature = i;
    g.coord = slot.offset;
    if (slot.categorical && encoder.encoding() == CategoricalEncoding::one_hot) {
      g.discrete = true;
      g.origin = encoder.level_of(i, x);
      const double lo = f.bounds ? f.bounds->lo : 0.0;
      const double hi =
          f.bounds ? f.bounds->hi : static_cast<double>(slot.n_levels - 1);
      const Bounds b = directed(g.origin, std::ceil(lo), std::floor(hi),
                                f.direction, f.max_delta);
      g.lo = std::ceil(b.lo);
      g.hi = std::floor(b.hi);
    } else {
      g.origin = x[slot.offset];
      double lo = 0.0;
      double hi = 1.0;
      if (f.bounds) {
        lo = encoder.scale(i, f.bounds->lo);
        hi = encoder.scale(i, f.bounds->hi);
      }
      std::optional<double> step;
      if (f.max_delta) step = *f.max_delta / slot.span;
      const Bounds b = directed(g.origin, lo, hi, f.direction, step);
      g.lo = b.lo;
      g.hi = b.hi;
    }
    any_room = any_room || !g.degenerate();
    genes_.push_back(g);
  }
  if (genes_.empty()) throw EmptyActionSpace("no actionable features");
  if (!any_room)
    throw EmptyActionSpace("every actionable feature is already at its limit");
}

Vec ActionSpace::origin() const {
  Vec v(genes_.size());
  for (std::size_t g = 0; g < genes_.size(); ++g) v[g] = genes_[g].origin;
  return v;
}

Vec ActionSpace::sample(Rng& rng) const {
  Vec v(genes_.size());
  for (int attempt = 0; attempt < 64; ++attempt) {
    for (std::size_t g = 0; g < genes_.size(); ++g) {
      const Gene& gene = genes_[g];
      if (gene.degenerate()) {
        v[g] = gene.lo;
      } else if (gene.discrete) {
        std::uniform_int_distribution<int> d(static_cast<int>(gene.lo),
                                             static_cast<int>(gene.hi));
        v[g] = d(rng);
      } else {
        std::uniform_real_distribution<double> d(gene.lo, gene.hi);
        v[g] = d(rng);
      }
    }
    if (!is_no_change(v)) return v;
  }
  // Tiny intervals: step a movable gene to the far end of its interval.
  for (std::size_t g = 0; g < genes_.size(); ++g) {
    const Gene& gene = genes_[g];
    if (gene.degenerate()) continue;
    v[g] = gene.hi - gene.origin > gene.origin - gene.lo ? gene.hi : gene.lo;
    break;
  }
  return v;
}

Vec ActionSpace::clip(std::span<const double> values) const {
  Vec v(values.begin(), values.end());
  for (std::size_t g = 0; g < genes_.size(); ++g) {
    const Gene& gene = genes_[g];
    double val = gene.discrete ? std::round(v[g]) : v[g];
    v[g] = std::clamp(val, gene.lo, gene.hi);
  }
  return v;
}

bool ActionSpace::contains(std::span<const double> values, double tol) const {
  if (values.size() != genes_.size()) return false;
  for (std::size_t g = 0; g < genes_.size(); ++g) {
    const Gene& gene = genes_[g];
    if (values[g] < gene.lo - tol || values[g] > gene.hi + tol) return false;
    if (gene.discrete && std::abs(values[g] - std::round(values[g])) > tol)
      return false;
  }
  return true;
}

bool ActionSpace::is_no_change(std::span<const double> values) const {
  double delta = 0.0;
  for (std::size_t g = 0; g < genes_.size(); ++g)
    delta = std::max(delta, std::abs(values[g] - genes_[g].origin));
  return delta < kNoChange;
}

Vec ActionSpace::apply(std::span<const double> values) const {
  Vec theta = x_;
  const auto& slots = encoder_->slots();
  for (std::size_t g = 0; g < genes_.size(); ++g) {
    const Gene& gene = genes_[g];
    if (gene.discrete) {
      const Slot& s = slots[gene.feature];
      std::fill_n(theta.begin() + static_cast<long>(s.offset), s.width, 0.0);
      theta[s.offset + static_cast<std::size_t>(std::lround(values[g]))] = 1.0;
    } else {
      theta[gene.coord] = values[g];
    }
  }
  return theta;
}

Vec ActionSpace::values_of(std::span<const double> encoded) const {
  Vec v(genes_.size());
  for (std::size_t g = 0; g < genes_.size(); ++g) {
    const Gene& gene = genes_[g];
    v[g] = gene.discrete ? encoder_->level_of(gene.feature, encoded)
                         : encoded[gene.coord];
  }
  return v;
}

Bounds ActionSpace::raw_interval(std::size_t g) const {
  const Gene& gene = genes_[g];
  if (gene.discrete) return {gene.lo, gene.hi};
  return {encoder_->unscale(gene.feature, gene.lo),
          encoder_->unscale(gene.feature, gene.hi)};
}

}  // namespace evenif
