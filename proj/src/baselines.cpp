#include "evenif/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "evenif/error.hpp"
#include "evenif/sgen.hpp"

namespace evenif {

BaselineKind baseline_from_string(const std::string& s) {
  if (s == "dice_star" || s == "dice") return BaselineKind::dice_star;
  if (s == "piece_star" || s == "piece") return BaselineKind::piece_star;
  if (s == "dser_star" || s == "dser") return BaselineKind::dser_star;
  if (s == "karimi_star" || s == "karimi") return BaselineKind::karimi_star;
  if (s == "dominguez_star" || s == "dominguez") return BaselineKind::dominguez_star;
  throw ValidationError("unknown method '" + s + "'", "method");
}

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::dice_star:
      return "dice_star";
    case BaselineKind::piece_star:
      return "piece_star";
    case BaselineKind::dser_star:
      return "dser_star";
    case BaselineKind::karimi_star:
      return "karimi_star";
    case BaselineKind::dominguez_star:
      return "dominguez_star";
  }
  return "dice_star";
}

BaselineConfig BaselineConfig::from_json(const json& j, BaselineConfig c) {
  if (j.is_null()) return c;
  try {
    if (j.contains("objective")) c.objective = ObjectiveConfig::from_json(j["objective"], c.objective);
    c.dice_candidates = j.value("dice_candidates", c.dice_candidates);
    c.dser_iterations = j.value("dser_iterations", c.dser_iterations);
    c.step = j.value("step", c.step);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.probe_iterations = j.value("probe_iterations", c.probe_iterations);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad baseline config: ") + e.what());
  }
  return c;
}

json BaselineConfig::to_json() const {
  return {{"objective", objective.to_json()}, {"dice_candidates", dice_candidates},
          {"dser_iterations", dser_iterations}, {"step", step},
          {"max_steps", max_steps}, {"probe_iterations", probe_iterations}};
}

namespace {

ExplanationItem make_item(const ActionSpace& space, const Predictor& model,
                          const Vec& values, const Scm* scm,
                          const std::vector<Vec>* data, const ObjectiveConfig& cfg,
                          Rng& rng) {
  ExplanationItem it;
  it.action = values;
  it.theta = semifactual_state(space, values, scm);
  it.score = model.score(it.theta);
  it.robust_label = model.label(it.theta);
  it.gain = gated_gain(space.x(), it.theta, space.encoder(), space.constraints(),
                       cfg.gain_norm);
  it.plausibility =
      data && !data->empty() ? plausibility_empirical(it.theta, *data, cfg.gamma_p) : 1.0;
  const auto samples = sample_neighborhood(it.theta, space.encoder(), cfg.epsilon,
                                           cfg.n_mc, cfg.neighborhood_norm, rng);
  it.robustness_mc = robustness_probabilistic(model, 1, samples, model.psi() + cfg.margin);
  return it;
}

void fill_to_m(ExplanationSet& out, std::size_t m, Rng& rng) {
  if (out.items.empty()) return;
  const std::size_t found = out.items.size();
  std::uniform_int_distribution<std::size_t> pick(0, found - 1);
  while (out.items.size() < m) out.items.push_back(out.items[pick(rng)]);
}

// Gene values on the segment from the origin towards `target`.
Vec interpolate(const ActionSpace& space, const Vec& target, double t) {
  const Vec o = space.origin();
  Vec v(o.size());
  for (std::size_t g = 0; g < o.size(); ++g) {
    v[g] = o[g] + t * (target[g] - o[g]);
    if (space.genes()[g].discrete) v[g] = std::round(v[g]);
  }
  return space.clip(v);
}

void require_positive(const ActionSpace& space, const Predictor& model) {
  if (model.label(space.x()) != 1) throw NotPositiveOutcome();
}

void flag_if_unchanged(ExplanationSet& out, const ActionSpace& space) {
  if (std::all_of(out.items.begin(), out.items.end(),
                  [&](const ExplanationItem& it) { return space.is_no_change(it.action); }))
    out.no_effective_semifactual = true;
}

}  // namespace

// ------------------------------------------------------------------- DiCE*

ExplanationSet dice_star(const ActionSpace& space, const Predictor& model,
                         const std::vector<Vec>* data, std::size_t m,
                         const BaselineConfig& cfg, std::uint64_t seed) {
  if (m < 1) throw ValidationError("m must be >= 1", "m");
  require_positive(space, model);
  Rng rng(seed);
  ExplanationSet out;
  out.method = "dice_star";
  out.seed = seed;
  out.m = m;
  out.config = cfg.to_json();

  // Counterfactuals: random feasible actions that flip the label, shrunk
  // towards x by bisection.
  struct Cf {
    Vec values;
    Vec theta;
  };
  std::vector<Cf> cfs;
  for (int i = 0; i < cfg.dice_candidates; ++i) {
    const Vec a = space.sample(rng);
    if (model.label(space.apply(a)) != 0) continue;
    double lo = 0.0, hi = 1.0;
    for (int b = 0; b < 30; ++b) {
      const double mid = 0.5 * (lo + hi);
      if (model.label(space.apply(interpolate(space, a, mid))) == 0)
        hi = mid;
      else
        lo = mid;
    }
    Vec v = interpolate(space, a, hi);
    Vec theta = space.apply(v);
    if (model.label(theta) == 0) cfs.push_back({std::move(v), std::move(theta)});
  }

  if (cfs.empty()) {
    out.warnings.push_back("no counterfactual found; falling back to a minimal step");
    Vec v = space.origin();
    for (std::size_t g = 0; g < space.size(); ++g) {
      const Gene& gene = space.genes()[g];
      if (gene.degenerate()) continue;
      const double room_up = gene.hi - gene.origin;
      const double dir = room_up >= gene.origin - gene.lo ? 1.0 : -1.0;
      v[g] = gene.origin + dir * (gene.discrete ? 1.0 : 0.01 * (gene.hi - gene.lo));
      break;
    }
    v = space.clip(v);
    if (model.label(space.apply(v)) != 1) {
      v = space.origin();
      out.no_effective_semifactual = true;
    }
    out.items.push_back(make_item(space, model, v, nullptr, data, cfg.objective, rng));
    fill_to_m(out, m, rng);
    out.diversity = diversity(out.states());
    return out;
  }

  // Diverse subset: nearest counterfactual first, then farthest-point picks.
  std::vector<std::size_t> chosen;
  {
    std::size_t first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cfs.size(); ++i) {
      const double d = distance(cfs[i].theta, space.x(), Norm::l2);
      if (d < best) {
        best = d;
        first = i;
      }
    }
    chosen.push_back(first);
    std::vector<double> gap(cfs.size(), std::numeric_limits<double>::infinity());
    while (chosen.size() < std::min(m, cfs.size())) {
      const Vec& last = cfs[chosen.back()].theta;
      std::size_t arg = 0;
      double far = -1.0;
      for (std::size_t i = 0; i < cfs.size(); ++i) {
        gap[i] = std::min(gap[i], distance(cfs[i].theta, last, Norm::l2));
        if (gap[i] > far) {
          far = gap[i];
          arg = i;
        }
      }
      if (far <= 1e-12) break;
      chosen.push_back(arg);
    }
  }

  // Second pass: from each counterfactual, step back towards x until the
  // label returns to 1.
  for (std::size_t idx : chosen) {
    const Vec& cf = cfs[idx].values;
    Vec found = space.origin();
    for (int k = 99; k >= 0; --k) {
      const Vec v = interpolate(space, cf, k / 100.0);
      if (model.label(space.apply(v)) == 1) {
        found = v;
        break;
      }
    }
    out.items.push_back(make_item(space, model, found, nullptr, data, cfg.objective, rng));
  }
  if (out.items.size() < m) {
    out.warnings.push_back("fewer distinct counterfactuals than m; duplicates added");
    fill_to_m(out, m, rng);
  }
  flag_if_unchanged(out, space);
  out.diversity = diversity(out.states());
  return out;
}

// ------------------------------------------------------------------ PIECE*

std::vector<PieceFeature> piece_plan(const ActionSpace& space,
                                     const std::vector<Vec>& rows,
                                     std::vector<std::string>* warnings) {
  const Encoder& enc = space.encoder();
  std::vector<PieceFeature> plan;
  if (rows.empty()) {
    if (warnings) warnings->push_back("no training rows in the counterfactual class");
    return plan;
  }
  const double n = static_cast<double>(rows.size());
  for (std::size_t g = 0; g < space.size(); ++g) {
    const Gene& gene = space.genes()[g];
    const Slot& slot = enc.slots()[gene.feature];
    const std::string& name = enc.schema().features[gene.feature].name;
    PieceFeature pf;
    pf.gene = g;
    if (slot.categorical) {
      std::vector<double> counts(slot.n_levels, 0.0);
      for (const Vec& r : rows) counts[static_cast<std::size_t>(enc.level_of(gene.feature, r))] += 1;
      const auto level_x = static_cast<std::size_t>(enc.level_of(gene.feature, space.x()));
      pf.probability = counts[level_x] / n;
      const auto mode = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      pf.expected = gene.discrete ? static_cast<double>(mode)
                                  : static_cast<double>(mode) / slot.span;
    } else {
      double mean = 0.0, var = 0.0;
      for (const Vec& r : rows) mean += std::clamp(r[slot.offset], 1e-6, 1.0 - 1e-6);
      mean /= n;
      for (const Vec& r : rows) {
        const double d = std::clamp(r[slot.offset], 1e-6, 1.0 - 1e-6) - mean;
        var += d * d;
      }
      var /= n;
      const double common = var > 1e-12 ? mean * (1.0 - mean) / var - 1.0 : -1.0;
      if (!(common > 0)) {
        if (warnings) warnings->push_back("beta fit failed for '" + name + "'; skipped");
        continue;
      }
      const double alpha = mean * common;
      const double beta = (1.0 - mean) * common;
      const double xv = std::clamp(space.x()[slot.offset], 1e-6, 1.0 - 1e-6);
      const double cdf = boost::math::ibeta(alpha, beta, xv);
      pf.probability = std::min(cdf, 1.0 - cdf);
      pf.expected = mean;
    }
    Vec probe = space.origin();
    probe[g] = pf.expected;
    pf.expected = space.clip(probe)[g];
    plan.push_back(pf);
  }
  std::stable_sort(plan.begin(), plan.end(), [](const PieceFeature& a, const PieceFeature& b) {
    return a.probability < b.probability;
  });
  return plan;
}

ExplanationSet piece_star(const ActionSpace& space, const Predictor& model,
                          const std::vector<Vec>& train, std::size_t m,
                          const BaselineConfig& cfg, std::uint64_t seed) {
  if (m < 1) throw ValidationError("m must be >= 1", "m");
  require_positive(space, model);
  Rng rng(seed);
  ExplanationSet out;
  out.method = "piece_star";
  out.seed = seed;
  out.m = m;
  out.config = cfg.to_json();

  std::vector<Vec> cf_rows;
  for (const Vec& r : train)
    if (model.label(r) == 0) cf_rows.push_back(r);
  const auto plan = piece_plan(space, cf_rows, &out.warnings);

  Vec values = space.origin();
  for (const PieceFeature& pf : plan) {
    if (std::abs(values[pf.gene] - pf.expected) < 1e-12) continue;
    Vec trial = values;
    trial[pf.gene] = pf.expected;
    if (model.label(space.apply(trial)) != 1) break;
    values = std::move(trial);
  }
  if (space.is_no_change(values)) out.no_effective_semifactual = true;
  out.items.push_back(make_item(space, model, values, nullptr, &train, cfg.objective, rng));
  fill_to_m(out, m, rng);
  out.diversity = diversity(out.states());
  return out;
}

// ------------------------------------------------------------------- DSER*

std::size_t project_block(std::span<const double> block) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < block.size(); ++i)
    if (block[i] > block[best]) best = i;
  return best;
}

namespace {

// Relaxed search state: one-hot blocks of actionable categorical features are
// real vectors in [0,1]; levels outside the feasible range are pinned to 0.
struct Relaxed {
  const ActionSpace* space;
  std::vector<std::size_t> coords;     // encoded coordinates being optimised
  std::vector<Bounds> box;

  explicit Relaxed(const ActionSpace& s) : space(&s) {
    const auto& slots = s.encoder().slots();
    for (const Gene& g : s.genes()) {
      if (g.degenerate()) continue;
      if (g.discrete) {
        const Slot& sl = slots[g.feature];
        for (std::size_t l = 0; l < sl.width; ++l) {
          coords.push_back(sl.offset + l);
          const bool allowed = l >= g.lo && l <= g.hi;
          box.push_back({0.0, allowed ? 1.0 : 0.0});
        }
      } else {
        coords.push_back(g.coord);
        box.push_back({g.lo, g.hi});
      }
    }
  }

  Vec clip(Vec z) const {
    for (std::size_t k = 0; k < coords.size(); ++k)
      z[coords[k]] = std::clamp(z[coords[k]], box[k].lo, box[k].hi);
    return z;
  }

  // Gene values after projecting every block onto its nearest level.
  Vec project(const Vec& z) const {
    const auto& slots = space->encoder().slots();
    Vec v(space->size());
    for (std::size_t g = 0; g < space->size(); ++g) {
      const Gene& gene = space->genes()[g];
      if (gene.discrete) {
        const Slot& sl = slots[gene.feature];
        std::size_t best = static_cast<std::size_t>(gene.lo);
        for (std::size_t l = best; l <= static_cast<std::size_t>(gene.hi); ++l)
          if (z[sl.offset + l] > z[sl.offset + best]) best = l;
        v[g] = static_cast<double>(best);
      } else {
        v[g] = z[gene.coord];
      }
    }
    return space->clip(v);
  }
};

double dser_objective(const Vec& z, const Vec& x, const std::vector<Vec>& found) {
  double obj = distance(z, x, Norm::l2);
  if (!found.empty()) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const Vec& s : found) nearest = std::min(nearest, distance(z, s, Norm::l2));
    obj += nearest;
  }
  return obj;
}

}  // namespace

ExplanationSet dser_star(const ActionSpace& space, const Predictor& model,
                         const std::vector<Vec>* data, std::size_t m,
                         const BaselineConfig& cfg, std::uint64_t seed) {
  if (m < 1) throw ValidationError("m must be >= 1", "m");
  require_positive(space, model);
  Rng rng(seed);
  ExplanationSet out;
  out.method = "dser_star";
  out.seed = seed;
  out.m = m;
  out.config = cfg.to_json();

  const Relaxed relaxed(space);
  const Vec& x = space.x();
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Vec> found;
  for (std::size_t k = 0; k < m; ++k) {
    Vec z = x;
    double obj = dser_objective(z, x, found);
    for (int it = 0; it < cfg.dser_iterations; ++it) {
      const double sigma =
          0.1 * std::pow(0.05, static_cast<double>(it) / std::max(1, cfg.dser_iterations));
      Vec prop = z;
      for (std::size_t c : relaxed.coords) prop[c] += sigma * n01(rng);
      prop = relaxed.clip(std::move(prop));
      if (model.label(prop) != 1) {
        // Furthest positive point on the segment towards the proposal.
        double lo = 0.0, hi = 1.0;
        for (int b = 0; b < 8; ++b) {
          const double mid = 0.5 * (lo + hi);
          Vec p = z;
          for (std::size_t c : relaxed.coords) p[c] += mid * (prop[c] - z[c]);
          if (model.label(p) == 1)
            lo = mid;
          else
            hi = mid;
        }
        Vec p = z;
        for (std::size_t c : relaxed.coords) p[c] += lo * (prop[c] - z[c]);
        prop = std::move(p);
      }
      const double cand = dser_objective(prop, x, found);
      if (cand > obj) {
        z = std::move(prop);
        obj = cand;
      }
    }
    // Project the relaxed optimum; back off towards x if that crosses.
    Vec values = relaxed.project(z);
    if (model.label(space.apply(values)) != 1) {
      double lo = 0.0, hi = 1.0;
      for (int b = 0; b < 20; ++b) {
        const double mid = 0.5 * (lo + hi);
        Vec p = x;
        for (std::size_t c : relaxed.coords) p[c] += mid * (z[c] - x[c]);
        if (model.label(space.apply(relaxed.project(p))) == 1)
          lo = mid;
        else
          hi = mid;
      }
      Vec p = x;
      for (std::size_t c : relaxed.coords) p[c] += lo * (z[c] - x[c]);
      values = relaxed.project(p);
      if (model.label(space.apply(values)) != 1) values = space.origin();
    }
    auto item = make_item(space, model, values, nullptr, data, cfg.objective, rng);
    found.push_back(item.theta);
    out.items.push_back(std::move(item));
  }
  flag_if_unchanged(out, space);
  out.diversity = diversity(out.states());
  return out;
}

// ------------------------------------------------------- Karimi*, Dominguez*

double worst_case_score(const Predictor& model, const Encoder& encoder,
                        std::span<const double> theta, double epsilon,
                        int iterations) {
  const auto& coords = encoder.real_coords();
  std::vector<Bounds> box;
  for (std::size_t c : coords) box.push_back(encoder.coord_bounds(c));
  auto at = [&](const Vec& delta) {
    Vec p(theta.begin(), theta.end());
    for (std::size_t k = 0; k < coords.size(); ++k)
      p[coords[k]] = std::clamp(p[coords[k]] + delta[k], box[k].lo, box[k].hi);
    return p;
  };
  auto descent = [&](const Vec& point) {
    const Vec g = model.gradient(point);
    Vec d(coords.size());
    for (std::size_t k = 0; k < coords.size(); ++k) d[k] = -g[coords[k]];
    const double nrm = norm(d, Norm::l2);
    if (nrm > 0)
      for (double& v : d) v /= nrm;
    return d;
  };
  double worst = model.score(theta);
  Vec delta = descent(Vec(theta.begin(), theta.end()));
  for (double& v : delta) v *= epsilon;
  for (int it = 0; it <= iterations; ++it) {
    const Vec p = at(delta);
    worst = std::min(worst, model.score(p));
    if (it == iterations) break;
    const Vec d = descent(p);
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] += 0.25 * epsilon * d[k];
    const double r = norm(delta, Norm::l2);
    if (r > epsilon)
      for (double& v : delta) v *= epsilon / r;
  }
  return worst;
}

ExplanationSet causal_walk(const ActionSpace& space, const Predictor& model,
                           const Scm& scm, bool robust, const BaselineConfig& cfg,
                           std::uint64_t seed) {
  require_positive(space, model);
  if (scm.size() != space.encoder().width())
    throw ValidationError("SCM is not bound to the dataset encoding", "scm");
  for (const Gene& g : space.genes())
    if (g.discrete)
      throw ValidationError("causal baselines need real-valued actionable features",
                            space.encoder().schema().features[g.feature].name);
  Rng rng(seed);
  const ObjectiveConfig& oc = cfg.objective;
  ExplanationSet out;
  out.method = robust ? "dominguez_star" : "karimi_star";
  out.seed = seed;
  out.config = cfg.to_json();

  auto crosses = [&](const Vec& theta) {
    if (model.label(theta) != 1) return true;
    return robust && !(worst_case_score(model, space.encoder(), theta, oc.epsilon,
                                        cfg.probe_iterations) > model.psi());
  };

  const auto subsets = actionable_subsets(space);
  out.m = subsets.size();
  const bool start_fails = crosses(space.x());
  if (start_fails) {
    out.warnings.push_back("x is already within epsilon of the decision boundary");
    out.no_effective_semifactual = true;
  }
  for (const auto& subset : subsets) {
    Vec values = space.origin();
    if (!start_fails) {
      std::vector<std::size_t> coords;
      for (std::size_t g : subset) coords.push_back(space.genes()[g].coord);
      const auto J = scm.jacobian(coords);
      Vec theta = space.x();
      for (int s = 0; s < cfg.max_steps; ++s) {
        const Vec gh = model.gradient(theta);
        Vec ga(subset.size(), 0.0);
        for (std::size_t c = 0; c < subset.size(); ++c)
          for (std::size_t i = 0; i < gh.size(); ++i) ga[c] += J[i][c] * gh[i];
        const double nrm = norm(ga, Norm::l2);
        if (nrm < 1e-12) break;
        Vec next = values;
        for (std::size_t c = 0; c < subset.size(); ++c)
          next[subset[c]] -= cfg.step * ga[c] / nrm;
        next = space.clip(next);
        if (distance(next, values, Norm::linf) < 1e-12) break;
        Vec next_theta = semifactual_state(space, next, &scm);
        if (crosses(next_theta)) break;
        values = std::move(next);
        theta = std::move(next_theta);
      }
    }
    out.items.push_back(make_item(space, model, values, &scm, nullptr, oc, rng));
  }
  flag_if_unchanged(out, space);
  out.diversity = diversity(out.states());
  return out;
}

}  // namespace evenif
