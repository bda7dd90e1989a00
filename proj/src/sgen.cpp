#include "evenif/sgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "evenif/error.hpp"

namespace evenif {

int GaConfig::population_for(std::size_t m) const {
  return population > 0 ? population : static_cast<int>(12 * m);
}

void GaConfig::validate(std::size_t m) const {
  if (m < 1) throw ValidationError("m must be >= 1", "m");
  if (generations < 0) throw ValidationError("generations must be >= 0", "generations");
  const int pop = population_for(m);
  if (pop < static_cast<int>(m))
    throw ValidationError("population must be >= m", "population");
  if (elites < 0 || elites >= pop)
    throw ValidationError("elites must be below the population size", "elites");
  if (mutation_rate < 0 || mutation_rate > 1)
    throw ValidationError("mutation_rate must lie in [0,1]", "mutation_rate");
  if (crossover_prob < 0 || crossover_prob > 1)
    throw ValidationError("crossover_prob must lie in [0,1]", "crossover_prob");
  if (tournament < 1) throw ValidationError("tournament must be >= 1", "tournament");
}

GaConfig GaConfig::from_json(const json& j, GaConfig c) {
  if (j.is_null()) return c;
  try {
    c.generations = j.value("generations", c.generations);
    c.population = j.value("population", c.population);
    c.mutation_rate = j.value("mutation_rate", c.mutation_rate);
    c.elites = j.value("elites", c.elites);
    c.crossover_prob = j.value("crossover_prob", c.crossover_prob);
    c.sigma_factor = j.value("sigma_factor", c.sigma_factor);
    c.tournament = j.value("tournament", c.tournament);
    c.unique_tol = j.value("unique_tol", c.unique_tol);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad GA config: ") + e.what());
  }
  return c;
}

json GaConfig::to_json() const {
  return {{"generations", generations}, {"population", population},
          {"mutation_rate", mutation_rate}, {"elites", elites},
          {"crossover_prob", crossover_prob}, {"sigma_factor", sigma_factor},
          {"tournament", tournament}, {"unique_tol", unique_tol}};
}

void CausalConfig::validate() const {
  if (!(tau > 0)) throw ValidationError("tau must be > 0", "tau");
  if (lambda0 < 0) throw ValidationError("lambda0 must be >= 0", "lambda0");
  if (eta < 0 || eta > 1) throw ValidationError("eta must lie in [0,1]", "eta");
  if (max_iter < 0) throw ValidationError("max_iter must be >= 0", "max_iter");
}

CausalConfig CausalConfig::from_json(const json& j, CausalConfig c) {
  if (j.is_null()) return c;
  try {
    c.tau = j.value("tau", c.tau);
    c.lambda0 = j.value("lambda0", c.lambda0);
    c.eta = j.value("eta", c.eta);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.tol = j.value("tol", c.tol);
    c.init_fraction = j.value("init_fraction", c.init_fraction);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad causal config: ") + e.what());
  }
  c.validate();
  return c;
}

json CausalConfig::to_json() const {
  return {{"tau", tau}, {"lambda0", lambda0}, {"eta", eta},
          {"max_iter", max_iter}, {"tol", tol}, {"init_fraction", init_fraction}};
}

ObjectiveConfig causal_objective_defaults() {
  ObjectiveConfig c;
  c.gain_norm = Norm::l1;
  return c;
}

Vec project_action(std::span<const double> values, const ActionSpace& space) {
  return space.clip(values);
}

namespace {

struct Member {
  std::vector<Vec> actions;
  std::vector<Objective::Item> items;
  double fitness = 0.0;
};

// Every candidate sees the same Monte Carlo neighbourhood offsets (common
// random numbers), so H_p differences reflect the candidates, not the draws.
void evaluate(Member& mem, const Objective& obj, std::uint64_t mc_seed) {
  mem.items.clear();
  std::vector<ItemTerms> terms;
  std::vector<Vec> states;
  for (const Vec& a : mem.actions) {
    Rng mc(mc_seed);
    mem.items.push_back(obj.evaluate(a, mc));
    terms.push_back(mem.items.back().terms);
    states.push_back(mem.items.back().theta);
  }
  mem.fitness = fitness(terms, diversity(states), obj.config());
}

std::vector<std::size_t> ranking(const std::vector<Member>& pop) {
  std::vector<std::size_t> idx(pop.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pop[a].fitness > pop[b].fitness;
  });
  return idx;
}

double linf(std::span<const double> a, std::span<const double> b) {
  return distance(a, b, Norm::linf);
}

ExplanationItem to_item(const Objective::Item& it, const ObjectiveConfig& cfg) {
  ExplanationItem e;
  e.action = it.values;
  e.theta = it.theta;
  e.gain = it.terms.gain;
  e.plausibility = it.terms.plausibility;
  e.robustness_mc = it.terms.h_p;
  e.robust_label = it.terms.h_a > 0.5 ? 1 : 0;
  e.score = it.score;
  e.objective = item_score(it.terms, cfg);
  return e;
}

void complement(std::vector<ExplanationItem>& items, std::size_t m, Rng& rng) {
  const std::size_t found = items.size();
  std::uniform_int_distribution<std::size_t> pick(0, found - 1);
  while (items.size() < m) items.push_back(items[pick(rng)]);
}

}  // namespace

ExplanationSet explain_noncausal(const ActionSpace& space, const Predictor& model,
                                 const std::vector<Vec>* data, std::size_t m,
                                 const ObjectiveConfig& cfg, const GaConfig& ga,
                                 std::uint64_t seed, const Deadline& deadline,
                                 GaTrace* trace) {
  ga.validate(m);
  cfg.validate();
  if (model.label(space.x()) != 1) throw NotPositiveOutcome();
  const Objective obj(model, space, cfg, data, nullptr);
  Rng rng(seed);
  const std::uint64_t mc_seed = rng();
  const int pop_size = ga.population_for(m);
  const auto& genes = space.genes();

  std::vector<Member> pop(static_cast<std::size_t>(pop_size));
  for (auto& mem : pop) {
    for (std::size_t k = 0; k < m; ++k) mem.actions.push_back(space.sample(rng));
    evaluate(mem, obj, mc_seed);
  }
  auto best_of = [](const std::vector<Member>& p) {
    double b = -std::numeric_limits<double>::infinity();
    for (const auto& mem : p) b = std::max(b, mem.fitness);
    return b;
  };
  if (trace) trace->best_fitness = {best_of(pop)};

  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, pop.size() - 1);
  auto tournament = [&]() -> const Member& {
    std::size_t best = any(rng);
    for (int t = 1; t < ga.tournament; ++t) {
      const std::size_t c = any(rng);
      if (pop[c].fitness > pop[best].fitness) best = c;
    }
    return pop[best];
  };

  for (int gen = 0; gen < ga.generations; ++gen) {
    deadline.check();
    const auto order = ranking(pop);
    std::vector<Member> next;
    next.reserve(pop.size());
    for (int e = 0; e < ga.elites; ++e) next.push_back(pop[order[e]]);
    while (next.size() < pop.size()) {
      const Member& a = tournament();
      const Member& b = tournament();
      Member child;
      child.actions = a.actions;
      if (u01(rng) < ga.crossover_prob) {
        for (std::size_t k = 0; k < m; ++k)
          for (std::size_t g = 0; g < genes.size(); ++g)
            if (u01(rng) < 0.5) child.actions[k][g] = b.actions[k][g];
      }
      for (auto& act : child.actions) {
        for (std::size_t g = 0; g < genes.size(); ++g) {
          const Gene& gene = genes[g];
          if (gene.degenerate()) continue;
          if (gene.discrete) {
            if (u01(rng) < ga.mutation_rate) {
              std::uniform_int_distribution<int> lvl(static_cast<int>(gene.lo),
                                                     static_cast<int>(gene.hi));
              act[g] = lvl(rng);
            }
          } else {
            act[g] += ga.sigma_factor * (gene.hi - gene.lo) * n01(rng);
          }
        }
        act = space.clip(act);
        if (space.is_no_change(act)) act = space.sample(rng);
      }
      evaluate(child, obj, mc_seed);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    if (trace) trace->best_fitness.push_back(best_of(pop));
  }

  // Candidates that keep the outcome with positive gain, best set first.
  struct Candidate {
    double set_fitness;
    double item_objective;
    const Objective::Item* item;
  };
  std::vector<Candidate> pool;
  std::size_t kept = 0, positive = 0, total = 0;
  for (const auto& mem : pop) {
    for (const auto& it : mem.items) {
      ++total;
      const bool keeps = it.terms.h_a > 0.5 && model.label(it.theta) == 1;
      kept += keeps;
      positive += it.terms.gain > 0;
      if (keeps && it.terms.gain > 0)
        pool.push_back({mem.fitness, item_score(it.terms, cfg), &it});
    }
  }
  std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
    if (a.set_fitness != b.set_fitness) return a.set_fitness > b.set_fitness;
    return a.item_objective > b.item_objective;
  });
  if (pool.empty()) {
    std::ostringstream os;
    os << total << " final candidates, " << kept << " kept the outcome, " << positive
       << " had positive gain";
    throw NoEffectiveSemifactual(os.str());
  }

  ExplanationSet out;
  out.method = "sgen";
  out.seed = seed;
  out.m = m;
  for (const auto& c : pool) {
    if (out.items.size() == m) break;
    const bool dup = std::any_of(out.items.begin(), out.items.end(), [&](const auto& e) {
      return linf(e.action, c.item->values) <= ga.unique_tol;
    });
    if (!dup) out.items.push_back(to_item(*c.item, cfg));
  }
  if (out.items.size() < m) {
    out.warnings.push_back("only " + std::to_string(out.items.size()) +
                           " distinct semifactuals found; duplicates added");
    complement(out.items, m, rng);
  }
  out.diversity = diversity(out.states());
  out.config = {{"objective", cfg.to_json()}, {"ga", ga.to_json()}};
  return out;
}

std::vector<std::vector<std::size_t>> actionable_subsets(const ActionSpace& space) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> all;
  for (std::size_t g = 0; g < space.size(); ++g) {
    if (space.genes()[g].degenerate()) continue;
    out.push_back({g});
    all.push_back(g);
  }
  if (all.size() > 1) out.push_back(all);
  return out;
}

namespace {

// Direction in which a gene's change counts as gain, falling back to the side
// with room when the preferred one is closed.
double gain_direction(const Gene& gene, Polarity p) {
  const double up = gene.hi - gene.origin;
  const double down = gene.origin - gene.lo;
  double dir = p == Polarity::positive ? 1.0 : p == Polarity::negative ? -1.0
                                                                       : (up >= down ? 1.0 : -1.0);
  if (dir > 0 && up <= 0) dir = -1.0;
  if (dir < 0 && down <= 0) dir = 1.0;
  return dir;
}

bool breached(const Predictor& model, std::span<const double> theta,
              const std::vector<Vec>& samples, double psi_tilde) {
  if (model.label(theta) != 1) return true;
  for (const Vec& s : samples)
    if (!(model.score(s) > psi_tilde)) return true;
  return false;
}

// d gain / d theta for the gated l1 or l2 magnitude. Where theta equals x the
// subgradient along `pref` (the gain direction of the moved coordinates) is used.
Vec gain_gradient(std::span<const double> x, std::span<const double> theta,
                  std::span<const double> pref, double gated, Norm norm) {
  Vec g(x.size(), 0.0);
  const double sign = gated < 0 ? -1.0 : 1.0;
  if (norm == Norm::l2) {
    const double d = distance(x, theta, Norm::l2);
    if (d > 0) {
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = sign * (theta[i] - x[i]) / d;
    } else {
      const double n = evenif::norm(pref, Norm::l2);
      if (n > 0)
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = pref[i] / n;
    }
  } else if (norm == Norm::l1) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = theta[i] - x[i];
      g[i] = d > 0 ? sign : d < 0 ? -sign : pref[i];
    }
  } else {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
      if (std::abs(theta[i] - x[i]) > std::abs(theta[arg] - x[arg])) arg = i;
    const double d = theta[arg] - x[arg];
    if (d != 0) {
      g[arg] = d > 0 ? sign : -sign;
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = pref[i];
    }
  }
  return g;
}

}  // namespace

ExplanationSet explain_causal(const ActionSpace& space, const Predictor& model,
                              const Scm& scm, const ObjectiveConfig& cfg,
                              const CausalConfig& cc, std::uint64_t seed,
                              const Deadline& deadline, CausalTrace* trace) {
  cfg.validate();
  cc.validate();
  if (scm.size() != space.encoder().width())
    throw ValidationError("SCM is not bound to the dataset encoding", "scm");
  if (model.label(space.x()) != 1) throw NotPositiveOutcome();
  const auto& genes = space.genes();
  for (const Gene& g : genes)
    if (g.discrete)
      throw ValidationError("the causal engine needs real-valued actionable features",
                            space.encoder().schema().features[g.feature].name);

  const auto subsets = actionable_subsets(space);
  const std::size_t m = subsets.size();
  const Vec& x = space.x();
  const double psi_tilde = model.psi() + cfg.margin;
  const FeatureSchema& constraints = space.constraints();
  Rng rng(seed);

  std::vector<ExplanationItem> found;
  for (const auto& subset : subsets) {
    deadline.check();
    CausalRun run;
    run.genes = subset;
    Vec values = space.origin();
    std::vector<std::size_t> coords;
    Vec pref(x.size(), 0.0);
    for (std::size_t g : subset) {
      const Gene& gene = genes[g];
      const double dir = gain_direction(gene, constraints.features[gene.feature].polarity);
      values[g] = gene.origin + dir * cc.init_fraction * (gene.hi - gene.lo);
      coords.push_back(gene.coord);
      pref[gene.coord] = dir;
    }
    values = space.clip(values);
    Vec theta = semifactual_state(space, values, &scm);
    auto samples = sample_neighborhood(theta, space.encoder(), cfg.epsilon, cfg.n_mc,
                                       cfg.neighborhood_norm, rng);
    if (space.is_no_change(values) || breached(model, theta, samples, psi_tilde)) {
      run.skipped = true;
      if (trace) trace->runs.push_back(run);
      continue;
    }
    const auto J = scm.jacobian(coords);
    double lambda = cc.lambda0;
    for (int it = 0; it < cc.max_iter; ++it) {
      deadline.check();
      const double gated = gated_gain(x, theta, space.encoder(), constraints, cfg.gain_norm);
      Vec grad = gain_gradient(x, theta, pref, gated, cfg.gain_norm);
      {
        const double s = std::clamp(model.score(theta), 1e-12, 1.0 - 1e-12);
        const Vec gh = model.gradient(theta);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += lambda * gh[i] / s;
      }
      const double wb = samples.empty() ? 0.0 : lambda / static_cast<double>(samples.size());
      for (const Vec& smp : samples) {
        const double s = std::clamp(model.score(smp), 1e-12, 1.0 - 1e-12);
        const Vec gh = model.gradient(smp);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += wb * gh[i] / s;
      }
      Vec next = values;
      for (std::size_t c = 0; c < subset.size(); ++c) {
        double ga = 0.0;
        for (std::size_t i = 0; i < grad.size(); ++i) ga += J[i][c] * grad[i];
        next[subset[c]] += cc.tau * ga;
      }
      next = space.clip(next);
      lambda *= cc.eta;
      run.iterations = it + 1;
      run.lambda = lambda;
      const double step = distance(next, values, Norm::l2);
      Vec next_theta = semifactual_state(space, next, &scm);
      auto next_samples = sample_neighborhood(next_theta, space.encoder(), cfg.epsilon,
                                              cfg.n_mc, cfg.neighborhood_norm, rng);
      if (breached(model, next_theta, next_samples, psi_tilde)) {
        run.breached = true;
        break;
      }
      values = std::move(next);
      theta = std::move(next_theta);
      samples = std::move(next_samples);
      if (step < cc.tol && !space.is_no_change(values)) break;
    }
    ExplanationItem item;
    item.action = values;
    item.theta = theta;
    item.gain = gated_gain(x, theta, space.encoder(), constraints, cfg.gain_norm);
    item.plausibility = 1.0;
    item.robustness_mc = robustness_probabilistic(model, 1, samples, psi_tilde);
    item.robust_label = model.label(theta);
    item.score = model.score(theta);
    std::vector<double> sample_scores;
    for (const Vec& s : samples) sample_scores.push_back(model.score(s));
    const JTerm term{item.score, sample_scores, lambda, item.gain};
    item.objective = objective_j(std::span<const JTerm>(&term, 1), 0.0, 0.0);
    if (trace) trace->runs.push_back(run);
    if (item.gain > 0 && item.robust_label == 1) found.push_back(std::move(item));
  }

  if (found.empty())
    throw NoEffectiveSemifactual("no actionable subset produced a semifactual that "
                                 "keeps the outcome with positive gain");
  ExplanationSet out;
  out.method = "sgen_causal";
  out.seed = seed;
  out.m = m;
  out.items = std::move(found);
  if (out.items.size() < m) {
    out.warnings.push_back(std::to_string(m - out.items.size()) +
                           " actionable subsets skipped; duplicates added");
    complement(out.items, m, rng);
  }
  out.diversity = diversity(out.states());
  out.config = {{"objective", cfg.to_json()}, {"causal", cc.to_json()}};
  return out;
}

}  // namespace evenif
