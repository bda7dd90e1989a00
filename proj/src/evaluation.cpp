#include "evenif/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>
#include <numeric>
#include <tuple>

#include "evenif/error.hpp"
#include "evenif/stats.hpp"
#include "evenif/synthetic.hpp"

namespace evenif {

EvalConfig EvalConfig::from_json(const json& j, EvalConfig c) {
  if (j.is_null()) return c;
  try {
    c.epsilon = j.value("epsilon", c.epsilon);
    c.n_perturb = j.value("n_perturb", c.n_perturb);
    c.adversarial = j.value("adversarial", c.adversarial);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad evaluation config: ") + e.what(), "evaluation");
  }
  if (!(c.epsilon > 0)) throw ValidationError("epsilon must be positive", "epsilon");
  if (c.n_perturb < 1) throw ValidationError("n_perturb must be >= 1", "n_perturb");
  return c;
}

json EvalConfig::to_json() const {
  return {{"epsilon", epsilon}, {"n_perturb", n_perturb}, {"adversarial", adversarial}};
}

double single_feature_robustness(const Predictor& model, const Encoder& encoder,
                                 std::span<const double> theta, int label,
                                 double epsilon, int n, Rng& rng) {
  const std::size_t nf = encoder.schema().size();
  std::uniform_int_distribution<std::size_t> pick_feature(0, nf - 1);
  std::uniform_real_distribution<double> shift(-epsilon, epsilon);
  int kept = 0;
  Vec p(theta.begin(), theta.end());
  for (int i = 0; i < n; ++i) {
    std::copy(theta.begin(), theta.end(), p.begin());
    const std::size_t f = pick_feature(rng);
    const Slot& s = encoder.slots()[f];
    if (s.categorical && s.n_levels > 1) {
      const auto cur = static_cast<std::size_t>(encoder.level_of(f, theta));
      std::uniform_int_distribution<std::size_t> other(0, s.n_levels - 2);
      std::size_t l = other(rng);
      if (l >= cur) ++l;
      if (s.width > 1) {
        for (std::size_t k = 0; k < s.width; ++k) p[s.offset + k] = k == l ? 1.0 : 0.0;
      } else {
        p[s.offset] = encoder.scale(f, static_cast<double>(l));
      }
    } else if (!s.categorical) {
      const Bounds b = encoder.coord_bounds(s.offset);
      p[s.offset] = std::clamp(p[s.offset] + shift(rng), b.lo, b.hi);
    }
    if (model.label(p) == label) ++kept;
  }
  return static_cast<double>(kept) / n;
}

// ------------------------------------------------------- adversarial radius

namespace {

struct Probe {
  const Predictor& model;
  Vec theta;
  std::vector<std::size_t> coords;
  std::vector<Bounds> box;

  Vec clip(Vec p) const {
    for (std::size_t k = 0; k < coords.size(); ++k)
      p[coords[k]] = std::clamp(p[coords[k]], box[k].lo, box[k].hi);
    return p;
  }

  double dist(const Vec& p) const {
    double s = 0.0;
    for (std::size_t c : coords) s += (p[c] - theta[c]) * (p[c] - theta[c]);
    return std::sqrt(s);
  }

  // Distance to the first flip on the segment theta -> q (q flipped).
  double tighten(const Vec& q) const {
    double lo = 0.0, hi = 1.0;
    Vec p = theta;
    for (int b = 0; b < 50; ++b) {
      const double mid = 0.5 * (lo + hi);
      for (std::size_t c : coords) p[c] = theta[c] + mid * (q[c] - theta[c]);
      if (model.label(p) == 1)
        lo = mid;
      else
        hi = mid;
    }
    return hi * dist(q);
  }

  // Flip distance along unit direction d (over coords), +inf if none.
  double along(const Vec& d, int steps = 200) const {
    double tmax = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const double v = theta[coords[k]];
      if (d[k] > 1e-12) tmax = std::min(tmax, (box[k].hi - v) / d[k]);
      if (d[k] < -1e-12) tmax = std::min(tmax, (box[k].lo - v) / d[k]);
    }
    if (!std::isfinite(tmax)) tmax = 2.0 * std::sqrt(static_cast<double>(coords.size()));
    if (tmax <= 0) return std::numeric_limits<double>::infinity();
    Vec p = theta;
    for (int s = 1; s <= steps; ++s) {
      const double t = tmax * s / steps;
      for (std::size_t k = 0; k < coords.size(); ++k) p[coords[k]] = theta[coords[k]] + t * d[k];
      if (model.label(p) == 0) return tighten(p);
    }
    return std::numeric_limits<double>::infinity();
  }

  Vec restricted_gradient(const Vec& p) const {
    const Vec g = model.gradient(p);
    Vec r(coords.size());
    for (std::size_t k = 0; k < coords.size(); ++k) r[k] = g[coords[k]];
    return r;
  }
};

}  // namespace

AdversarialResult adversarial_radius(const Predictor& model, std::span<const double> theta,
                                     double epsilon, const Encoder* encoder,
                                     std::uint64_t seed, const AdversarialConfig& cfg) {
  AdversarialResult res;
  if (model.label(theta) != 1) {
    res.radius = 0.0;
    res.pass = false;
    return res;
  }
  Probe pr{model, Vec(theta.begin(), theta.end()), {}, {}};
  if (encoder) {
    pr.coords = encoder->real_coords();
    for (std::size_t c : pr.coords) pr.box.push_back(encoder->coord_bounds(c));
  } else {
    for (std::size_t c = 0; c < theta.size(); ++c) {
      pr.coords.push_back(c);
      pr.box.push_back({-std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity()});
    }
  }
  if (pr.coords.empty()) return res;
  const std::size_t d = pr.coords.size();
  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto random_unit = [&] {
    Vec v(d);
    double nrm = 0.0;
    do {
      for (double& x : v) x = n01(rng);
      nrm = norm(v, Norm::l2);
    } while (nrm < 1e-12);
    for (double& x : v) x /= nrm;
    return v;
  };
  double best = std::numeric_limits<double>::infinity();
  const double psi = model.psi();

  // Linearized steps onto the psi level set, restarted from random points
  // in the epsilon ball.
  for (int r = 0; r < cfg.restarts; ++r) {
    Vec p = pr.theta;
    if (r > 0) {
      const Vec dir = random_unit();
      const double rad = epsilon * std::pow(u01(rng), 1.0 / static_cast<double>(d));
      for (std::size_t k = 0; k < d; ++k) p[pr.coords[k]] += rad * dir[k];
      p = pr.clip(std::move(p));
    }
    for (int it = 0; it < cfg.iterations; ++it) {
      const double s = model.score(p) - psi;
      if (s <= 0) {
        best = std::min(best, pr.tighten(p));
        break;
      }
      const Vec g = pr.restricted_gradient(p);
      const double g2 = dot(g, g);
      if (g2 < 1e-18) break;
      const double step = 1.02 * (s + 1e-9) / g2;
      for (std::size_t k = 0; k < d; ++k) p[pr.coords[k]] -= step * g[k];
      p = pr.clip(std::move(p));
    }
  }

  // Directional search: coordinate axes and random directions. Covers
  // piecewise-constant models whose gradient vanishes.
  for (std::size_t k = 0; k < d; ++k)
    for (double sgn : {1.0, -1.0}) {
      Vec dir(d, 0.0);
      dir[k] = sgn;
      best = std::min(best, pr.along(dir));
    }
  for (int i = 0; i < cfg.directions; ++i) best = std::min(best, pr.along(random_unit()));

  // Steepest-descent ray from theta.
  {
    Vec g = pr.restricted_gradient(pr.theta);
    const double gn = norm(g, Norm::l2);
    if (gn > 1e-12) {
      for (double& v : g) v = -v / gn;
      best = std::min(best, pr.along(g, 400));
    }
  }
  res.radius = best;
  res.pass = best > epsilon;
  return res;
}

SetMetrics evaluate_explanations(const ExplanationSet& set, const Predictor& model,
                                 const ActionSpace& space, const std::vector<Vec>& train,
                                 Norm norm, const EvalConfig& cfg, std::uint64_t seed) {
  if (set.items.empty()) throw ValidationError("explanation set is empty", "items");
  const Encoder& enc = space.encoder();
  const int label = model.label(space.x());
  Rng rng(seed);
  SetMetrics mt;
  mt.items = set.items.size();
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    const ExplanationItem& it = set.items[i];
    mt.gain += gated_gain(space.x(), it.theta, enc, space.constraints(), norm);
    mt.action_gain +=
        gated_gain(space.x(), space.apply(it.action), enc, space.constraints(), norm);
    if (!train.empty()) mt.plausibility += std::sqrt(nearest_squared_distance(it.theta, train));
    mt.robustness +=
        single_feature_robustness(model, enc, it.theta, label, cfg.epsilon, cfg.n_perturb, rng);
    if (cfg.adversarial)
      mt.adversarial_pass +=
          adversarial_radius(model, it.theta, cfg.epsilon, &enc, seed + 7919 * (i + 1)).pass;
  }
  const double n = static_cast<double>(set.items.size());
  mt.gain /= n;
  mt.action_gain /= n;
  mt.plausibility /= n;
  mt.robustness /= n;
  mt.adversarial_pass /= n;
  mt.diversity = diversity(set.states());
  return mt;
}

// ---------------------------------------------------------------- reporting

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

Summary summarize(const std::vector<double>& v) {
  return {mean(v), standard_error(v), v.size()};
}

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"se", s.se}, {"n", s.n}}; }

json cell_json(const AggregateCell& c) {
  return {{"dataset", c.dataset},
          {"model", c.model},
          {"method", c.method},
          {"m", c.m},
          {"gain", summary_json(c.gain)},
          {"plausibility", summary_json(c.plausibility)},
          {"robustness", summary_json(c.robustness)},
          {"diversity", summary_json(c.diversity)},
          {"raw_gain", summary_json(c.raw_gain)},
          {"raw_plausibility", summary_json(c.raw_plausibility)},
          {"raw_diversity", summary_json(c.raw_diversity)},
          {"action_gain", summary_json(c.action_gain)},
          {"adversarial_pass", summary_json(c.adversarial_pass)}};
}

struct Pool {
  std::vector<double> gain, plaus, rob, div, raw_gain, raw_plaus, raw_div, action, adv;
};

AggregateCell to_cell(const Pool& p) {
  AggregateCell c;
  c.gain = summarize(p.gain);
  c.plausibility = summarize(p.plaus);
  c.robustness = summarize(p.rob);
  c.diversity = summarize(p.div);
  c.raw_gain = summarize(p.raw_gain);
  c.raw_plausibility = summarize(p.raw_plaus);
  c.raw_diversity = summarize(p.raw_div);
  c.action_gain = summarize(p.action);
  c.adversarial_pass = summarize(p.adv);
  return c;
}

}  // namespace

std::string BenchmarkReport::csv() const {
  std::ostringstream out;
  out << "dataset,model,method,m,seed,gain,plausibility,robustness,diversity,action_gain,"
         "adversarial_pass,individual,status,error\n";
  for (const BenchRow& r : rows) {
    out << csv_escape(r.dataset) << ',' << csv_escape(r.model) << ',' << csv_escape(r.method)
        << ',' << r.m << ',' << r.seed << ',';
    if (r.status == "error") {
      out << ",,,,,,";
    } else {
      const SetMetrics& m = r.metrics;
      out << num(m.gain) << ',' << num(m.plausibility) << ',' << num(m.robustness) << ','
          << num(m.diversity) << ',' << num(m.action_gain) << ',' << num(m.adversarial_pass)
          << ',';
    }
    out << csv_escape(r.individual) << ',' << r.status << ',' << csv_escape(r.error) << '\n';
  }
  return out.str();
}

json BenchmarkReport::summary() const {
  std::size_t failures = 0;
  for (const auto& r : rows) failures += r.status == "error";
  json j;
  j["rows"] = rows.size();
  j["failures"] = failures;
  j["warnings"] = warnings;
  j["cells"] = json::array();
  for (const auto& c : cells) j["cells"].push_back(cell_json(c));
  j["per_dataset"] = json::array();
  for (const auto& c : per_dataset) j["per_dataset"].push_back(cell_json(c));
  return j;
}

const AggregateCell* BenchmarkReport::cell(const std::string& method, std::size_t m) const {
  for (const auto& c : cells)
    if (c.method == method && c.m == m) return &c;
  return nullptr;
}

BenchmarkReport aggregate_normalized(std::vector<BenchRow> rows) {
  BenchmarkReport rep;
  rep.rows = std::move(rows);

  struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  struct DsInfo {
    Range gain, plaus, div;
    std::set<std::string> methods;
  };
  std::map<std::string, DsInfo> info;
  for (const BenchRow& r : rep.rows) {
    if (r.status == "error") continue;
    DsInfo& d = info[r.dataset];
    d.gain.add(r.metrics.gain);
    d.plaus.add(r.metrics.plausibility);
    d.div.add(r.metrics.diversity);
    d.methods.insert(r.method);
  }
  for (const auto& [name, d] : info) {
    if (d.methods.size() < 2) {
      rep.warnings.push_back("dataset '" + name +
                             "' has a single method; metrics reported unnormalized");
      continue;
    }
    for (const auto& [metric, range] :
         {std::pair{"gain", d.gain}, {"plausibility", d.plaus}, {"diversity", d.div}})
      if (!(range.hi > range.lo))
        rep.warnings.push_back("degenerate normalization of " + std::string(metric) +
                               " on dataset '" + name + "'");
  }
  auto normalize = [&](const DsInfo& d, const Range& range, double v) {
    if (d.methods.size() < 2) return v;
    if (!(range.hi > range.lo)) return 0.0;
    return (v - range.lo) / (range.hi - range.lo);
  };

  std::map<std::pair<std::string, std::size_t>, Pool> pooled;
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, Pool> per;
  for (const BenchRow& r : rep.rows) {
    if (r.status == "error") continue;
    const DsInfo& d = info[r.dataset];
    const SetMetrics& m = r.metrics;
    for (Pool* p : {&pooled[{r.method, r.m}], &per[{r.dataset, r.model, r.method, r.m}]}) {
      p->gain.push_back(normalize(d, d.gain, m.gain));
      p->plaus.push_back(normalize(d, d.plaus, m.plausibility));
      p->div.push_back(normalize(d, d.div, m.diversity));
      p->rob.push_back(m.robustness);
      p->raw_gain.push_back(m.gain);
      p->raw_plaus.push_back(m.plausibility);
      p->raw_div.push_back(m.diversity);
      p->action.push_back(m.action_gain);
      p->adv.push_back(m.adversarial_pass);
    }
  }
  for (const auto& [key, pool] : pooled) {
    AggregateCell c = to_cell(pool);
    c.dataset = "*";
    c.model = "*";
    c.method = key.first;
    c.m = key.second;
    rep.cells.push_back(std::move(c));
  }
  for (const auto& [key, pool] : per) {
    AggregateCell c = to_cell(pool);
    std::tie(c.dataset, c.model, c.method, c.m) = key;
    rep.per_dataset.push_back(std::move(c));
  }
  return rep;
}

// -------------------------------------------------------------- benchmark

namespace {

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base) / path).string();
}

template <class T>
std::vector<T> list_of(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const json& v = j[key];
  if (!v.is_array()) throw ValidationError(std::string(key) + " must be an array", key);
  std::vector<T> out;
  for (const auto& e : v) out.push_back(e.get<T>());
  return out;
}

}  // namespace

BenchmarkPlan BenchmarkPlan::from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ValidationError("plan must be a JSON object", "plan");
  BenchmarkPlan p;
  try {
    p.name = j.value("name", p.name);
    if (j.contains("datasets")) {
      if (!j["datasets"].is_array())
        throw ValidationError("datasets must be an array", "datasets");
      for (const auto& d : j["datasets"]) {
        DatasetSpec s;
        if (d.is_string()) {
          s.synthetic = d.get<std::string>();
          s.id = s.synthetic;
        } else {
          s.synthetic = d.value("synthetic", "");
          s.id = d.value("id", s.synthetic);
          s.rows = d.value("rows", s.rows);
          s.seed = d.value("seed", s.seed);
          s.csv = resolve(base_dir, d.value("csv", ""));
          s.schema = resolve(base_dir, d.value("schema", ""));
          s.scm = resolve(base_dir, d.value("scm", ""));
          s.encoding = d.value("encoding", "");
        }
        if (s.synthetic.empty() && (s.csv.empty() || s.schema.empty()))
          throw ValidationError("dataset needs 'synthetic' or both 'csv' and 'schema'",
                                "datasets");
        if (s.id.empty()) throw ValidationError("dataset without an id", "datasets");
        p.datasets.push_back(std::move(s));
      }
    }
    p.models = list_of<std::string>(j, "models");
    p.methods = list_of<std::string>(j, "methods");
    p.m_values = list_of<std::size_t>(j, "m");
    p.seeds = list_of<std::uint64_t>(j, "seeds");
    if (j.contains("n_seeds")) {
      const auto n = j["n_seeds"].get<std::uint64_t>();
      const auto first = j.value("seed_offset", std::uint64_t{0});
      for (std::uint64_t s = 0; s < n; ++s) p.seeds.push_back(first + s);
    }
    p.individuals_per_seed = j.value("individuals_per_seed", p.individuals_per_seed);
    p.test_fraction = j.value("test_fraction", p.test_fraction);
    p.split_seed = j.value("split_seed", p.split_seed);
    p.threads = j.value("threads", p.threads);
    if (j.contains("config")) p.engine = EngineConfig::from_json(j["config"]);
    if (j.contains("evaluation")) p.evaluation = EvalConfig::from_json(j["evaluation"]);
    if (j.contains("train")) p.train = j["train"];
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad plan: ") + e.what(), "plan");
  }
  for (const auto& m : p.models) model_kind_from_string(m);
  for (const auto& m : p.methods) check_method(m);
  for (std::size_t m : p.m_values)
    if (m < 1) throw ValidationError("m values must be >= 1", "m");
  if (!(p.test_fraction > 0 && p.test_fraction < 1))
    throw ValidationError("test_fraction must lie in (0,1)", "test_fraction");
  if (p.individuals_per_seed < 1)
    throw ValidationError("individuals_per_seed must be >= 1", "individuals_per_seed");
  return p;
}

namespace {

struct PreparedModel {
  std::string name;
  PredictorPtr model;
  std::vector<std::size_t> positives;  // test rows usable as queries
};

struct PreparedDataset {
  std::string id;
  std::unique_ptr<EncodedDataset> data;
  std::optional<Scm> scm;  // bound
  std::vector<Vec> train_X;
  std::vector<std::size_t> test_rows;
  std::vector<PreparedModel> models;
};

struct Task {
  std::size_t dataset = 0;
  std::size_t model = 0;
  std::string method;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::size_t row = 0;
};

ExplanationSet unchanged_set(const ActionSpace& space, const Predictor& model,
                             const std::string& method, std::size_t m, std::uint64_t seed) {
  ExplanationSet s;
  s.method = method;
  s.seed = seed;
  s.m = std::max<std::size_t>(m, 1);
  s.no_effective_semifactual = true;
  ExplanationItem it;
  it.action = space.origin();
  it.theta = space.x();
  it.score = model.score(it.theta);
  it.robust_label = model.label(it.theta);
  s.items.assign(s.m, it);
  return s;
}

BenchRow run_task(const BenchmarkPlan& plan, const std::vector<PreparedDataset>& ds,
                  const Task& t) {
  const PreparedDataset& d = ds[t.dataset];
  const PreparedModel& pm = d.models[t.model];
  BenchRow row;
  row.dataset = d.id;
  row.model = pm.name;
  row.method = t.method;
  row.m = t.m;
  row.seed = t.seed;
  row.individual = d.data->data().ids[t.row];
  try {
    const Vec& x = d.data->X()[t.row];
    const ActionSpace space(d.data->encoder(), d.data->schema(), x);
    ExplainInputs in{&space, pm.model.get(), &d.train_X, d.scm ? &*d.scm : nullptr};
    if (is_causal_method(t.method)) row.m = actionable_subsets(space).size();
    ExplanationSet set;
    try {
      set = run_method(t.method, in, row.m, plan.engine, t.seed);
    } catch (const NoEffectiveSemifactual&) {
      set = unchanged_set(space, *pm.model, t.method, row.m, t.seed);
    }
    if (set.no_effective_semifactual) row.status = "no_effective";
    const Norm norm = is_causal_method(t.method) ? plan.engine.causal_objective.gain_norm
                                                 : plan.engine.objective.gain_norm;
    row.metrics =
        evaluate_explanations(set, *pm.model, space, d.train_X, norm, plan.evaluation, t.seed);
  } catch (const std::exception& e) {
    row.status = "error";
    row.error = e.what();
  }
  return row;
}

PreparedDataset prepare(const BenchmarkPlan& plan, const DatasetSpec& spec) {
  PreparedDataset out;
  out.id = spec.id;
  Dataset data;
  std::optional<Scm> scm;
  CategoricalEncoding enc = CategoricalEncoding::one_hot;
  if (!spec.synthetic.empty()) {
    SyntheticDomain dom = synthetic_domain(spec.synthetic, spec.rows, spec.seed);
    data = std::move(dom.data);
    scm = std::move(dom.scm);
    enc = dom.encoding;
  } else {
    const json sj = read_json_file(spec.schema);
    data = load_dataset(spec.csv, FeatureSchema::from_json(sj));
    if (sj.contains("encoding")) enc = encoding_from_string(sj["encoding"].get<std::string>());
    if (!spec.scm.empty()) scm = Scm::from_json(read_json_file(spec.scm));
  }
  if (!spec.encoding.empty()) enc = encoding_from_string(spec.encoding);
  out.data = std::make_unique<EncodedDataset>(std::move(data), enc);
  if (scm) out.scm = scm->bind(out.data->encoder());

  std::vector<std::size_t> idx(out.data->size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng split(plan.split_seed);
  std::shuffle(idx.begin(), idx.end(), split);
  const auto n_test = static_cast<std::size_t>(
      std::llround(plan.test_fraction * static_cast<double>(idx.size())));
  out.test_rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<int> train_y;
  for (std::size_t k = n_test; k < idx.size(); ++k) {
    out.train_X.push_back(out.data->X()[idx[k]]);
    train_y.push_back(out.data->y()[idx[k]]);
  }
  for (const std::string& name : plan.models) {
    const ModelKind kind = model_kind_from_string(name);
    const json opts = plan.train.contains(name) ? plan.train[name] : json::object();
    TrainResult tr = train(out.train_X, train_y, out.data->encoder(),
                           TrainOptions::from_json(opts, kind), plan.split_seed);
    PreparedModel pm{name, tr.model, {}};
    for (std::size_t r : out.test_rows) {
      if (pm.model->label(out.data->X()[r]) != 1) continue;
      try {
        ActionSpace(out.data->encoder(), out.data->schema(), out.data->X()[r]);
      } catch (const EmptyActionSpace&) {
        continue;
      }
      pm.positives.push_back(r);
    }
    std::sort(pm.positives.begin(), pm.positives.end());
    out.models.push_back(std::move(pm));
  }
  return out;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkPlan& plan) {
  std::vector<PreparedDataset> ds;
  std::vector<BenchRow> setup_errors;
  for (const auto& spec : plan.datasets) {
    try {
      ds.push_back(prepare(plan, spec));
    } catch (const std::exception& e) {
      BenchRow r;
      r.dataset = spec.id;
      r.status = "error";
      r.error = e.what();
      setup_errors.push_back(std::move(r));
    }
  }

  std::vector<Task> tasks;
  for (std::size_t di = 0; di < ds.size(); ++di)
    for (std::size_t mi = 0; mi < ds[di].models.size(); ++mi) {
      const auto& pos = ds[di].models[mi].positives;
      for (std::uint64_t seed : plan.seeds) {
        if (pos.empty()) continue;
        // Query individuals for this seed.
        std::vector<std::size_t> pick = pos;
        Rng r(seed);
        std::shuffle(pick.begin(), pick.end(), r);
        pick.resize(std::min(pick.size(), plan.individuals_per_seed));
        for (std::size_t row : pick)
          for (const std::string& method : plan.methods) {
            const std::vector<std::size_t> ms =
                is_causal_method(method) ? std::vector<std::size_t>{0} : plan.m_values;
            for (std::size_t m : ms) tasks.push_back({di, mi, method, m, seed, row});
          }
      }
    }

  std::vector<BenchRow> rows(tasks.size());
  unsigned n_threads = plan.threads ? plan.threads : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(tasks.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
      rows[i] = run_task(plan, ds, tasks[i]);
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  rows.insert(rows.begin(), setup_errors.begin(), setup_errors.end());
  BenchmarkReport rep = aggregate_normalized(std::move(rows));
  for (const auto& d : ds)
    for (const auto& pm : d.models)
      if (pm.positives.empty())
        rep.warnings.push_back("no positively classified test individual for " + d.id + "/" +
                               pm.name);
  return rep;
}

void write_report(const BenchmarkReport& report, const std::string& dir,
                  const std::string& name) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir) / name;
  {
    std::ofstream out(base.string() + ".csv", std::ios::binary);
    if (!out) throw Error("cannot write '" + base.string() + ".csv'");
    out << report.csv();
  }
  std::ofstream out(base.string() + ".summary.json", std::ios::binary);
  out << report.summary().dump(2) << '\n';
}

}  // namespace evenif
