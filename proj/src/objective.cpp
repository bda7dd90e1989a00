#include "evenif/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evenif/error.hpp"

namespace evenif {

void ObjectiveConfig::validate() const {
  if (lambda_p < 0) throw ValidationError("lambda_p must be >= 0", "lambda_p");
  if (lambda_s < 0) throw ValidationError("lambda_s must be >= 0", "lambda_s");
  if (gamma < 0) throw ValidationError("gamma must be >= 0", "gamma");
  if (!(gamma_p > 0)) throw ValidationError("gamma_p must be > 0", "gamma_p");
  if (!(epsilon > 0)) throw ValidationError("epsilon must be > 0", "epsilon");
  if (n_mc < 1) throw ValidationError("n_mc must be >= 1", "n_mc");
}

ObjectiveConfig ObjectiveConfig::from_json(const json& j, ObjectiveConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw ValidationError("objective config must be an object");
  try {
    c.lambda_p = j.value("lambda_p", c.lambda_p);
    c.lambda_s = j.value("lambda_s", c.lambda_s);
    c.gamma = j.value("gamma", c.gamma);
    c.gamma_p = j.value("gamma_p", c.gamma_p);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.n_mc = j.value("n_mc", c.n_mc);
    c.margin = j.value("margin", c.margin);
    if (j.contains("gain_norm"))
      c.gain_norm = norm_from_string(j["gain_norm"].get<std::string>());
    if (j.contains("neighborhood_norm"))
      c.neighborhood_norm = norm_from_string(j["neighborhood_norm"].get<std::string>());
    c.plausibility_positive_only =
        j.value("plausibility_positive_only", c.plausibility_positive_only);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad objective config: ") + e.what());
  }
  c.validate();
  return c;
}

json ObjectiveConfig::to_json() const {
  return {{"lambda_p", lambda_p},
          {"lambda_s", lambda_s},
          {"gamma", gamma},
          {"gamma_p", gamma_p},
          {"epsilon", epsilon},
          {"n_mc", n_mc},
          {"margin", margin},
          {"gain_norm", evenif::to_string(gain_norm)},
          {"neighborhood_norm", evenif::to_string(neighborhood_norm)},
          {"plausibility_positive_only", plausibility_positive_only}};
}

double gated_gain(std::span<const double> x, std::span<const double> y,
                  const Encoder& encoder, const FeatureSchema& polarity,
                  Norm n) {
  const double magnitude = distance(x, y, n);
  for (std::size_t f = 0; f < polarity.size(); ++f) {
    const Polarity p = polarity.features[f].polarity;
    if (p == Polarity::neutral) continue;
    const double d = encoder.feature_delta(f, x, y);
    if ((p == Polarity::positive && d < -1e-9) ||
        (p == Polarity::negative && d > 1e-9))
      return -magnitude;
  }
  return magnitude;
}

Vec semifactual_state(const ActionSpace& space, std::span<const double> values,
                      const Scm* scm) {
  Vec theta = space.apply(values);
  if (!scm) return theta;
  std::vector<Intervention> doing;
  const auto& genes = space.genes();
  const auto& slots = space.encoder().slots();
  for (std::size_t g = 0; g < genes.size(); ++g) {
    if (values[g] == genes[g].origin) continue;
    const Slot& s = slots[genes[g].feature];
    for (std::size_t c = s.offset; c < s.offset + s.width; ++c)
      doing.emplace_back(c, theta[c]);
  }
  return scm->process_semifactual(space.x(), doing);
}

double gain(const ActionSpace& space, std::span<const double> values,
            const Scm* scm, Norm n) {
  if (!space.contains(values, 1e-9))
    throw ValidationError("action is outside the feasible action space");
  const Vec theta = semifactual_state(space, values, scm);
  return gated_gain(space.x(), theta, space.encoder(), space.constraints(), n);
}

double cost(const ActionSpace& space, std::span<const double> values, Norm n) {
  return -gain(space, values, nullptr, n);
}

double nearest_squared_distance(std::span<const double> theta,
                                const std::vector<Vec>& data) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t d = theta.size();
  for (const Vec& row : data) {
    double s = 0.0;
    for (std::size_t i = 0; i < d && s < best; ++i) {
      const double diff = theta[i] - row[i];
      s += diff * diff;
    }
    if (s < best) best = s;
  }
  return best;
}

NearestNeighbors::NearestNeighbors(const std::vector<Vec>& rows)
    : n_(rows.size()), rows_(rows) {
  start_.reserve(n_ + 1);
  start_.push_back(0);
  for (const Vec& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k)
      if (r[k] != 0.0) {
        idx_.push_back(static_cast<std::uint32_t>(k));
        val_.push_back(r[k]);
      }
    start_.push_back(idx_.size());
    sq_.push_back(dot(r, r));
  }
}

double NearestNeighbors::squared_distance(std::span<const double> theta) const {
  if (n_ == 0) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  const double* t = theta.data();
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = start_[i]; k < start_[i + 1]; ++k) s += t[idx_[k]] * val_[k];
    const double v = sq_[i] - 2.0 * s;
    if (v < best) {
      best = v;
      arg = i;
    }
  }
  return evenif::squared_distance(theta, rows_[arg]);
}

double plausibility_empirical(std::span<const double> theta,
                              const std::vector<Vec>& data, double gamma_p) {
  if (data.empty()) throw ValidationError("plausibility needs a non-empty dataset");
  return std::exp(1.0 / (nearest_squared_distance(theta, data) + gamma_p));
}

std::vector<Vec> sample_neighborhood(std::span<const double> center,
                                     const Encoder& encoder, double epsilon,
                                     int n, Norm norm, Rng& rng) {
  const auto& coords = encoder.real_coords();
  const std::size_t d = coords.size();
  std::vector<Bounds> box(d);
  for (std::size_t k = 0; k < d; ++k) box[k] = encoder.coord_bounds(coords[k]);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::exponential_distribution<double> exp1(1.0);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  Vec step(d);
  for (int s = 0; s < n; ++s) {
    switch (norm) {
      case Norm::l2: {
        double r2 = 0.0;
        for (double& v : step) {
          v = n01(rng);
          r2 += v * v;
        }
        const double r = std::sqrt(r2);
        const double radius =
            epsilon * std::pow(u01(rng), 1.0 / static_cast<double>(std::max<std::size_t>(d, 1)));
        for (double& v : step) v = r > 0 ? v / r * radius : 0.0;
        break;
      }
      case Norm::l1: {
        // Uniform in the l1 ball: normalised exponential spacings with an
        // extra slack coordinate, random signs.
        double total = exp1(rng);
        for (double& v : step) {
          v = exp1(rng);
          total += v;
        }
        for (double& v : step) v = epsilon * v / total * (u01(rng) < 0.5 ? -1.0 : 1.0);
        break;
      }
      case Norm::linf:
        for (double& v : step) v = epsilon * (2.0 * u01(rng) - 1.0);
        break;
    }
    Vec p(center.begin(), center.end());
    for (std::size_t k = 0; k < d; ++k)
      p[coords[k]] = std::clamp(p[coords[k]] + step[k], box[k].lo, box[k].hi);
    out.push_back(std::move(p));
  }
  return out;
}

double robustness_probabilistic(const Predictor& model, int label_x,
                                const std::vector<Vec>& samples,
                                double psi_tilde) {
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Vec& s : samples) hits += (model.score(s) > psi_tilde ? 1 : 0) == label_x;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

int robustness_absolute(const Predictor& model, int label_x,
                        std::span<const double> theta_prime) {
  return model.label(theta_prime) == label_x ? 1 : 0;
}

double diversity(const std::vector<Vec>& points) {
  const std::size_t m = points.size();
  if (m < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) s += distance(points[i], points[j], Norm::l2);
  return 2.0 * s / (static_cast<double>(m) * static_cast<double>(m - 1));
}

double item_score(const ItemTerms& t, const ObjectiveConfig& cfg) {
  return t.plausibility * t.gain + cfg.lambda_p * t.h_p + cfg.lambda_s * t.h_a;
}

double fitness(std::span<const ItemTerms> items, double div,
               const ObjectiveConfig& cfg) {
  if (items.empty()) return 0.0;
  double sum = 0.0, hp = 0.0;
  for (const auto& t : items) {
    sum += item_score(t, cfg);
    hp += t.h_p;
  }
  const double m = static_cast<double>(items.size());
  return (sum / m + cfg.gamma * div) * (hp / m);
}

double bce_positive(double score) {
  return -std::log(std::clamp(score, 1e-12, 1.0 - 1e-12));
}

double objective_j(std::span<const JTerm> items, double gamma, double div) {
  if (items.empty()) return gamma * div;
  double sum = 0.0;
  for (const auto& t : items) {
    double batch = 0.0;
    for (double s : t.sample_scores) batch += bce_positive(s);
    if (!t.sample_scores.empty())
      batch /= static_cast<double>(t.sample_scores.size());
    sum += -t.lambda * bce_positive(t.sf_score) - t.lambda * batch + t.pg;
  }
  return sum / static_cast<double>(items.size()) + gamma * div;
}

Objective::Objective(const Predictor& model, const ActionSpace& space,
                     const ObjectiveConfig& cfg, const std::vector<Vec>* data,
                     const Scm* scm)
    : model_(&model), space_(&space), cfg_(cfg), scm_(scm) {
  cfg_.validate();
  label_x_ = model.label(space.x());
  if (!data || data->empty()) return;
  if (!cfg_.plausibility_positive_only) {
    neighbors_ = NearestNeighbors(*data);
    return;
  }
  std::vector<Vec> kept;
  for (const Vec& r : *data)
    if (model.label(r) == label_x_) kept.push_back(r);
  neighbors_ = NearestNeighbors(kept);
}

Objective::Item Objective::evaluate(std::span<const double> values, Rng& rng) const {
  Item it;
  it.values.assign(values.begin(), values.end());
  it.theta = semifactual_state(*space_, values, scm_);
  it.score = model_->score(it.theta);
  it.terms.gain = gated_gain(space_->x(), it.theta, space_->encoder(),
                             space_->constraints(), cfg_.gain_norm);
  it.terms.plausibility =
      neighbors_.empty()
          ? 1.0
          : std::exp(1.0 / (neighbors_.squared_distance(it.theta) + cfg_.gamma_p));
  it.terms.h_a = (it.score > model_->psi() ? 1 : 0) == label_x_ ? 1.0 : 0.0;
  const auto samples = sample_neighborhood(it.theta, space_->encoder(), cfg_.epsilon,
                                           cfg_.n_mc, cfg_.neighborhood_norm, rng);
  it.terms.h_p = robustness_probabilistic(*model_, label_x_, samples,
                                          model_->psi() + cfg_.margin);
  return it;
}

}  // namespace evenif
