#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "evenif/action_space.hpp"
#include "evenif/linalg.hpp"
#include "evenif/predictor.hpp"
#include "evenif/scm.hpp"

namespace evenif {

struct ObjectiveConfig {
  double lambda_p = 30.0;
  double lambda_s = 10.0;
  double gamma = 1.0;
  double gamma_p = 0.1;
  double epsilon = 0.1;
  int n_mc = 100;
  // Neighbourhood samples count as robust when score > psi + margin.
  double margin = 0.0;
  Norm gain_norm = Norm::l2;
  Norm neighborhood_norm = Norm::l2;
  // Nearest-neighbour plausibility against positively labelled rows only.
  bool plausibility_positive_only = false;

  void validate() const;
  static ObjectiveConfig from_json(const json& j, ObjectiveConfig base);
  static ObjectiveConfig from_json(const json& j) { return from_json(j, ObjectiveConfig()); }
  json to_json() const;
};

// Change from x to y measured in `norm`, negated when some feature moves
// against its polarity by more than 1e-9.
double gated_gain(std::span<const double> x, std::span<const double> y,
                  const Encoder& encoder, const FeatureSchema& polarity,
                  Norm norm);

// Semifactual state theta' for gene values of `space`: the non-causal
// substitution, or the SCM push when `scm` (bound to the encoder) is given.
// Genes left at their origin are not intervened on.
Vec semifactual_state(const ActionSpace& space, std::span<const double> values,
                      const Scm* scm);

// Gain on theta' (causal when scm is given).
double gain(const ActionSpace& space, std::span<const double> values,
            const Scm* scm, Norm norm);
// Negated gated change of the non-causal substitution.
double cost(const ActionSpace& space, std::span<const double> values, Norm norm);

// exp(1 / (min_d ||theta - d||^2 + gamma_p)). Throws ValidationError on an
// empty dataset.
double plausibility_empirical(std::span<const double> theta,
                              const std::vector<Vec>& data, double gamma_p);
double nearest_squared_distance(std::span<const double> theta,
                                const std::vector<Vec>& data);

// Nearest-row search over a fixed set of encoded rows, using
// ||t - r||^2 = ||t||^2 + ||r||^2 - 2 t.r with rows stored sparsely (one-hot
// blocks are mostly zero). The winning row's distance is recomputed directly.
class NearestNeighbors {
 public:
  NearestNeighbors() = default;
  explicit NearestNeighbors(const std::vector<Vec>& rows);

  bool empty() const noexcept { return n_ == 0; }
  std::size_t size() const noexcept { return n_; }
  double squared_distance(std::span<const double> theta) const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> start_;  // n_ + 1 offsets into idx_/val_
  std::vector<std::uint32_t> idx_;
  Vec val_;
  Vec sq_;
  std::vector<Vec> rows_;
};

// n points uniform in the epsilon ball (l1, l2 or linf) around `center`,
// moving only the encoder's real-valued coordinates, clipped to their boxes.
std::vector<Vec> sample_neighborhood(std::span<const double> center,
                                     const Encoder& encoder, double epsilon,
                                     int n, Norm norm, Rng& rng);

// Fraction of samples whose label (at threshold psi_tilde) equals `label_x`.
double robustness_probabilistic(const Predictor& model, int label_x,
                                const std::vector<Vec>& samples,
                                double psi_tilde);
// 1 iff h(theta') = label_x.
int robustness_absolute(const Predictor& model, int label_x,
                        std::span<const double> theta_prime);

// Mean pairwise l2 distance; 0 for fewer than two points.
double diversity(const std::vector<Vec>& points);

// Per-item terms of the non-causal fitness.
struct ItemTerms {
  double gain = 0.0;
  double plausibility = 1.0;
  double h_p = 0.0;
  double h_a = 0.0;
};

double item_score(const ItemTerms& t, const ObjectiveConfig& cfg);

// [(1/m) sum (P G + lambda_p H_p + lambda_s H_a) + gamma R] * mean H_p
double fitness(std::span<const ItemTerms> items, double diversity,
               const ObjectiveConfig& cfg);

// -log(s), s clamped to [1e-12, 1 - 1e-12].
double bce_positive(double score);

struct JTerm {
  double sf_score = 1.0;
  std::vector<double> sample_scores;
  double lambda = 1.0;
  double pg = 0.0;  // plausibility x gain
};

// (1/m) sum [-lambda BCE(h(SF), 1) - lambda/|B| sum BCE(h(theta_b), 1) + P G]
//   + gamma R
double objective_j(std::span<const JTerm> items, double gamma, double diversity);

// Evaluates candidate actions for one individual.
class Objective {
 public:
  // `scm` must already be bound to the encoder; `data` feeds plausibility and
  // may be null (plausibility then fixed at 1). With plausibility_positive_only
  // only rows the model labels like x are kept.
  Objective(const Predictor& model, const ActionSpace& space,
            const ObjectiveConfig& cfg, const std::vector<Vec>* data = nullptr,
            const Scm* scm = nullptr);

  struct Item {
    Vec values;
    Vec theta;  // semifactual state
    ItemTerms terms;
    double score = 0.0;  // model score at theta
  };

  Item evaluate(std::span<const double> values, Rng& rng) const;

  const Predictor& model() const noexcept { return *model_; }
  const ActionSpace& space() const noexcept { return *space_; }
  const ObjectiveConfig& config() const noexcept { return cfg_; }
  const Scm* scm() const noexcept { return scm_; }
  int label_x() const noexcept { return label_x_; }

 private:
  const Predictor* model_;
  const ActionSpace* space_;
  ObjectiveConfig cfg_;
  const Scm* scm_;
  int label_x_;
  NearestNeighbors neighbors_;
};

}  // namespace evenif
