#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "evenif/dataset.hpp"
#include "evenif/linalg.hpp"

namespace evenif {

enum class ModelKind { logistic, tree, naive_bayes, mlp };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

// Binary scorer h: X -> [0,1]. label(x) = 1 iff score(x) > psi.
class Predictor {
 public:
  explicit Predictor(std::size_t width, double psi = 0.5)
      : width_(width), psi_(psi) {}
  virtual ~Predictor() = default;

  virtual ModelKind kind() const = 0;
  // Throws ValidationError on width mismatch.
  double score(std::span<const double> x) const {
    check_width(x);
    return score_unchecked(x);
  }
  // d score / dx. Analytic for logistic and MLP; central differences with
  // step 1e-4 otherwise.
  virtual Vec gradient(std::span<const double> x) const;
  virtual bool differentiable() const { return false; }

  int label(std::span<const double> x) const { return score(x) > psi_ ? 1 : 0; }
  double psi() const noexcept { return psi_; }
  void set_psi(double psi) { psi_ = psi; }
  std::size_t width() const noexcept { return width_; }

  // {"kind", "schema_hash", "psi", "params"}
  json to_json(const std::string& schema_hash) const;

 protected:
  virtual double score_unchecked(std::span<const double> x) const = 0;
  virtual json params() const = 0;
  void check_width(std::span<const double> x) const;
  Vec finite_difference_gradient(std::span<const double> x) const;

 private:
  std::size_t width_;
  double psi_;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

class LogisticModel final : public Predictor {
 public:
  LogisticModel(Vec weights, double bias, double psi = 0.5);
  ModelKind kind() const override { return ModelKind::logistic; }
  Vec gradient(std::span<const double> x) const override;
  bool differentiable() const override { return true; }
  const Vec& weights() const noexcept { return w_; }
  double bias() const noexcept { return b_; }

 protected:
  double score_unchecked(std::span<const double> x) const override;
  json params() const override;

 private:
  Vec w_;
  double b_;
};

// CART tree; leaves score (positives + 1) / (count + 2).
class TreeModel final : public Predictor {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;     // x[feature] <= threshold
    int right = -1;
    double positives = 0.0;
    double count = 0.0;
  };
  TreeModel(std::size_t width, std::vector<Node> nodes, double psi = 0.5);
  ModelKind kind() const override { return ModelKind::tree; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  // Index of the leaf x is routed to.
  int leaf_of(std::span<const double> x) const;

 protected:
  double score_unchecked(std::span<const double> x) const override;
  json params() const override;

 private:
  std::vector<Node> nodes_;
};

// Gaussian likelihood for real coordinates, Laplace-smoothed categorical
// likelihood for one-hot or ordinal categorical slots.
class NaiveBayesModel final : public Predictor {
 public:
  struct Block {
    Slot slot;
    // Real slots: mean/var per class. Categorical: log P(level | class).
    double mean[2] = {0, 0};
    double var[2] = {1, 1};
    std::vector<double> log_prob[2];
  };
  NaiveBayesModel(std::size_t width, std::vector<Block> blocks,
                  double log_prior0, double log_prior1, bool ordinal,
                  double psi = 0.5);
  ModelKind kind() const override { return ModelKind::naive_bayes; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }

 protected:
  double score_unchecked(std::span<const double> x) const override;
  json params() const override;

 private:
  std::vector<Block> blocks_;
  double log_prior_[2];
  bool ordinal_;
};

// One hidden tanh layer, sigmoid output.
class MlpModel final : public Predictor {
 public:
  MlpModel(std::size_t width, std::size_t hidden, Vec w1, Vec b1, Vec w2,
           double b2, double psi = 0.5);
  ModelKind kind() const override { return ModelKind::mlp; }
  Vec gradient(std::span<const double> x) const override;
  bool differentiable() const override { return true; }
  std::size_t hidden() const noexcept { return hidden_; }
  const Vec& w1() const noexcept { return w1_; }
  const Vec& b1() const noexcept { return b1_; }
  const Vec& w2() const noexcept { return w2_; }
  double b2() const noexcept { return b2_; }

 protected:
  double score_unchecked(std::span<const double> x) const override;
  json params() const override;

 private:
  std::size_t hidden_;
  Vec w1_;  // hidden x width, row-major
  Vec b1_;
  Vec w2_;
  double b2_;
};

struct TrainOptions {
  ModelKind kind = ModelKind::logistic;
  double psi = 0.5;
  double holdout_fraction = 0.2;
  // logistic / mlp
  int epochs = 0;  // 0: per-kind default
  double learning_rate = 0.0;
  double l2 = 1e-4;
  // tree
  int max_depth = 6;
  int min_leaf = 5;
  // mlp
  int hidden = 16;

  static TrainOptions from_json(const json& j, ModelKind kind);
};

struct TrainResult {
  PredictorPtr model;
  double holdout_accuracy = 0.0;
  std::size_t train_rows = 0;
  std::size_t holdout_rows = 0;
};

// Trains on a seeded split of the rows. Throws ValidationError when only one
// class is present.
TrainResult train(const std::vector<Vec>& X, const std::vector<int>& y,
                  const Encoder& encoder, const TrainOptions& options,
                  std::uint64_t seed);
TrainResult train(const EncodedDataset& data, const TrainOptions& options,
                  std::uint64_t seed);

double accuracy(const Predictor& model, const std::vector<Vec>& X,
                const std::vector<int>& y);

// Throws ValidationError on a kind tag it does not know or, when
// `expected_schema_hash` is non-empty, a mismatching hash.
PredictorPtr predictor_from_json(const json& j,
                                 const std::string& expected_schema_hash = {});
PredictorPtr load_predictor(const std::string& path,
                            const std::string& expected_schema_hash = {});

}  // namespace evenif
