#include "evenif/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "evenif/error.hpp"

namespace evenif {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "logistic") return ModelKind::logistic;
  if (s == "tree") return ModelKind::tree;
  if (s == "naive_bayes" || s == "naive-bayes" || s == "nb")
    return ModelKind::naive_bayes;
  if (s == "mlp") return ModelKind::mlp;
  throw ValidationError("unknown model kind '" + s + "'", "kind");
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::logistic:
      return "logistic";
    case ModelKind::tree:
      return "tree";
    case ModelKind::naive_bayes:
      return "naive_bayes";
    case ModelKind::mlp:
      return "mlp";
  }
  return "logistic";
}

void Predictor::check_width(std::span<const double> x) const {
  if (x.size() != width_)
    throw ValidationError("input width " + std::to_string(x.size()) +
                          " does not match model width " +
                          std::to_string(width_));
}

Vec Predictor::finite_difference_gradient(std::span<const double> x) const {
  constexpr double h = 1e-4;
  Vec xp(x.begin(), x.end());
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = xp[i];
    xp[i] = v + h;
    const double up = score_unchecked(xp);
    xp[i] = v - h;
    const double down = score_unchecked(xp);
    xp[i] = v;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

Vec Predictor::gradient(std::span<const double> x) const {
  check_width(x);
  return finite_difference_gradient(x);
}

json Predictor::to_json(const std::string& schema_hash) const {
  return {{"kind", evenif::to_string(kind())},
          {"schema_hash", schema_hash},
          {"psi", psi_},
          {"width", width_},
          {"params", params()}};
}

// ---------------------------------------------------------------- logistic

LogisticModel::LogisticModel(Vec weights, double bias, double psi)
    : Predictor(weights.size(), psi), w_(std::move(weights)), b_(bias) {}

double LogisticModel::score_unchecked(std::span<const double> x) const {
  return sigmoid(dot(w_, x) + b_);
}

Vec LogisticModel::gradient(std::span<const double> x) const {
  const double s = score(x);
  Vec g = w_;
  for (double& v : g) v *= s * (1.0 - s);
  return g;
}

json LogisticModel::params() const { return {{"weights", w_}, {"bias", b_}}; }

// -------------------------------------------------------------------- tree

TreeModel::TreeModel(std::size_t width, std::vector<Node> nodes, double psi)
    : Predictor(width, psi), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ValidationError("tree without nodes");
}

int TreeModel::leaf_of(std::span<const double> x) const {
  int n = 0;
  while (nodes_[n].feature >= 0)
    n = x[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left
                                                     : nodes_[n].right;
  return n;
}

double TreeModel::score_unchecked(std::span<const double> x) const {
  const Node& leaf = nodes_[leaf_of(x)];
  return (leaf.positives + 1.0) / (leaf.count + 2.0);
}

json TreeModel::params() const {
  json nodes = json::array();
  for (const auto& n : nodes_)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.positives, n.count});
  return {{"nodes", nodes}};
}

// ------------------------------------------------------------- naive bayes

NaiveBayesModel::NaiveBayesModel(std::size_t width, std::vector<Block> blocks,
                                 double log_prior0, double log_prior1,
                                 bool ordinal, double psi)
    : Predictor(width, psi), blocks_(std::move(blocks)), ordinal_(ordinal) {
  log_prior_[0] = log_prior0;
  log_prior_[1] = log_prior1;
}

namespace {

int block_level(const NaiveBayesModel::Block& b, std::span<const double> x,
                bool ordinal) {
  if (ordinal) {
    const double raw = std::round(x[b.slot.offset] * b.slot.span + b.slot.origin);
    return static_cast<int>(
        std::clamp(raw, 0.0, static_cast<double>(b.slot.n_levels - 1)));
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < b.slot.width; ++l)
    if (x[b.slot.offset + l] > x[b.slot.offset + best]) best = l;
  return static_cast<int>(best);
}

}  // namespace

double NaiveBayesModel::score_unchecked(std::span<const double> x) const {
  double ll[2] = {log_prior_[0], log_prior_[1]};
  for (const auto& b : blocks_) {
    if (b.slot.categorical) {
      const int level = block_level(b, x, ordinal_);
      for (int c = 0; c < 2; ++c) ll[c] += b.log_prob[c][level];
    } else {
      const double v = x[b.slot.offset];
      for (int c = 0; c < 2; ++c) {
        const double d = v - b.mean[c];
        ll[c] += -0.5 * std::log(2 * M_PI * b.var[c]) - d * d / (2 * b.var[c]);
      }
    }
  }
  return sigmoid(ll[1] - ll[0]);
}

json NaiveBayesModel::params() const {
  json blocks = json::array();
  for (const auto& b : blocks_) {
    blocks.push_back({{"offset", b.slot.offset},
                      {"width", b.slot.width},
                      {"categorical", b.slot.categorical},
                      {"n_levels", b.slot.n_levels},
                      {"origin", b.slot.origin},
                      {"span", b.slot.span},
                      {"mean", {b.mean[0], b.mean[1]}},
                      {"var", {b.var[0], b.var[1]}},
                      {"log_prob", {b.log_prob[0], b.log_prob[1]}}});
  }
  return {{"blocks", blocks},
          {"log_prior", {log_prior_[0], log_prior_[1]}},
          {"ordinal", ordinal_}};
}

// --------------------------------------------------------------------- mlp

MlpModel::MlpModel(std::size_t width, std::size_t hidden, Vec w1, Vec b1, Vec w2,
                   double b2, double psi)
    : Predictor(width, psi),
      hidden_(hidden),
      w1_(std::move(w1)),
      b1_(std::move(b1)),
      w2_(std::move(w2)),
      b2_(b2) {
  if (w1_.size() != hidden_ * width || b1_.size() != hidden_ ||
      w2_.size() != hidden_)
    throw ValidationError("mlp parameter shapes do not match");
}

double MlpModel::score_unchecked(std::span<const double> x) const {
  const std::size_t d = width();
  double z = b2_;
  for (std::size_t j = 0; j < hidden_; ++j) {
    const double a = std::tanh(
        b1_[j] + dot(std::span<const double>(w1_.data() + j * d, d), x));
    z += w2_[j] * a;
  }
  return sigmoid(z);
}

Vec MlpModel::gradient(std::span<const double> x) const {
  check_width(x);
  const std::size_t d = width();
  Vec g(d, 0.0);
  double z = b2_;
  Vec dh(hidden_);
  for (std::size_t j = 0; j < hidden_; ++j) {
    const double a = std::tanh(
        b1_[j] + dot(std::span<const double>(w1_.data() + j * d, d), x));
    z += w2_[j] * a;
    dh[j] = w2_[j] * (1.0 - a * a);
  }
  const double s = sigmoid(z);
  const double ds = s * (1.0 - s);
  for (std::size_t j = 0; j < hidden_; ++j)
    for (std::size_t i = 0; i < d; ++i) g[i] += ds * dh[j] * w1_[j * d + i];
  return g;
}

json MlpModel::params() const {
  return {{"hidden", hidden_}, {"w1", w1_}, {"b1", b1_}, {"w2", w2_}, {"b2", b2_}};
}

// ---------------------------------------------------------------- training

TrainOptions TrainOptions::from_json(const json& j, ModelKind kind) {
  TrainOptions o;
  o.kind = kind;
  if (j.is_null()) return o;
  o.psi = j.value("psi", o.psi);
  o.holdout_fraction = j.value("holdout_fraction", o.holdout_fraction);
  o.epochs = j.value("epochs", o.epochs);
  o.learning_rate = j.value("learning_rate", o.learning_rate);
  o.l2 = j.value("l2", o.l2);
  o.max_depth = j.value("max_depth", o.max_depth);
  o.min_leaf = j.value("min_leaf", o.min_leaf);
  o.hidden = j.value("hidden", o.hidden);
  return o;
}

namespace {

using Rows = std::vector<std::size_t>;

PredictorPtr fit_logistic(const std::vector<Vec>& X, const std::vector<int>& y,
                          const Rows& rows, const TrainOptions& o) {
  const std::size_t d = X.front().size();
  const int epochs = o.epochs > 0 ? o.epochs : 3000;
  const double lr = o.learning_rate > 0 ? o.learning_rate : 0.5;
  Vec w(d, 0.0), vw(d, 0.0), g(d);
  double b = 0.0, vb = 0.0;
  const double n = static_cast<double>(rows.size());
  for (int e = 0; e < epochs; ++e) {
    std::fill(g.begin(), g.end(), 0.0);
    double gb = 0.0;
    for (std::size_t r : rows) {
      const double err = sigmoid(dot(w, X[r]) + b) - y[r];
      for (std::size_t i = 0; i < d; ++i) g[i] += err * X[r][i];
      gb += err;
    }
    for (std::size_t i = 0; i < d; ++i) {
      vw[i] = 0.9 * vw[i] - lr * (g[i] / n + o.l2 * w[i]);
      w[i] += vw[i];
    }
    vb = 0.9 * vb - lr * gb / n;
    b += vb;
  }
  return std::make_shared<LogisticModel>(std::move(w), b, o.psi);
}

struct TreeBuilder {
  const std::vector<Vec>& X;
  const std::vector<int>& y;
  const TrainOptions& o;
  std::vector<TreeModel::Node> nodes;

  static double gini(double pos, double n) {
    if (n <= 0) return 0.0;
    const double p = pos / n;
    return 2.0 * p * (1.0 - p);
  }

  int build(Rows rows, int depth) {
    TreeModel::Node node;
    node.count = static_cast<double>(rows.size());
    for (std::size_t r : rows) node.positives += y[r];
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(node);
    if (depth >= o.max_depth || node.positives == 0 ||
        node.positives == node.count ||
        rows.size() < 2 * static_cast<std::size_t>(o.min_leaf))
      return id;

    const std::size_t d = X.front().size();
    const double parent = gini(node.positives, node.count) * node.count;
    double best_gain = 1e-12;
    int best_f = -1;
    double best_t = 0.0;
    std::vector<std::pair<double, int>> col(rows.size());
    for (std::size_t f = 0; f < d; ++f) {
      for (std::size_t k = 0; k < rows.size(); ++k)
        col[k] = {X[rows[k]][f], y[rows[k]]};
      std::sort(col.begin(), col.end());
      double left_pos = 0.0;
      for (std::size_t k = 0; k + 1 < col.size(); ++k) {
        left_pos += col[k].second;
        if (col[k].first == col[k + 1].first) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = node.count - nl;
        if (nl < o.min_leaf || nr < o.min_leaf) continue;
        const double impurity = gini(left_pos, nl) * nl +
                                gini(node.positives - left_pos, nr) * nr;
        const double gain = parent - impurity;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_t = 0.5 * (col[k].first + col[k + 1].first);
        }
      }
    }
    if (best_f < 0) return id;
    Rows left, right;
    for (std::size_t r : rows)
      (X[r][best_f] <= best_t ? left : right).push_back(r);
    nodes[id].feature = best_f;
    nodes[id].threshold = best_t;
    const int l = build(std::move(left), depth + 1);
    nodes[id].left = l;
    const int r = build(std::move(right), depth + 1);
    nodes[id].right = r;
    return id;
  }
};

PredictorPtr fit_tree(const std::vector<Vec>& X, const std::vector<int>& y,
                      const Rows& rows, const TrainOptions& o) {
  TreeBuilder b{X, y, o, {}};
  b.build(rows, 0);
  return std::make_shared<TreeModel>(X.front().size(), std::move(b.nodes), o.psi);
}

PredictorPtr fit_naive_bayes(const std::vector<Vec>& X, const std::vector<int>& y,
                             const Rows& rows, const Encoder& enc,
                             const TrainOptions& o) {
  const bool ordinal = enc.encoding() == CategoricalEncoding::ordinal;
  double n[2] = {0, 0};
  for (std::size_t r : rows) n[y[r]] += 1;
  std::vector<NaiveBayesModel::Block> blocks;
  double max_var = 0.0;
  for (const Slot& slot : enc.slots()) {
    NaiveBayesModel::Block b;
    b.slot = slot;
    if (slot.categorical) {
      for (int c = 0; c < 2; ++c) b.log_prob[c].assign(slot.n_levels, 1.0);
      for (std::size_t r : rows) {
        int level;
        if (ordinal) {
          level = static_cast<int>(std::clamp(
              std::round(X[r][slot.offset] * slot.span + slot.origin), 0.0,
              static_cast<double>(slot.n_levels - 1)));
        } else {
          level = static_cast<int>(
              std::max_element(X[r].begin() + static_cast<long>(slot.offset),
                               X[r].begin() + static_cast<long>(slot.offset + slot.width)) -
              (X[r].begin() + static_cast<long>(slot.offset)));
        }
        b.log_prob[y[r]][level] += 1.0;
      }
      for (int c = 0; c < 2; ++c)
        for (double& p : b.log_prob[c])
          p = std::log(p / (n[c] + static_cast<double>(slot.n_levels)));
    } else {
      for (int c = 0; c < 2; ++c) {
        double s = 0.0, ss = 0.0;
        for (std::size_t r : rows)
          if (y[r] == c) s += X[r][slot.offset];
        b.mean[c] = s / n[c];
        for (std::size_t r : rows)
          if (y[r] == c) ss += (X[r][slot.offset] - b.mean[c]) * (X[r][slot.offset] - b.mean[c]);
        b.var[c] = ss / n[c];
        max_var = std::max(max_var, b.var[c]);
      }
    }
    blocks.push_back(std::move(b));
  }
  // Variance floor keeps constant features finite.
  const double floor = 1e-9 * max_var + 1e-9;
  for (auto& b : blocks)
    if (!b.slot.categorical)
      for (double& v : b.var) v += floor;
  const double total = n[0] + n[1];
  return std::make_shared<NaiveBayesModel>(X.front().size(), std::move(blocks),
                                           std::log(n[0] / total),
                                           std::log(n[1] / total), ordinal, o.psi);
}

PredictorPtr fit_mlp(const std::vector<Vec>& X, const std::vector<int>& y,
                     const Rows& rows, const TrainOptions& o, Rng& rng) {
  const std::size_t d = X.front().size();
  const std::size_t h = static_cast<std::size_t>(std::max(1, o.hidden));
  const int epochs = o.epochs > 0 ? o.epochs : 4000;
  const double lr = o.learning_rate > 0 ? o.learning_rate : 0.3;
  std::normal_distribution<double> n01(0.0, 1.0);
  Vec w1(h * d), b1(h, 0.0), w2(h);
  for (double& v : w1) v = n01(rng) / std::sqrt(static_cast<double>(d));
  for (double& v : w2) v = n01(rng) / std::sqrt(static_cast<double>(h));
  double b2 = 0.0;
  Vec vw1(h * d, 0.0), vb1(h, 0.0), vw2(h, 0.0);
  double vb2 = 0.0;
  Vec gw1(h * d), gb1(h), gw2(h), act(h);
  const double n = static_cast<double>(rows.size());
  for (int e = 0; e < epochs; ++e) {
    std::fill(gw1.begin(), gw1.end(), 0.0);
    std::fill(gb1.begin(), gb1.end(), 0.0);
    std::fill(gw2.begin(), gw2.end(), 0.0);
    double gb2 = 0.0;
    for (std::size_t r : rows) {
      const Vec& x = X[r];
      double z = b2;
      for (std::size_t j = 0; j < h; ++j) {
        act[j] = std::tanh(b1[j] + dot(std::span<const double>(w1.data() + j * d, d), x));
        z += w2[j] * act[j];
      }
      const double err = sigmoid(z) - y[r];
      gb2 += err;
      for (std::size_t j = 0; j < h; ++j) {
        gw2[j] += err * act[j];
        const double dz = err * w2[j] * (1.0 - act[j] * act[j]);
        gb1[j] += dz;
        double* row = gw1.data() + j * d;
        for (std::size_t i = 0; i < d; ++i) row[i] += dz * x[i];
      }
    }
    for (std::size_t k = 0; k < h * d; ++k) {
      vw1[k] = 0.9 * vw1[k] - lr * (gw1[k] / n + o.l2 * w1[k]);
      w1[k] += vw1[k];
    }
    for (std::size_t j = 0; j < h; ++j) {
      vb1[j] = 0.9 * vb1[j] - lr * gb1[j] / n;
      b1[j] += vb1[j];
      vw2[j] = 0.9 * vw2[j] - lr * (gw2[j] / n + o.l2 * w2[j]);
      w2[j] += vw2[j];
    }
    vb2 = 0.9 * vb2 - lr * gb2 / n;
    b2 += vb2;
  }
  return std::make_shared<MlpModel>(d, h, std::move(w1), std::move(b1),
                                    std::move(w2), b2, o.psi);
}

}  // namespace

double accuracy(const Predictor& model, const std::vector<Vec>& X,
                const std::vector<int>& y) {
  if (X.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < X.size(); ++i) hits += model.label(X[i]) == y[i];
  return static_cast<double>(hits) / static_cast<double>(X.size());
}

TrainResult train(const std::vector<Vec>& X, const std::vector<int>& y,
                  const Encoder& encoder, const TrainOptions& options,
                  std::uint64_t seed) {
  if (X.empty() || X.size() != y.size())
    throw ValidationError("training needs a non-empty labelled dataset");
  const auto positives = std::count(y.begin(), y.end(), 1);
  if (positives == 0 || positives == static_cast<long>(y.size()))
    throw ValidationError("training data contains a single class", "label");

  Rng rng(seed);
  Rows order(X.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_hold = static_cast<std::size_t>(
      std::floor(options.holdout_fraction * static_cast<double>(X.size())));
  Rows fit_rows(order.begin() + static_cast<long>(n_hold), order.end());
  Rows hold_rows(order.begin(), order.begin() + static_cast<long>(n_hold));
  const auto fit_pos =
      std::count_if(fit_rows.begin(), fit_rows.end(), [&](auto r) { return y[r] == 1; });
  if (fit_pos == 0 || fit_pos == static_cast<long>(fit_rows.size())) {
    fit_rows = order;
    hold_rows.clear();
  }

  TrainResult result;
  switch (options.kind) {
    case ModelKind::logistic:
      result.model = fit_logistic(X, y, fit_rows, options);
      break;
    case ModelKind::tree:
      result.model = fit_tree(X, y, fit_rows, options);
      break;
    case ModelKind::naive_bayes:
      result.model = fit_naive_bayes(X, y, fit_rows, encoder, options);
      break;
    case ModelKind::mlp:
      result.model = fit_mlp(X, y, fit_rows, options, rng);
      break;
  }
  const Rows& eval_rows = hold_rows.empty() ? fit_rows : hold_rows;
  std::size_t hits = 0;
  for (std::size_t r : eval_rows) hits += result.model->label(X[r]) == y[r];
  result.holdout_accuracy =
      static_cast<double>(hits) / static_cast<double>(eval_rows.size());
  result.train_rows = fit_rows.size();
  result.holdout_rows = hold_rows.size();
  return result;
}

TrainResult train(const EncodedDataset& data, const TrainOptions& options,
                  std::uint64_t seed) {
  return train(data.X(), data.y(), data.encoder(), options, seed);
}

PredictorPtr predictor_from_json(const json& j,
                                 const std::string& expected_schema_hash) {
  try {
    if (!expected_schema_hash.empty() &&
        j.value("schema_hash", "") != expected_schema_hash)
      throw ValidationError("model was trained for a different schema",
                            "schema_hash");
    const ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
    const double psi = j.value("psi", 0.5);
    const json& p = j.at("params");
    const auto width = j.at("width").get<std::size_t>();
    switch (kind) {
      case ModelKind::logistic:
        return std::make_shared<LogisticModel>(p.at("weights").get<Vec>(),
                                               p.at("bias").get<double>(), psi);
      case ModelKind::tree: {
        std::vector<TreeModel::Node> nodes;
        for (const auto& n : p.at("nodes")) {
          TreeModel::Node node;
          node.feature = n.at(0).get<int>();
          node.threshold = n.at(1).get<double>();
          node.left = n.at(2).get<int>();
          node.right = n.at(3).get<int>();
          node.positives = n.at(4).get<double>();
          node.count = n.at(5).get<double>();
          nodes.push_back(node);
        }
        return std::make_shared<TreeModel>(width, std::move(nodes), psi);
      }
      case ModelKind::naive_bayes: {
        std::vector<NaiveBayesModel::Block> blocks;
        for (const auto& b : p.at("blocks")) {
          NaiveBayesModel::Block blk;
          blk.slot.offset = b.at("offset").get<std::size_t>();
          blk.slot.width = b.at("width").get<std::size_t>();
          blk.slot.categorical = b.at("categorical").get<bool>();
          blk.slot.n_levels = b.at("n_levels").get<std::size_t>();
          blk.slot.origin = b.at("origin").get<double>();
          blk.slot.span = b.at("span").get<double>();
          for (int c = 0; c < 2; ++c) {
            blk.mean[c] = b.at("mean").at(c).get<double>();
            blk.var[c] = b.at("var").at(c).get<double>();
            blk.log_prob[c] = b.at("log_prob").at(c).get<Vec>();
          }
          blocks.push_back(std::move(blk));
        }
        return std::make_shared<NaiveBayesModel>(
            width, std::move(blocks), p.at("log_prior").at(0).get<double>(),
            p.at("log_prior").at(1).get<double>(), p.at("ordinal").get<bool>(), psi);
      }
      case ModelKind::mlp:
        return std::make_shared<MlpModel>(
            width, p.at("hidden").get<std::size_t>(), p.at("w1").get<Vec>(),
            p.at("b1").get<Vec>(), p.at("w2").get<Vec>(), p.at("b2").get<double>(),
            psi);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what(), "model");
  }
  throw ValidationError("unknown model kind", "kind");
}

PredictorPtr load_predictor(const std::string& path,
                            const std::string& expected_schema_hash) {
  return predictor_from_json(read_json_file(path), expected_schema_hash);
}

}  // namespace evenif
