#include "evenif/scm.hpp"

#include <algorithm>
#include <map>

#include "evenif/error.hpp"

namespace evenif {

Scm::Scm(std::vector<ScmNode> nodes) : nodes_(std::move(nodes)) {
  const std::size_t n = nodes_.size();
  children_.assign(n, {});
  std::vector<int> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const ScmNode& node = nodes_[i];
    if (node.weights.size() != node.parents.size())
      throw ValidationError("node '" + node.name +
                                "' needs one weight per parent",
                            node.name);
    for (std::size_t p : node.parents) {
      if (p >= n)
        throw ValidationError("node '" + node.name + "' has an unknown parent",
                              node.name);
      if (p == i)
        throw ValidationError("cycle detected at node '" + node.name + "'",
                              node.name);
      children_[p].push_back(i);
      ++indegree[i];
    }
  }
  // Kahn's algorithm; ties resolved by node index for a stable order.
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    const auto it = std::min_element(ready.begin(), ready.end());
    const std::size_t v = *it;
    ready.erase(it);
    order_.push_back(v);
    for (std::size_t c : children_[v])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (order_.size() != n) {
    for (std::size_t i = 0; i < n; ++i)
      if (indegree[i] > 0)
        throw ValidationError("cycle detected at node '" + nodes_[i].name + "'",
                              nodes_[i].name);
  }
}

Scm Scm::from_json(const json& j) {
  try {
    const json& arr = j.at("nodes");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto name = arr[i].at("name").get<std::string>();
      if (!index.emplace(name, i).second)
        throw ValidationError("duplicate node '" + name + "'", name);
    }
    std::vector<ScmNode> nodes;
    for (const auto& jn : arr) {
      ScmNode node;
      node.name = jn.at("name").get<std::string>();
      for (const auto& p : jn.value("parents", json::array())) {
        const auto pname = p.get<std::string>();
        const auto it = index.find(pname);
        if (it == index.end())
          throw ValidationError("node '" + node.name + "' has unknown parent '" +
                                    pname + "'",
                                node.name);
        node.parents.push_back(it->second);
      }
      node.weights = jn.value("weights", Vec{});
      node.intercept = jn.value("intercept", 0.0);
      node.noise = jn.value("noise", 1.0);
      nodes.push_back(std::move(node));
    }
    return Scm(std::move(nodes));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed SCM config: ") + e.what(), "scm");
  }
}

json Scm::to_json() const {
  json arr = json::array();
  for (const auto& n : nodes_) {
    json parents = json::array();
    for (std::size_t p : n.parents) parents.push_back(nodes_[p].name);
    arr.push_back({{"name", n.name},
                   {"parents", parents},
                   {"weights", n.weights},
                   {"intercept", n.intercept},
                   {"noise", n.noise}});
  }
  return {{"nodes", arr}};
}

Scm Scm::independent(std::vector<std::string> names) {
  std::vector<ScmNode> nodes;
  for (auto& name : names) {
    ScmNode n;
    n.name = std::move(name);
    nodes.push_back(std::move(n));
  }
  return Scm(std::move(nodes));
}

std::size_t Scm::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name) return i;
  throw NotFound("SCM node '" + name + "'");
}

namespace {

void check_width(std::size_t got, std::size_t want) {
  if (got != want)
    throw ValidationError("vector width " + std::to_string(got) +
                          " does not match SCM size " + std::to_string(want));
}

}  // namespace

Vec Scm::abduct(std::span<const double> x) const {
  check_width(x.size(), size());
  Vec u(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const ScmNode& n = nodes_[i];
    double g = n.intercept;
    for (std::size_t k = 0; k < n.parents.size(); ++k)
      g += n.weights[k] * x[n.parents[k]];
    u[i] = x[i] - g;
  }
  return u;
}

Vec Scm::push(std::span<const double> u) const {
  check_width(u.size(), size());
  Vec x(size());
  for (std::size_t i : order_) {
    const ScmNode& n = nodes_[i];
    double g = n.intercept;
    for (std::size_t k = 0; k < n.parents.size(); ++k)
      g += n.weights[k] * x[n.parents[k]];
    x[i] = g + u[i];
  }
  return x;
}

Vec Scm::process_semifactual(std::span<const double> x,
                             std::span<const Intervention> interventions) const {
  const Vec u = abduct(x);
  std::vector<char> fixed(size(), 0);
  Vec out(size());
  for (const auto& [node, value] : interventions) {
    if (node >= size())
      throw ValidationError("intervention on unknown node " + std::to_string(node));
    fixed[node] = 1;
    out[node] = value;
  }
  // Nodes outside the intervened nodes' descendants keep their observed value
  // exactly.
  std::vector<char> moved = fixed;
  for (std::size_t i : order_) {
    if (fixed[i]) continue;
    const ScmNode& n = nodes_[i];
    bool downstream = false;
    for (std::size_t p : n.parents) downstream = downstream || moved[p];
    if (!downstream) {
      out[i] = x[i];
      continue;
    }
    moved[i] = 1;
    double g = n.intercept;
    for (std::size_t k = 0; k < n.parents.size(); ++k)
      g += n.weights[k] * out[n.parents[k]];
    out[i] = g + u[i];
  }
  return out;
}

std::vector<Vec> Scm::jacobian(std::span<const std::size_t> intervened) const {
  std::vector<char> fixed(size(), 0);
  for (std::size_t k : intervened) fixed.at(k) = 1;
  std::vector<Vec> J(size(), Vec(intervened.size(), 0.0));
  for (std::size_t c = 0; c < intervened.size(); ++c) J[intervened[c]][c] = 1.0;
  for (std::size_t i : order_) {
    if (fixed[i]) continue;
    const ScmNode& n = nodes_[i];
    for (std::size_t k = 0; k < n.parents.size(); ++k)
      for (std::size_t c = 0; c < intervened.size(); ++c)
        J[i][c] += n.weights[k] * J[n.parents[k]][c];
  }
  return J;
}

bool Scm::has_active_descendants(std::span<const std::size_t> intervened) const {
  std::vector<char> fixed(size(), 0), reached(size(), 0);
  for (std::size_t k : intervened) fixed.at(k) = reached[k] = 1;
  for (std::size_t i : order_) {
    if (fixed[i]) continue;
    const ScmNode& n = nodes_[i];
    for (std::size_t k = 0; k < n.parents.size(); ++k)
      if (reached[n.parents[k]] && n.weights[k] != 0.0) reached[i] = 1;
    if (reached[i]) return true;
  }
  return false;
}

std::vector<Vec> Scm::sample(std::size_t n, Rng& rng) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<Vec> out;
  out.reserve(n);
  Vec u(size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < size(); ++i) u[i] = nodes_[i].noise * n01(rng);
    out.push_back(push(u));
  }
  return out;
}

Scm Scm::bind(const Encoder& encoder) const {
  const FeatureSchema& schema = encoder.schema();
  std::vector<std::size_t> node_feature(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const auto f = schema.find(nodes_[i].name);
    if (!f)
      throw ValidationError("SCM node '" + nodes_[i].name +
                                "' is not a schema feature",
                            nodes_[i].name);
    const Slot& s = encoder.slots()[*f];
    if (s.width != 1 && (!nodes_[i].parents.empty() || !children_[i].empty()))
      throw ValidationError("one-hot feature '" + nodes_[i].name +
                                "' cannot take part in a structural equation",
                            nodes_[i].name);
    node_feature[i] = *f;
  }

  std::vector<ScmNode> out(encoder.width());
  for (std::size_t c = 0; c < encoder.width(); ++c) {
    const std::size_t f = encoder.feature_of(c);
    out[c].name = schema.features[f].name;
    const Slot& s = encoder.slots()[f];
    if (s.width > 1) out[c].name += "=" + schema.features[f].levels[c - s.offset];
  }
  for (std::size_t i = 0; i < size(); ++i) {
    const ScmNode& n = nodes_[i];
    const Slot& si = encoder.slots()[node_feature[i]];
    ScmNode& o = out[si.offset];
    double intercept = n.intercept - si.origin;
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      const Slot& sj = encoder.slots()[node_feature[n.parents[k]]];
      o.parents.push_back(sj.offset);
      o.weights.push_back(n.weights[k] * sj.span / si.span);
      intercept += n.weights[k] * sj.origin;
    }
    o.intercept = intercept / si.span;
    o.noise = n.noise / si.span;
  }
  return Scm(std::move(out));
}

Scm load_scm(const std::string& path) { return Scm::from_json(read_json_file(path)); }

}  // namespace evenif
