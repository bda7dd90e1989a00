#include "evenif/explanation.hpp"

#include <cmath>
#include <sstream>

#include "evenif/error.hpp"

namespace evenif {

namespace {

std::string fmt_number(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  os << v;
  std::string s = os.str();
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

}  // namespace

void Deadline::check() const {
  if (expired()) throw TimeoutError();
}

std::vector<Vec> ExplanationSet::states() const {
  std::vector<Vec> out;
  for (const auto& it : items) out.push_back(it.theta);
  return out;
}

json action_deltas(const ActionSpace& space, const Vec& values) {
  json out = json::object();
  const Encoder& enc = space.encoder();
  const auto& genes = space.genes();
  for (std::size_t g = 0; g < genes.size(); ++g) {
    const Gene& gene = genes[g];
    const std::string& name = enc.schema().features[gene.feature].name;
    double delta;
    if (gene.discrete || enc.slots()[gene.feature].categorical)
      delta = std::round((values[g] - gene.origin) *
                         (gene.discrete ? 1.0 : enc.slots()[gene.feature].span));
    else
      delta = enc.unscale(gene.feature, values[g]) - enc.unscale(gene.feature, gene.origin);
    out[name] = delta;
  }
  return out;
}

std::string render_sentence(const ActionSpace& space, const ExplanationItem& item,
                            const std::string& positive_label_meaning) {
  const Encoder& enc = space.encoder();
  const auto& genes = space.genes();
  const Record before = enc.decode(space.x());
  const Record after = enc.decode(space.apply(item.action));
  std::vector<std::string> parts;
  for (const Gene& gene : genes) {
    const FeatureSpec& f = enc.schema().features[gene.feature];
    const Value& a = before.at(f.name);
    const Value& b = after.at(f.name);
    if (f.categorical()) {
      const auto& from = std::get<std::string>(a);
      const auto& to = std::get<std::string>(b);
      if (from != to) parts.push_back("change " + f.name + " from " + from + " to " + to);
    } else {
      const double d = std::get<double>(b) - std::get<double>(a);
      if (std::abs(d) < 1e-9 * std::max(1.0, enc.slots()[gene.feature].span)) continue;
      parts.push_back((d > 0 ? "increase " : "decrease ") + f.name + " by " +
                      fmt_number(std::abs(d)));
    }
  }
  std::string s = "Even if you ";
  if (parts.empty()) {
    s += "change nothing";
  } else {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) s += i + 1 == parts.size() ? " and " : ", ";
      s += parts[i];
    }
  }
  s += ", you would still get: " +
       (positive_label_meaning.empty() ? std::string("the positive outcome")
                                       : positive_label_meaning);
  return s + ".";
}

json ExplanationSet::to_json(const ActionSpace& space,
                             const std::string& positive_label_meaning) const {
  json arr = json::array();
  for (const auto& it : items) {
    arr.push_back({{"action", action_deltas(space, it.action)},
                   {"semifactual", record_to_json(space.encoder().decode(it.theta))},
                   {"gain", it.gain},
                   {"plausibility", it.plausibility},
                   {"robustness_mc", it.robustness_mc},
                   {"robust_label", it.robust_label},
                   {"score", it.score},
                   {"objective", it.objective},
                   {"sentence", render_sentence(space, it, positive_label_meaning)}});
  }
  return {{"method", method},
          {"seed", seed},
          {"m", m},
          {"diversity", diversity},
          {"items", arr},
          {"individual", record_to_json(space.encoder().decode(space.x()))},
          {"no_effective_semifactual", no_effective_semifactual},
          {"warnings", warnings},
          {"config", config}};
}

}  // namespace evenif
