#include "evenif/schema.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>

#include "evenif/error.hpp"

namespace evenif {

int FeatureSpec::level_index(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return static_cast<int>(i);
  return -1;
}

Direction direction_from_string(const std::string& s) {
  if (s == "increase" || s == "increase-only") return Direction::increase;
  if (s == "decrease" || s == "decrease-only") return Direction::decrease;
  if (s == "both") return Direction::both;
  if (s == "frozen") return Direction::frozen;
  throw ValidationError("unknown direction '" + s + "'", "direction");
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::increase:
      return "increase";
    case Direction::decrease:
      return "decrease";
    case Direction::both:
      return "both";
    case Direction::frozen:
      return "frozen";
  }
  return "frozen";
}

Polarity polarity_from_string(const std::string& s) {
  if (s == "positive") return Polarity::positive;
  if (s == "negative") return Polarity::negative;
  if (s == "neutral") return Polarity::neutral;
  throw ValidationError("unknown polarity '" + s + "'", "polarity");
}

std::string to_string(Polarity p) {
  switch (p) {
    case Polarity::positive:
      return "positive";
    case Polarity::negative:
      return "negative";
    case Polarity::neutral:
      return "neutral";
  }
  return "neutral";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'", path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("invalid JSON in '" + path + "': " + e.what(), path);
  }
}

void FeatureSchema::validate() const {
  if (features.empty()) throw ValidationError("schema has no features");
  if (!(psi > 0.0 && psi < 1.0))
    throw ValidationError("psi must lie in (0,1)", "psi");
  std::set<std::string> names;
  for (const auto& f : features) {
    if (f.name.empty()) throw ValidationError("feature with empty name");
    if (!names.insert(f.name).second)
      throw ValidationError("duplicate feature '" + f.name + "'", f.name);
    if (f.name == label)
      throw ValidationError("label column collides with feature", f.name);
    if (f.categorical()) {
      if (f.levels.empty())
        throw ValidationError("categorical feature '" + f.name +
                                  "' has no levels",
                              f.name);
      std::set<std::string> lv(f.levels.begin(), f.levels.end());
      if (lv.size() != f.levels.size())
        throw ValidationError("duplicate level in '" + f.name + "'", f.name);
    }
    if (f.bounds) {
      if (!(f.bounds->lo <= f.bounds->hi) || !std::isfinite(f.bounds->lo) ||
          !std::isfinite(f.bounds->hi))
        throw ValidationError("bounds of '" + f.name + "' are not ordered",
                              f.name);
      if (f.categorical() &&
          (f.bounds->lo < 0 ||
           f.bounds->hi > static_cast<double>(f.levels.size() - 1)))
        throw ValidationError(
            "level bounds of '" + f.name + "' exceed the level list", f.name);
    }
    if (f.max_delta && !(*f.max_delta > 0.0))
      throw ValidationError("max_delta of '" + f.name + "' must be positive",
                            f.name);
    if (f.actionable) {
      if (f.direction == Direction::frozen)
        throw ValidationError(
            "feature '" + f.name + "' is actionable but frozen", f.name);
      if (f.bounds && !(f.bounds->hi > f.bounds->lo))
        throw ValidationError(
            "feature '" + f.name + "' is actionable with degenerate bounds",
            f.name);
      if (f.categorical() && f.levels.size() < 2)
        throw ValidationError(
            "categorical feature '" + f.name + "' needs two levels to act on",
            f.name);
    }
  }
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i)
    if (features[i].name == name) return i;
  return std::nullopt;
}

std::size_t FeatureSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw NotFound("feature '" + std::string(name) + "'");
}

namespace {

Bounds bounds_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number())
    throw ValidationError("bounds of '" + name + "' must be [lo, hi]", name);
  return {j[0].get<double>(), j[1].get<double>()};
}

FeatureSpec feature_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("feature entry must be an object");
  FeatureSpec f;
  if (!j.contains("name") || !j["name"].is_string())
    throw ValidationError("feature entry without a name");
  f.name = j["name"].get<std::string>();
  try {
    const std::string kind = j.value("kind", "continuous");
    if (kind == "continuous") {
      f.kind = FeatureKind::continuous;
    } else if (kind == "categorical") {
      f.kind = FeatureKind::categorical;
      if (!j.contains("levels") || !j["levels"].is_array())
        throw ValidationError("categorical feature needs levels", f.name);
      for (const auto& l : j["levels"]) {
        if (l.is_string())
          f.levels.push_back(l.get<std::string>());
        else
          f.levels.push_back(l.dump());
      }
    } else {
      throw ValidationError("unknown kind '" + kind + "'", f.name);
    }
    f.actionable = j.value("actionable", false);
    f.direction = direction_from_string(
        j.value("direction", f.actionable ? "both" : "frozen"));
    if (j.contains("bounds") && !j["bounds"].is_null())
      f.bounds = bounds_from_json(j["bounds"], f.name);
    if (j.contains("max_delta") && !j["max_delta"].is_null())
      f.max_delta = j["max_delta"].get<double>();
    f.polarity = polarity_from_string(j.value("polarity", "neutral"));
  } catch (const json::exception& e) {
    throw ValidationError("feature '" + f.name + "': " + e.what(), f.name);
  } catch (const ValidationError& e) {
    throw ValidationError("feature '" + f.name + "': " + e.what(), f.name);
  }
  return f;
}

json feature_to_json(const FeatureSpec& f) {
  json j;
  j["name"] = f.name;
  j["kind"] = f.categorical() ? "categorical" : "continuous";
  if (f.categorical()) j["levels"] = f.levels;
  j["actionable"] = f.actionable;
  j["direction"] = to_string(f.direction);
  j["bounds"] = f.bounds ? json::array({f.bounds->lo, f.bounds->hi}) : json();
  if (f.max_delta) j["max_delta"] = *f.max_delta;
  j["polarity"] = to_string(f.polarity);
  return j;
}

}  // namespace

FeatureSchema FeatureSchema::from_json(const json& j) {
  if (!j.is_object() || !j.contains("features") || !j["features"].is_array())
    throw ValidationError("schema needs a \"features\" array", "features");
  FeatureSchema s;
  for (const auto& f : j["features"]) s.features.push_back(feature_from_json(f));
  s.label = j.value("label", "label");
  if (j.contains("psi")) {
    if (!j["psi"].is_number()) throw ValidationError("psi must be a number", "psi");
    s.psi = j["psi"].get<double>();
  }
  s.positive_label_meaning = j.value("positive_label_meaning", "");
  s.validate();
  return s;
}

json FeatureSchema::to_json() const {
  json j;
  j["features"] = json::array();
  for (const auto& f : features) j["features"].push_back(feature_to_json(f));
  j["label"] = label;
  j["psi"] = psi;
  if (!positive_label_meaning.empty())
    j["positive_label_meaning"] = positive_label_meaning;
  return j;
}

std::string FeatureSchema::hash() const {
  // Only the encoded layout matters for model compatibility.
  json j = json::array();
  for (const auto& f : features)
    j.push_back({f.name, f.categorical() ? "categorical" : "continuous",
                 f.levels});
  const std::string text = j.dump() + "|" + label;
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FeatureSchema load_schema(const std::string& path) {
  return FeatureSchema::from_json(read_json_file(path));
}

FeatureSchema apply_overrides(const FeatureSchema& schema,
                              const json& overrides) {
  if (overrides.is_null()) return schema;
  if (!overrides.is_object())
    throw ValidationError("overrides must be an object keyed by feature",
                          "overrides");
  FeatureSchema out = schema;
  for (const auto& [name, o] : overrides.items()) {
    auto idx = out.find(name);
    if (!idx) throw ValidationError("unknown feature '" + name + "'", name);
    FeatureSpec& f = out.features[*idx];
    try {
      if (o.contains("actionable")) f.actionable = o["actionable"].get<bool>();
      if (o.contains("direction"))
        f.direction = direction_from_string(o["direction"].get<std::string>());
      if (o.contains("polarity"))
        f.polarity = polarity_from_string(o["polarity"].get<std::string>());
      if (o.contains("max_delta"))
        f.max_delta = o["max_delta"].is_null()
                          ? std::nullopt
                          : std::optional<double>(o["max_delta"].get<double>());
      if (o.contains("bounds")) {
        if (f.direction == Direction::frozen)
          throw ValidationError(
              "feature '" + name + "' is frozen; its bounds cannot change",
              name);
        f.bounds = bounds_from_json(o["bounds"], name);
      }
      if (o.contains("direction") && f.direction == Direction::frozen)
        f.actionable = o.value("actionable", false);
      if (o.contains("actionable") && f.actionable &&
          f.direction == Direction::frozen && !o.contains("direction"))
        f.direction = Direction::both;
    } catch (const json::exception& e) {
      throw ValidationError("override for '" + name + "': " + e.what(), name);
    }
  }
  out.validate();
  return out;
}

}  // namespace evenif
