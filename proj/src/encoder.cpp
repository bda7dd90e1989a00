#include "evenif/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evenif/error.hpp"

namespace evenif {

json record_to_json(const Record& r) {
  json j = json::object();
  for (const auto& [k, v] : r) {
    if (std::holds_alternative<double>(v))
      j[k] = std::get<double>(v);
    else
      j[k] = std::get<std::string>(v);
  }
  return j;
}

Record record_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record must be a JSON object", "record");
  Record r;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number())
      r[k] = v.get<double>();
    else if (v.is_string())
      r[k] = v.get<std::string>();
    else
      throw ValidationError("value of '" + k + "' must be a number or string", k);
  }
  return r;
}

CategoricalEncoding encoding_from_string(const std::string& s) {
  if (s == "one_hot" || s == "onehot" || s == "one-hot")
    return CategoricalEncoding::one_hot;
  if (s == "ordinal" || s == "real") return CategoricalEncoding::ordinal;
  throw ValidationError("unknown encoding '" + s + "'", "encoding");
}

std::string to_string(CategoricalEncoding e) {
  return e == CategoricalEncoding::one_hot ? "one_hot" : "ordinal";
}

Encoder::Encoder(FeatureSchema schema, CategoricalEncoding encoding,
                 std::vector<Bounds> ranges)
    : schema_(std::move(schema)), encoding_(encoding), ranges_(std::move(ranges)) {
  schema_.validate();
  if (ranges_.size() != schema_.size())
    throw ValidationError("encoder needs one range per feature");
  std::size_t off = 0;
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    const auto& f = schema_.features[i];
    Slot s;
    s.offset = off;
    s.categorical = f.categorical();
    if (f.categorical()) {
      s.n_levels = f.levels.size();
      s.width = encoding_ == CategoricalEncoding::one_hot ? s.n_levels : 1;
      s.origin = 0.0;
      s.span = std::max<double>(1.0, static_cast<double>(s.n_levels) - 1.0);
    } else {
      s.origin = ranges_[i].lo;
      const double sp = ranges_[i].hi - ranges_[i].lo;
      s.span = sp > 0.0 ? sp : 1.0;
    }
    for (std::size_t c = 0; c < s.width; ++c) coord_feature_.push_back(i);
    if (!f.categorical() || encoding_ == CategoricalEncoding::ordinal)
      real_coords_.push_back(off);
    off += s.width;
    slots_.push_back(s);
  }
  width_ = off;
}

Encoder Encoder::fit(const FeatureSchema& schema, const std::vector<Record>& rows,
                     CategoricalEncoding encoding) {
  std::vector<Bounds> ranges(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.features[i];
    if (f.categorical()) {
      ranges[i] = {0.0, static_cast<double>(f.levels.size()) - 1.0};
      continue;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : rows) {
      auto it = r.find(f.name);
      if (it == r.end() || !std::holds_alternative<double>(it->second)) continue;
      lo = std::min(lo, std::get<double>(it->second));
      hi = std::max(hi, std::get<double>(it->second));
    }
    if (!std::isfinite(lo)) {
      if (f.bounds) {
        lo = f.bounds->lo;
        hi = f.bounds->hi;
      } else {
        lo = 0.0;
        hi = 1.0;
      }
    }
    ranges[i] = {lo, hi};
  }
  return Encoder(schema, encoding, std::move(ranges));
}

double Encoder::scale(std::size_t feature, double raw) const {
  const Slot& s = slots_[feature];
  return (raw - s.origin) / s.span;
}

double Encoder::unscale(std::size_t feature, double scaled) const {
  const Slot& s = slots_[feature];
  return scaled * s.span + s.origin;
}

Vec Encoder::encode(const Record& r) const {
  Vec x(width_, 0.0);
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    const auto& f = schema_.features[i];
    const Slot& s = slots_[i];
    auto it = r.find(f.name);
    if (it == r.end())
      throw ValidationError("record is missing feature '" + f.name + "'", f.name);
    if (f.categorical()) {
      int level = -1;
      if (const auto* str = std::get_if<std::string>(&it->second)) {
        level = f.level_index(*str);
      } else {
        // Numeric cells are accepted when they spell a level name.
        const double v = std::get<double>(it->second);
        for (std::size_t l = 0; l < f.levels.size() && level < 0; ++l) {
          char* end = nullptr;
          const double lv = std::strtod(f.levels[l].c_str(), &end);
          if (end && *end == '\0' && lv == v) level = static_cast<int>(l);
        }
      }
      if (level < 0)
        throw ValidationError("unknown level for feature '" + f.name + "'", f.name);
      if (encoding_ == CategoricalEncoding::one_hot)
        x[s.offset + static_cast<std::size_t>(level)] = 1.0;
      else
        x[s.offset] = scale(i, level);
    } else {
      const auto* v = std::get_if<double>(&it->second);
      if (!v || !std::isfinite(*v))
        throw ValidationError("non-numeric value for feature '" + f.name + "'",
                              f.name);
      x[s.offset] = scale(i, *v);
    }
  }
  return x;
}

int Encoder::level_of(std::size_t feature, std::span<const double> x) const {
  const Slot& s = slots_[feature];
  if (!s.categorical) return -1;
  if (encoding_ == CategoricalEncoding::ordinal) {
    const double raw = std::round(unscale(feature, x[s.offset]));
    return static_cast<int>(
        std::clamp(raw, 0.0, static_cast<double>(s.n_levels - 1)));
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < s.width; ++l)
    if (x[s.offset + l] > x[s.offset + best]) best = l;
  return static_cast<int>(best);
}

double Encoder::feature_delta(std::size_t feature, std::span<const double> x,
                              std::span<const double> y) const {
  const Slot& s = slots_[feature];
  if (s.categorical && encoding_ == CategoricalEncoding::one_hot)
    return static_cast<double>(level_of(feature, y) - level_of(feature, x));
  return y[s.offset] - x[s.offset];
}

Record Encoder::decode(std::span<const double> x) const {
  if (x.size() != width_)
    throw ValidationError("vector width " + std::to_string(x.size()) +
                          " does not match schema width " +
                          std::to_string(width_));
  Record r;
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    const auto& f = schema_.features[i];
    if (f.categorical())
      r[f.name] = f.levels[static_cast<std::size_t>(level_of(i, x))];
    else
      r[f.name] = unscale(i, x[slots_[i].offset]);
  }
  return r;
}

Bounds Encoder::coord_bounds(std::size_t coord) const {
  const std::size_t i = coord_feature_[coord];
  const auto& f = schema_.features[i];
  if (f.categorical() && encoding_ == CategoricalEncoding::one_hot) return {0.0, 1.0};
  if (f.bounds) return {scale(i, f.bounds->lo), scale(i, f.bounds->hi)};
  if (f.categorical()) return {0.0, 1.0};
  return {0.0, 1.0};
}

json Encoder::to_json() const {
  json r = json::array();
  for (const auto& b : ranges_) r.push_back({b.lo, b.hi});
  return {{"schema", schema_.to_json()},
          {"encoding", to_string(encoding_)},
          {"ranges", r}};
}

Encoder Encoder::from_json(const json& j) {
  std::vector<Bounds> ranges;
  for (const auto& b : j.at("ranges"))
    ranges.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  return Encoder(FeatureSchema::from_json(j.at("schema")),
                 encoding_from_string(j.at("encoding").get<std::string>()),
                 std::move(ranges));
}

}  // namespace evenif
