#include "evenif/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "evenif/error.hpp"

namespace evenif {

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char c;
  auto end_row = [&] {
    if (field_started || !row.empty()) {
      row.push_back(field);
      rows.push_back(std::move(row));
    }
    row.clear();
    field.clear();
    field_started = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(field);
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  end_row();
  return rows;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

int parse_label(const std::string& s, long row, const std::string& column) {
  const std::string t = trim(s);
  if (t == "1" || t == "true" || t == "True" || t == "yes") return 1;
  if (t == "0" || t == "false" || t == "False" || t == "no") return 0;
  double v;
  if (parse_double(t, v) && (v == 0.0 || v == 1.0)) return static_cast<int>(v);
  throw ValidationError("row " + std::to_string(row) + ": label '" + t +
                            "' is not binary",
                        column, row);
}

}  // namespace

Dataset parse_dataset(std::istream& in, const FeatureSchema& schema) {
  schema.validate();
  const auto table = parse_csv(in);
  if (table.empty()) throw ValidationError("no data rows");
  const auto& header = table.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (!col.emplace(name, i).second)
      throw ValidationError("duplicate column '" + name + "'", name);
  }
  for (const auto& f : schema.features)
    if (!col.count(f.name))
      throw ValidationError("missing column '" + f.name + "'", f.name);
  if (!col.count(schema.label))
    throw ValidationError("missing label column '" + schema.label + "'",
                          schema.label);
  for (const auto& [name, _] : col)
    if (name != schema.label && name != "id" && !schema.find(name))
      throw ValidationError("unknown column '" + name + "'", name);
  if (table.size() < 2) throw ValidationError("no data rows");

  Dataset d;
  d.schema = schema;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const long row = static_cast<long>(r - 1);
    const auto& cells = table[r];
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(row) + ": expected " +
                                std::to_string(header.size()) + " fields, got " +
                                std::to_string(cells.size()),
                            {}, row);
    Record rec;
    for (const auto& f : schema.features) {
      const std::string cell = trim(cells[col[f.name]]);
      if (f.categorical()) {
        if (f.level_index(cell) < 0)
          throw ValidationError("row " + std::to_string(row) + ": feature '" +
                                    f.name + "' has unknown level '" + cell + "'",
                                f.name, row);
        rec[f.name] = cell;
      } else {
        double v;
        if (!parse_double(cell, v))
          throw ValidationError("row " + std::to_string(row) + ": feature '" +
                                    f.name + "' is not numeric: '" + cell + "'",
                                f.name, row);
        rec[f.name] = v;
      }
    }
    d.labels.push_back(parse_label(cells[col[schema.label]], row, schema.label));
    d.ids.push_back(col.count("id") ? trim(cells[col["id"]]) : std::to_string(row));
    d.rows.push_back(std::move(rec));
  }
  return d;
}

Dataset load_dataset(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'", path);
  return parse_dataset(in, schema);
}

void write_dataset_csv(const Dataset& d, std::ostream& out) {
  for (const auto& f : d.schema.features) out << csv_escape(f.name) << ',';
  out << csv_escape(d.schema.label) << '\n';
  std::ostringstream num;
  num << std::setprecision(10);
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    for (const auto& f : d.schema.features) {
      const Value& v = d.rows[r].at(f.name);
      if (const auto* s = std::get_if<std::string>(&v)) {
        out << csv_escape(*s);
      } else {
        num.str({});
        num << std::get<double>(v);
        out << num.str();
      }
      out << ',';
    }
    out << d.labels[r] << '\n';
  }
}

EncodedDataset::EncodedDataset(Dataset data, CategoricalEncoding encoding)
    : data_(std::move(data)),
      encoder_(Encoder::fit(data_.schema, data_.rows, encoding)) {
  X_.reserve(data_.rows.size());
  for (const auto& r : data_.rows) X_.push_back(encoder_.encode(r));
}

Individual EncodedDataset::individual(std::size_t row) const {
  return {data_.ids.at(row), data_.rows.at(row), X_.at(row)};
}

std::optional<std::size_t> EncodedDataset::row_of(const std::string& id) const {
  for (std::size_t i = 0; i < data_.ids.size(); ++i)
    if (data_.ids[i] == id) return i;
  return std::nullopt;
}

}  // namespace evenif
