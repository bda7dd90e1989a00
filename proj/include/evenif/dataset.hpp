#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "evenif/encoder.hpp"

namespace evenif {

// Splits RFC-4180 CSV text into rows of fields (quoted fields, doubled quotes,
// CRLF or LF line ends). Blank lines are skipped.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);
std::string csv_escape(const std::string& field);

struct Individual {
  std::string id;
  Record raw;
  Vec x;
};

// Raw rows plus binary labels, validated against a schema.
struct Dataset {
  FeatureSchema schema;
  std::vector<std::string> ids;
  std::vector<Record> rows;
  std::vector<int> labels;

  std::size_t size() const noexcept { return rows.size(); }
};

// Header must name every feature plus the label column, in any order. Throws
// ValidationError with the 0-based data row index on the first bad row.
Dataset load_dataset(const std::string& path, const FeatureSchema& schema);
Dataset parse_dataset(std::istream& in, const FeatureSchema& schema);
void write_dataset_csv(const Dataset& d, std::ostream& out);

// A dataset together with its fitted encoder and encoded design matrix.
class EncodedDataset {
 public:
  EncodedDataset(Dataset data, CategoricalEncoding encoding);

  const Dataset& data() const noexcept { return data_; }
  const Encoder& encoder() const noexcept { return encoder_; }
  const FeatureSchema& schema() const noexcept { return data_.schema; }
  const std::vector<Vec>& X() const noexcept { return X_; }
  const std::vector<int>& y() const noexcept { return data_.labels; }
  std::size_t size() const noexcept { return X_.size(); }
  std::size_t width() const noexcept { return encoder_.width(); }

  Individual individual(std::size_t row) const;
  std::optional<std::size_t> row_of(const std::string& id) const;

 private:
  Dataset data_;
  Encoder encoder_;
  std::vector<Vec> X_;
};

}  // namespace evenif
