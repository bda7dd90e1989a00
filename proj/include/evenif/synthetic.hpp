#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evenif/dataset.hpp"
#include "evenif/scm.hpp"

namespace evenif {

// Synthetic stand-ins for the benchmark domains. Labels are drawn from a
// fixed logistic ground truth; causal domains also carry the generating SCM
// (raw units, categorical nodes as level indices).
struct SyntheticDomain {
  std::string name;
  Dataset data;
  std::optional<Scm> scm;
  // Encoding the domain is meant to be used with.
  CategoricalEncoding encoding = CategoricalEncoding::one_hot;
};

// 3 continuous + 17 categorical features, 15 actionable.
SyntheticDomain german_like(std::size_t rows, std::uint64_t seed);
// sex, age, native-country, marital-status, education-num, hours-per-week;
// age and hours-per-week actionable.
SyntheticDomain adult_like(std::size_t rows, std::uint64_t seed);
// age, race, sex, priors_count; age and priors_count actionable.
SyntheticDomain compas_like(std::size_t rows, std::uint64_t seed);

// Dispatch by name: "german", "adult", "compas".
SyntheticDomain synthetic_domain(const std::string& name, std::size_t rows,
                                 std::uint64_t seed);
std::vector<std::string> synthetic_domain_names();

// Writes <dir>/<name>.csv, <name>.schema.json and, for causal domains,
// <name>.scm.json.
void write_domain(const SyntheticDomain& d, const std::string& dir);

}  // namespace evenif
