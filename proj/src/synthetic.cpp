#include "evenif/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "evenif/error.hpp"

namespace evenif {

namespace {

struct Cat {
  std::string name;
  std::vector<std::string> levels;
  std::vector<double> weights;  // sampling weights
  double coef = 0.0;            // logit effect per level step
  bool actionable = false;
  Direction direction = Direction::frozen;
};

FeatureSpec continuous(std::string name, Bounds b, bool actionable = false,
                       Direction dir = Direction::frozen,
                       Polarity pol = Polarity::neutral) {
  FeatureSpec f;
  f.name = std::move(name);
  f.bounds = b;
  f.actionable = actionable;
  f.direction = dir;
  f.polarity = pol;
  return f;
}

FeatureSpec categorical(std::string name, std::vector<std::string> levels,
                        bool actionable = false, Direction dir = Direction::frozen,
                        Polarity pol = Polarity::neutral) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::categorical;
  f.levels = std::move(levels);
  f.actionable = actionable;
  f.direction = dir;
  f.polarity = pol;
  return f;
}

Polarity polarity_of(Direction d) {
  if (d == Direction::increase) return Polarity::positive;
  if (d == Direction::decrease) return Polarity::negative;
  return Polarity::neutral;
}

int draw_label(double logit, Rng& rng) {
  return std::bernoulli_distribution(sigmoid(logit))(rng) ? 1 : 0;
}

std::size_t draw_level(const std::vector<double>& w, Rng& rng) {
  return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
}

std::size_t round_level(double v, std::size_t n) {
  return static_cast<std::size_t>(std::clamp(std::round(v), 0.0, static_cast<double>(n - 1)));
}

}  // namespace

SyntheticDomain german_like(std::size_t rows, std::uint64_t seed) {
  using D = Direction;
  const std::vector<Cat> cats = {
      {"status", {"negative", "low", "medium", "none"}, {27, 27, 6, 40}, 0.45, true, D::decrease},
      {"credit_history", {"critical", "delayed", "existing_paid", "all_paid", "no_credits"},
       {29, 9, 53, 5, 4}, 0.25, true, D::decrease},
      {"purpose",
       {"car_new", "car_used", "furniture", "radio_tv", "appliances", "repairs", "education",
        "retraining", "business", "other"},
       {23, 10, 18, 28, 1, 2, 5, 1, 10, 2}, 0.02, false, D::frozen},
      {"savings", {"none", "lt_100", "100_500", "500_1000", "ge_1000"}, {18, 60, 10, 6, 6}, 0.2,
       true, D::decrease},
      {"employment_duration", {"unemployed", "lt_1", "1_4", "4_7", "ge_7"}, {6, 17, 34, 17, 26},
       0.15, true, D::decrease},
      {"installment_rate", {"lt_20", "20_25", "25_35", "ge_35"}, {14, 23, 16, 47}, -0.15, true,
       D::decrease},
      {"personal_status_sex", {"male_divorced", "female", "male_single", "male_married"},
       {5, 31, 55, 9}, 0.1, false, D::frozen},
      {"other_debtors", {"none", "co_applicant", "guarantor"}, {91, 4, 5}, 0.2, true,
       D::increase},
      {"present_residence", {"lt_1", "1_4", "4_7", "ge_7"}, {13, 31, 15, 41}, 0.02, true,
       D::decrease},
      {"property", {"none", "car", "savings_insurance", "real_estate"}, {15, 33, 23, 29}, 0.15,
       true, D::decrease},
      {"other_installment_plans", {"none", "stores", "bank"}, {81, 5, 14}, -0.3, true,
       D::increase},
      {"housing", {"rent", "free", "own"}, {18, 11, 71}, 0.2, true, D::decrease},
      {"number_credits", {"1", "2_3", "4_5", "ge_6"}, {63, 33, 3, 1}, -0.1, true, D::increase},
      {"job", {"unemployed", "unskilled", "skilled", "highly_skilled"}, {2, 20, 63, 15}, 0.05,
       true, D::decrease},
      {"people_liable", {"0_2", "3_plus"}, {85, 15}, -0.05, true, D::increase},
      {"telephone", {"no", "yes"}, {60, 40}, 0.1, false, D::frozen},
      {"foreign_worker", {"no", "yes"}, {4, 96}, -0.3, false, D::frozen},
  };

  SyntheticDomain out;
  out.name = "german";
  FeatureSchema& s = out.data.schema;
  s.label = "credit_risk";
  s.positive_label_meaning = "the loan approved";
  s.features.push_back(continuous("duration", {4, 72}, true, D::increase, Polarity::positive));
  s.features.push_back(continuous("amount", {250, 18424}, true, D::increase, Polarity::positive));
  s.features.push_back(continuous("age", {19, 75}));
  for (const Cat& c : cats)
    s.features.push_back(
        categorical(c.name, c.levels, c.actionable, c.direction, polarity_of(c.direction)));

  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    Record rec;
    const double duration = std::round(std::clamp(21.0 + 12.0 * n01(rng), 4.0, 72.0));
    const double amount =
        std::round(std::clamp(std::exp(7.8 + 0.75 * n01(rng)), 250.0, 18424.0));
    const double age = std::round(std::clamp(35.0 + 11.0 * n01(rng), 19.0, 75.0));
    rec["duration"] = duration;
    rec["amount"] = amount;
    rec["age"] = age;
    double logit = 1.3 - 0.045 * (duration - 21.0) - 0.00012 * (amount - 3300.0) +
                   0.02 * (age - 35.0);
    for (const Cat& c : cats) {
      const std::size_t l = draw_level(c.weights, rng);
      rec[c.name] = c.levels[l];
      logit += c.coef * (static_cast<double>(l) - 0.5 * static_cast<double>(c.levels.size() - 1));
    }
    out.data.labels.push_back(draw_label(logit, rng));
    out.data.rows.push_back(std::move(rec));
    out.data.ids.push_back(std::to_string(r));
  }
  s.validate();
  return out;
}

SyntheticDomain adult_like(std::size_t rows, std::uint64_t seed) {
  SyntheticDomain out;
  out.name = "adult";
  out.encoding = CategoricalEncoding::ordinal;
  FeatureSchema& s = out.data.schema;
  s.label = "income";
  s.positive_label_meaning = "an income above 50K predicted";
  s.features.push_back(categorical("sex", {"female", "male"}));
  FeatureSpec age = continuous("age", {17, 90}, true, Direction::increase, Polarity::positive);
  age.max_delta = 5.0;
  s.features.push_back(age);
  s.features.push_back(categorical("native_country", {"other", "us"}));
  s.features.push_back(categorical("marital_status", {"never_married", "separated", "married"},
                                   false, Direction::frozen, Polarity::positive));
  s.features.push_back(
      continuous("education_num", {1, 16}, false, Direction::frozen, Polarity::positive));
  s.features.push_back(
      continuous("hours_per_week", {1, 99}, true, Direction::decrease, Polarity::negative));

  // sex, age, native_country, marital_status, education_num, hours_per_week
  std::vector<ScmNode> nodes(6);
  nodes[0] = {"sex", {}, {}, 0.67, 0.47};
  nodes[1] = {"age", {}, {}, 38.0, 13.0};
  nodes[2] = {"native_country", {}, {}, 0.9, 0.3};
  nodes[3] = {"marital_status", {0, 1, 2}, {0.3, 0.035, 0.1}, -0.4, 0.6};
  nodes[4] = {"education_num", {0, 1, 2, 3}, {0.4, 0.04, 0.8, 0.6}, 6.0, 2.5};
  nodes[5] = {"hours_per_week", {0, 1, 2, 3, 4}, {4.0, -0.25, -1.0, 1.0, 0.3}, 42.0, 10.0};
  out.scm = Scm(nodes);

  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double sex = std::bernoulli_distribution(0.67)(rng) ? 1.0 : 0.0;
    const double a = std::round(std::clamp(38.0 + 13.0 * n01(rng), 17.0, 90.0));
    const double native = std::bernoulli_distribution(0.9)(rng) ? 1.0 : 0.0;
    const double marital = static_cast<double>(
        round_level(-0.4 + 0.3 * sex + 0.035 * a + 0.1 * native + 0.6 * n01(rng), 3));
    const double edu = std::round(std::clamp(
        6.0 + 0.4 * sex + 0.04 * a + 0.8 * native + 0.6 * marital + 2.5 * n01(rng), 1.0, 16.0));
    const double hours = std::round(std::clamp(
        42.0 + 4.0 * sex - 0.25 * a - 1.0 * native + 1.0 * marital + 0.3 * edu + 10.0 * n01(rng),
        1.0, 99.0));
    Record rec;
    rec["sex"] = s.features[0].levels[static_cast<std::size_t>(sex)];
    rec["age"] = a;
    rec["native_country"] = s.features[2].levels[static_cast<std::size_t>(native)];
    rec["marital_status"] = s.features[3].levels[static_cast<std::size_t>(marital)];
    rec["education_num"] = edu;
    rec["hours_per_week"] = hours;
    const double logit =
        -9.0 + 0.05 * a + 0.5 * sex + 0.3 * marital + 0.35 * edu + 0.04 * hours + 0.3;
    out.data.labels.push_back(draw_label(logit, rng));
    out.data.rows.push_back(std::move(rec));
    out.data.ids.push_back(std::to_string(r));
  }
  s.validate();
  return out;
}

SyntheticDomain compas_like(std::size_t rows, std::uint64_t seed) {
  SyntheticDomain out;
  out.name = "compas";
  out.encoding = CategoricalEncoding::ordinal;
  FeatureSchema& s = out.data.schema;
  s.label = "low_risk";
  s.positive_label_meaning = "a low risk assessment";
  FeatureSpec age = continuous("age", {18, 80}, true, Direction::increase, Polarity::positive);
  age.max_delta = 5.0;
  s.features.push_back(age);
  s.features.push_back(categorical("race", {"other", "african_american"}));
  s.features.push_back(categorical("sex", {"female", "male"}));
  s.features.push_back(
      continuous("priors_count", {0, 40}, true, Direction::increase, Polarity::positive));

  std::vector<ScmNode> nodes(4);
  nodes[0] = {"age", {}, {}, 34.0, 11.0};
  nodes[1] = {"race", {}, {}, 0.5, 0.5};
  nodes[2] = {"sex", {}, {}, 0.8, 0.4};
  nodes[3] = {"priors_count", {0, 1, 2}, {0.06, 0.5, 1.0}, 0.5, 2.0};
  out.scm = Scm(nodes);

  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double a = std::round(std::clamp(34.0 + 11.0 * n01(rng), 18.0, 80.0));
    const double race = std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
    const double sex = std::bernoulli_distribution(0.8)(rng) ? 1.0 : 0.0;
    const double priors = std::round(
        std::clamp(0.5 + 0.06 * a + 0.5 * race + 1.0 * sex + 2.0 * n01(rng), 0.0, 40.0));
    Record rec;
    rec["age"] = a;
    rec["race"] = s.features[1].levels[static_cast<std::size_t>(race)];
    rec["sex"] = s.features[2].levels[static_cast<std::size_t>(sex)];
    rec["priors_count"] = priors;
    const double logit = 1.2 + 0.04 * (a - 34.0) - 0.35 * priors - 0.2 * sex - 0.1 * race;
    out.data.labels.push_back(draw_label(logit, rng));
    out.data.rows.push_back(std::move(rec));
    out.data.ids.push_back(std::to_string(r));
  }
  s.validate();
  return out;
}

std::vector<std::string> synthetic_domain_names() { return {"german", "adult", "compas"}; }

SyntheticDomain synthetic_domain(const std::string& name, std::size_t rows,
                                 std::uint64_t seed) {
  if (rows == 0) throw ValidationError("rows must be positive", "rows");
  if (name == "german") return german_like(rows, seed);
  if (name == "adult") return adult_like(rows, seed);
  if (name == "compas") return compas_like(rows, seed);
  throw NotFound("synthetic domain '" + name + "'");
}

void write_domain(const SyntheticDomain& d, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base = fs::path(dir) / d.name;
  {
    std::ofstream out(base.string() + ".csv");
    if (!out) throw Error("cannot write '" + base.string() + ".csv'");
    write_dataset_csv(d.data, out);
  }
  {
    json schema = d.data.schema.to_json();
    schema["encoding"] = to_string(d.encoding);
    std::ofstream out(base.string() + ".schema.json");
    out << schema.dump(2) << '\n';
  }
  if (d.scm) {
    std::ofstream out(base.string() + ".scm.json");
    out << d.scm->to_json().dump(2) << '\n';
  }
}

}  // namespace evenif
