#include <sstream>

#include <gtest/gtest.h>

#include "evenif/action_space.hpp"
#include "evenif/error.hpp"
#include "helpers.hpp"

using namespace evenif;
using namespace evenif::fixture;

namespace {

FeatureSchema credit_schema() {
  FeatureSchema s;
  FeatureSpec age = continuous("age", true, Direction::increase, Polarity::positive);
  age.bounds = Bounds{18, 45};
  s.features = {age, categorical("housing", {"own", "rent", "free"}),
                continuous("amount", true, Direction::decrease, Polarity::negative)};
  s.label = "accepted";
  return s;
}

Dataset credit_rows() {
  const std::string text =
      "age,housing,amount,accepted\n"
      "18,own,1000,1\n"
      "70,rent,5000,0\n"
      "30,free,2500,1\n"
      "40,rent,3000,1\n";
  std::istringstream in(text);
  return parse_dataset(in, credit_schema());
}

}  // namespace

TEST(Csv, QuotedFieldsAndLineEnds) {
  std::istringstream in("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\n1,2,3\n");
  const auto rows = parse_csv(in);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][1], "b,c");
  EXPECT_EQ(rows[0][2], "say \"hi\"");
  EXPECT_EQ(rows[1][2], "3");
  EXPECT_EQ(csv_escape("x,y"), "\"x,y\"");
}

TEST(Dataset, LoadsRowsAndLabels) {
  const Dataset d = credit_rows();
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.labels, (std::vector<int>{1, 0, 1, 1}));
  EXPECT_EQ(std::get<std::string>(d.rows[1].at("housing")), "rent");
}

TEST(Dataset, EmptyFileIsRejected) {
  std::istringstream empty("");
  EXPECT_THROW(parse_dataset(empty, credit_schema()), ValidationError);
  std::istringstream header_only("age,housing,amount,accepted\n");
  try {
    parse_dataset(header_only, credit_schema());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no data rows"), std::string::npos);
  }
}

TEST(Dataset, UnknownLevelNamesRowAndFeature) {
  std::istringstream in("age,housing,amount,accepted\n20,own,1,1\n20,castle,1,1\n");
  try {
    parse_dataset(in, credit_schema());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "housing");
    EXPECT_EQ(e.row(), 1);
  }
}

TEST(Dataset, NonNumericAndMissingColumn) {
  std::istringstream bad("age,housing,amount,accepted\nold,own,1,1\n");
  EXPECT_THROW(parse_dataset(bad, credit_schema()), ValidationError);
  std::istringstream missing("age,housing,accepted\n20,own,1\n");
  try {
    parse_dataset(missing, credit_schema());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "amount");
  }
}

TEST(Schema, ValidationAndJsonRoundtrip) {
  FeatureSchema s = credit_schema();
  EXPECT_NO_THROW(s.validate());
  const FeatureSchema back = FeatureSchema::from_json(s.to_json());
  EXPECT_EQ(back.hash(), s.hash());
  EXPECT_EQ(back.features[0].bounds->hi, 45.0);

  FeatureSchema dup = s;
  dup.features[1].name = "age";
  EXPECT_THROW(dup.validate(), ValidationError);

  FeatureSchema frozen = s;
  frozen.features[0].direction = Direction::frozen;
  try {
    frozen.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "age");
  }

  FeatureSchema psi = s;
  psi.psi = 1.0;
  EXPECT_THROW(psi.validate(), ValidationError);
}

TEST(Schema, OverridesNameTheFeature) {
  const FeatureSchema s = credit_schema();
  const FeatureSchema o = apply_overrides(
      s, json{{"housing", {{"actionable", true}, {"direction", "increase"}}}});
  EXPECT_TRUE(o.features[1].actionable);
  EXPECT_FALSE(s.features[1].actionable);

  try {
    apply_overrides(s, json{{"age", {{"direction", "frozen"}, {"bounds", {10, 90}}}}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "age");
  }
  try {
    apply_overrides(s, json{{"salary", {{"actionable", true}}}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "salary");
  }
}

TEST(Encoder, OneHotLayout) {
  const EncodedDataset data(credit_rows(), CategoricalEncoding::one_hot);
  const Encoder& enc = data.encoder();
  ASSERT_EQ(enc.width(), 5u);
  Record r{{"age", 30.0}, {"housing", std::string("rent")}, {"amount", 2000.0}};
  const Vec x = enc.encode(r);
  EXPECT_DOUBLE_EQ(enc.unscale(0, x[0]), 30.0);
  EXPECT_EQ(x[1], 0.0);
  EXPECT_EQ(x[2], 1.0);
  EXPECT_EQ(x[3], 0.0);
  EXPECT_DOUBLE_EQ(x[0], (30.0 - 18.0) / (70.0 - 18.0));
}

TEST(Encoder, DecodeProjectsRelaxedBlocks) {
  const EncodedDataset data(credit_rows(), CategoricalEncoding::one_hot);
  const Encoder& enc = data.encoder();
  EXPECT_EQ(std::get<std::string>(enc.decode(Vec{0.5, 0.2, 0.5, 0.3, 0.5}).at("housing")),
            "rent");
  EXPECT_EQ(std::get<std::string>(enc.decode(Vec{0.5, 0.4, 0.4, 0.2, 0.5}).at("housing")),
            "own");
  EXPECT_THROW(enc.encode(Record{{"age", 1.0}}), ValidationError);
}

TEST(Encoder, RoundtripBothEncodings) {
  for (auto encoding : {CategoricalEncoding::one_hot, CategoricalEncoding::ordinal}) {
    const EncodedDataset data(credit_rows(), encoding);
    const Encoder& enc = data.encoder();
    Rng rng(7);
    std::uniform_real_distribution<double> age(18, 70), amount(1000, 5000);
    std::uniform_int_distribution<int> level(0, 2);
    const std::vector<std::string> levels{"own", "rent", "free"};
    for (int i = 0; i < 500; ++i) {
      Record r{{"age", age(rng)},
               {"housing", levels[static_cast<std::size_t>(level(rng))]},
               {"amount", amount(rng)}};
      const Record back = enc.decode(enc.encode(r));
      EXPECT_EQ(std::get<std::string>(back.at("housing")),
                std::get<std::string>(r.at("housing")));
      EXPECT_NEAR(std::get<double>(back.at("age")), std::get<double>(r.at("age")), 1e-9);
      EXPECT_NEAR(std::get<double>(back.at("amount")), std::get<double>(r.at("amount")), 1e-9);
    }
    const Encoder copy = Encoder::from_json(enc.to_json());
    EXPECT_EQ(copy.encode(data.data().rows[2]), data.X()[2]);
  }
}

TEST(ActionSpace, IncreaseOnlyIntervalAndClip) {
  const EncodedDataset data(credit_rows(), CategoricalEncoding::one_hot);
  const Vec x = data.X()[3];  // age 40
  const ActionSpace space(data.encoder(), data.schema(), x);
  ASSERT_EQ(space.size(), 2u);
  const Bounds age = space.raw_interval(0);
  EXPECT_NEAR(age.lo, 40.0, 1e-9);
  EXPECT_NEAR(age.hi, 45.0, 1e-9);

  Vec v = space.origin();
  v[0] = data.encoder().scale(0, 60.0);
  const Vec c = space.clip(v);
  EXPECT_NEAR(data.encoder().unscale(0, c[0]), 45.0, 1e-9);
  EXPECT_EQ(space.clip(c), c);
  EXPECT_TRUE(space.is_no_change(space.origin()));
}

TEST(ActionSpace, SamplesHonourConstraints) {
  const EncodedDataset data(credit_rows(), CategoricalEncoding::one_hot);
  const Vec x = data.X()[2];
  const ActionSpace space(data.encoder(), data.schema(), x);
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Vec v = space.sample(rng);
    ASSERT_TRUE(space.contains(v));
    ASSERT_FALSE(space.is_no_change(v));
    ASSERT_GE(v[0], x[0]);  // age increase-only
    ASSERT_LE(v[1], x[4]);  // amount decrease-only
    ASSERT_LE(data.encoder().unscale(0, v[0]), 45.0 + 1e-9);
  }
  std::uniform_real_distribution<double> wild(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const Vec v{wild(rng), wild(rng)};
    const Vec once = space.clip(v);
    EXPECT_EQ(space.clip(once), once);
  }
}

TEST(ActionSpace, FrozenEverythingIsEmpty) {
  const EncodedDataset data(credit_rows(), CategoricalEncoding::one_hot);
  FeatureSchema frozen = data.schema();
  for (auto& f : frozen.features) {
    f.actionable = false;
    f.direction = Direction::frozen;
  }
  EXPECT_THROW(ActionSpace(data.encoder(), frozen, data.X()[0]), EmptyActionSpace);
}

TEST(ActionSpace, MaxDeltaCapsTheStep) {
  const EncodedDataset data(credit_rows(), CategoricalEncoding::one_hot);
  FeatureSchema s = data.schema();
  s.features[0].max_delta = 2.0;
  const ActionSpace space(data.encoder(), s, data.X()[2]);  // age 30
  EXPECT_NEAR(space.raw_interval(0).hi, 32.0, 1e-9);
}
