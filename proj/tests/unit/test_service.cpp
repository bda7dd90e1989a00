#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <httplib.h>

#include "evenif/error.hpp"
#include "evenif/service.hpp"
#include "evenif/synthetic.hpp"

using namespace evenif;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SyntheticDomain g = german_like(200, 3);
    german_ = std::make_shared<EncodedDataset>(std::move(g.data), g.encoding);
    german_model_ = train(*german_, TrainOptions{}, 1).model;
    SyntheticDomain a = adult_like(300, 4);
    adult_ = std::make_shared<EncodedDataset>(std::move(a.data), a.encoding);
    adult_model_ = train(*adult_, TrainOptions{}, 1).model;
    adult_scm_ = *a.scm;
  }

  Service make(ServiceOptions o = {}) const {
    o.engine.ga.generations = 4;
    Service s(o);
    s.add_dataset("german", german_, german_model_);
    s.add_dataset("adult", adult_, adult_model_, adult_scm_);
    return s;
  }

  std::string first_id(const Service& s, const std::string& ds, const std::string& label) const {
    const json j = s.individuals(ds, label, 1);
    return j["individuals"][0]["id"].get<std::string>();
  }

  static inline std::shared_ptr<EncodedDataset> german_, adult_;
  static inline PredictorPtr german_model_, adult_model_;
  static inline Scm adult_scm_;
};

}  // namespace

TEST_F(ServiceTest, ListsDatasetsAndSchema) {
  const Service s = make();
  const Response r = s.handle("GET", "/v1/datasets", "");
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["datasets"].size(), 2u);
  EXPECT_EQ(r.body["datasets"][1]["id"], "german");
  EXPECT_TRUE(r.body["datasets"][0]["causal"].get<bool>());
  const Response sc = s.handle("GET", "/v1/datasets/german/schema", "");
  ASSERT_EQ(sc.status, 200);
  EXPECT_EQ(sc.body["features"].size(), 20u);
  EXPECT_EQ(sc.body["encoding"], "one_hot");
  EXPECT_EQ(s.handle("GET", "/v1/datasets/nope/schema", "").status, 404);
  EXPECT_EQ(s.handle("GET", "/v2/datasets", "").status, 404);
}

TEST_F(ServiceTest, IndividualsFilterByLabel) {
  const Service s = make();
  const Response r =
      s.handle("GET", "/v1/datasets/german/individuals", "", {{"label", "positive"}, {"limit", "5"}});
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["individuals"].size(), 5u);
  for (const auto& i : r.body["individuals"]) EXPECT_EQ(i["label"], 1);
  EXPECT_EQ(s.handle("GET", "/v1/datasets/german/individuals", "", {{"label", "maybe"}}).status,
            400);
  EXPECT_EQ(s.handle("GET", "/v1/datasets/german/individuals", "", {{"limit", "x"}}).status, 400);
}

TEST_F(ServiceTest, ProbeAgreesWithPredictor) {
  const Service s = make();
  for (std::size_t row = 0; row < 20; ++row) {
    const json rec = record_to_json(german_->data().rows[row]);
    const Response r = s.handle("POST", "/v1/probe", json{{"dataset", "german"}, {"record", rec}}.dump());
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body["score"].get<double>(), german_model_->score(german_->X()[row]));
    const Response p = s.handle("POST", "/v1/predict", json{{"dataset", "german"}, {"record", rec}}.dump());
    EXPECT_EQ(p.body, r.body);
  }
}

TEST_F(ServiceTest, ExplainReturnsRobustItemsThatProbePositive) {
  const Service s = make();
  const std::string id = first_id(s, "german", "positive");
  const json req{{"dataset", "german"}, {"individual", id}, {"method", "sgen"}, {"m", 1}, {"seed", 3}};
  const Response r = s.handle("POST", "/v1/explain", req.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  ASSERT_EQ(r.body["items"].size(), 1u);
  const json& it = r.body["items"][0];
  EXPECT_TRUE(it.contains("robustness_mc"));
  EXPECT_EQ(it["sentence"].get<std::string>().rfind("Even if", 0), 0u);
  const Response probe = s.handle(
      "POST", "/v1/probe", json{{"dataset", "german"}, {"record", it["semifactual"]}}.dump());
  EXPECT_EQ(probe.body["label"], 1);
  // Identical request, identical body.
  EXPECT_EQ(s.handle("POST", "/v1/explain", req.dump()).body, r.body);
}

TEST_F(ServiceTest, ExplainHonoursOverrides) {
  const Service s = make();
  const std::string id = first_id(s, "german", "positive");
  const json req{{"dataset", "german"},
                 {"individual", id},
                 {"m", 3},
                 {"overrides", {{"duration", {{"actionable", false}, {"direction", "frozen"}}}}}};
  const Response r = s.handle("POST", "/v1/explain", req.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  for (const auto& it : r.body["items"]) EXPECT_FALSE(it["action"].contains("duration"));
}

TEST_F(ServiceTest, CausalExplain) {
  const Service s = make();
  const std::string id = first_id(s, "adult", "positive");
  const json req{{"dataset", "adult"}, {"individual", id}, {"method", "sgen_causal"}};
  const Response r = s.handle("POST", "/v1/explain", req.dump());
  ASSERT_TRUE(r.status == 200 || r.status == 422) << r.body.dump();
  if (r.status == 200) EXPECT_EQ(r.body["method"], "sgen_causal");
}

TEST_F(ServiceTest, ErrorStatuses) {
  const Service s = make();
  const std::string neg = first_id(s, "german", "negative");
  const Response refused = s.handle(
      "POST", "/v1/explain", json{{"dataset", "german"}, {"individual", neg}}.dump());
  EXPECT_EQ(refused.status, 422);
  EXPECT_NE(refused.body["error"].get<std::string>().find("not a positive outcome"),
            std::string::npos);

  const Response bad_json = s.handle("POST", "/v1/explain", "{oops");
  EXPECT_EQ(bad_json.status, 400);
  EXPECT_EQ(bad_json.body["field"], "body");

  const std::string pos = first_id(s, "german", "positive");
  const Response bad_m = s.handle(
      "POST", "/v1/explain", json{{"dataset", "german"}, {"individual", pos}, {"m", 0}}.dump());
  EXPECT_EQ(bad_m.status, 400);
  EXPECT_EQ(bad_m.body["field"], "m");

  const Response bad_override = s.handle(
      "POST", "/v1/explain",
      json{{"dataset", "german"},
           {"individual", pos},
           {"overrides", {{"age", {{"direction", "frozen"}, {"bounds", {10, 90}}}}}}}
          .dump());
  EXPECT_EQ(bad_override.status, 400);
  EXPECT_EQ(bad_override.body["field"], "age");

  const Response unknown_method = s.handle(
      "POST", "/v1/explain",
      json{{"dataset", "german"}, {"individual", pos}, {"method", "magic"}}.dump());
  EXPECT_EQ(unknown_method.status, 400);

  EXPECT_EQ(s.handle("POST", "/v1/explain",
                     json{{"dataset", "nope"}, {"individual", pos}}.dump())
                .status,
            404);
  EXPECT_EQ(s.handle("POST", "/v1/explain",
                     json{{"dataset", "german"}, {"individual", "no-such-row"}}.dump())
                .status,
            404);
  const Response missing = s.handle("POST", "/v1/predict", json{{"dataset", "german"}}.dump());
  EXPECT_EQ(missing.status, 400);
  EXPECT_EQ(missing.body["field"], "record");
}

TEST_F(ServiceTest, Timeout) {
  const Service s = make();
  const std::string pos = first_id(s, "german", "positive");
  const json req{{"dataset", "german"},
                 {"individual", pos},
                 {"m", 10},
                 {"timeout_ms", 1},
                 {"config", {{"ga", {{"generations", 100000}}}}}};
  const Response r = s.handle("POST", "/v1/explain", req.dump());
  EXPECT_EQ(r.status, 504);
}

TEST_F(ServiceTest, BenchmarkReports) {
  const auto dir = std::filesystem::temp_directory_path() / "evenif_service_bench";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "run1.summary.json") << R"({"cells": []})";
  }
  ServiceOptions o;
  o.benchmark_dir = dir.string();
  const Service s = make(o);
  const Response r = s.handle("GET", "/v1/benchmarks/run1", "");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["run"], "run1");
  EXPECT_EQ(s.handle("GET", "/v1/benchmarks/run2", "").status, 404);
  EXPECT_EQ(s.handle("GET", "/v1/benchmarks/..", "").status, 400);
  std::filesystem::remove_all(dir);
}

TEST_F(ServiceTest, HttpRoundTrip) {
  const Service s = make();
  HttpServer server(s);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client cli("127.0.0.1", port);

  auto list = cli.Get("/v1/datasets");
  ASSERT_TRUE(list);
  EXPECT_EQ(list->status, 200);
  EXPECT_EQ(json::parse(list->body)["datasets"].size(), 2u);

  auto inds = cli.Get("/v1/datasets/german/individuals?label=positive&limit=2");
  ASSERT_TRUE(inds);
  const json ij = json::parse(inds->body);
  ASSERT_EQ(ij["individuals"].size(), 2u);
  const std::string id = ij["individuals"][0]["id"];

  auto schema = cli.Get("/v1/datasets/german/schema");
  ASSERT_TRUE(schema);
  EXPECT_EQ(schema->status, 200);

  auto ex = cli.Post("/v1/explain",
                     json{{"dataset", "german"}, {"individual", id}, {"m", 2}}.dump(),
                     "application/json");
  ASSERT_TRUE(ex);
  ASSERT_EQ(ex->status, 200) << ex->body;
  const json ej = json::parse(ex->body);
  EXPECT_EQ(ej["items"].size(), 2u);

  auto probe = cli.Post("/v1/probe",
                        json{{"dataset", "german"}, {"record", ej["items"][0]["semifactual"]}}.dump(),
                        "application/json");
  ASSERT_TRUE(probe);
  EXPECT_EQ(json::parse(probe->body)["label"], 1);

  auto bad = cli.Post("/v1/explain", "[1,2", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_TRUE(json::parse(bad->body).contains("field"));

  auto missing = cli.Get("/v1/benchmarks/none");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
}

TEST(Registry, LoadsAndTrains) {
  const auto dir = std::filesystem::temp_directory_path() / "evenif_registry";
  std::filesystem::create_directories(dir);
  write_domain(compas_like(200, 1), dir.string());
  {
    std::ofstream(dir / "registry.json") << json{
        {"datasets",
         {{{"id", "compas"},
           {"csv", "compas.csv"},
           {"schema", "compas.schema.json"},
           {"scm", "compas.scm.json"},
           {"model_kind", "logistic"}}}}}
                                                .dump();
  }
  const Service s = Service::from_registry((dir / "registry.json").string());
  const json list = s.list_datasets();
  ASSERT_EQ(list["datasets"].size(), 1u);
  EXPECT_TRUE(list["datasets"][0]["causal"].get<bool>());
  EXPECT_EQ(s.schema("compas")["encoding"], "ordinal");
  std::filesystem::remove_all(dir);
}
