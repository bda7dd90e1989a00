#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "evenif/error.hpp"
#include "evenif/evaluation.hpp"
#include "evenif/service.hpp"
#include "evenif/synthetic.hpp"

using namespace evenif;

namespace {

struct Common {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string config;

  json config_json() const { return config.empty() ? json() : read_json_file(config); }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->each([&c](const std::string&) {
    c.seed_given = true;
  });
  cmd->add_option("--config", c.config, "JSON configuration file");
}

std::shared_ptr<EncodedDataset> load_encoded(const std::string& csv, const std::string& schema_path,
                                             const std::string& encoding) {
  const json sj = read_json_file(schema_path);
  const FeatureSchema schema = FeatureSchema::from_json(sj);
  CategoricalEncoding enc = CategoricalEncoding::one_hot;
  if (sj.contains("encoding")) enc = encoding_from_string(sj["encoding"].get<std::string>());
  if (!encoding.empty()) enc = encoding_from_string(encoding);
  return std::make_shared<EncodedDataset>(load_dataset(csv, schema), enc);
}

int fail(const std::exception& e) {
  const Response r = error_response(e);
  std::cerr << r.body.dump() << '\n';
  return r.status >= 500 ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semifactual explanations for tabular classifiers"};
  app.require_subcommand(1);

  // generate
  Common gen_c;
  std::string gen_domain, gen_out = "data";
  std::size_t gen_rows = 1000;
  auto* gen = app.add_subcommand("generate", "Write a synthetic domain (csv, schema, scm)");
  gen->add_option("--domain", gen_domain, "german | adult | compas")->required();
  gen->add_option("--rows", gen_rows, "Number of rows");
  gen->add_option("--out", gen_out, "Output directory");
  add_common(gen, gen_c);

  // validate-schema
  Common val_c;
  std::string val_schema, val_data;
  auto* val = app.add_subcommand("validate-schema", "Check a schema (and optionally a CSV)");
  val->add_option("--schema", val_schema, "Schema JSON")->required();
  val->add_option("--data", val_data, "CSV to validate against the schema");
  add_common(val, val_c);

  // train
  Common tr_c;
  std::string tr_data, tr_schema, tr_kind = "logistic", tr_out, tr_encoding;
  auto* tr = app.add_subcommand("train", "Train a predictor and save it as JSON");
  tr->add_option("--data", tr_data, "Training CSV")->required();
  tr->add_option("--schema", tr_schema, "Schema JSON")->required();
  tr->add_option("--model", tr_kind, "logistic | tree | naive_bayes | mlp");
  tr->add_option("--out", tr_out, "Model output path")->required();
  tr->add_option("--encoding", tr_encoding, "one_hot | ordinal");
  add_common(tr, tr_c);

  // explain
  Common ex_c;
  std::string ex_data, ex_schema, ex_model, ex_scm, ex_individual, ex_row, ex_overrides,
      ex_method = "sgen", ex_format = "both", ex_encoding;
  std::size_t ex_m = 1;
  auto* ex = app.add_subcommand("explain", "Generate semifactual explanations");
  ex->add_option("--data", ex_data, "Dataset CSV")->required();
  ex->add_option("--schema", ex_schema, "Schema JSON")->required();
  ex->add_option("--model", ex_model, "Model JSON from `train`")->required();
  ex->add_option("--scm", ex_scm, "Structural causal model JSON (raw units)");
  ex->add_option("--individual", ex_individual, "JSON file holding the individual's record");
  ex->add_option("--row", ex_row, "Id of a dataset row to explain");
  ex->add_option("--method", ex_method, "Method name");
  ex->add_option("--m", ex_m, "Number of semifactuals");
  ex->add_option("--overrides", ex_overrides, "Per-feature constraint overrides JSON");
  ex->add_option("--format", ex_format, "json | text | both");
  ex->add_option("--encoding", ex_encoding, "one_hot | ordinal");
  add_common(ex, ex_c);

  // benchmark
  Common bm_c;
  std::string bm_plan, bm_out;
  unsigned bm_threads = 0;
  auto* bm = app.add_subcommand("benchmark", "Run a benchmark plan");
  bm->add_option("--plan", bm_plan, "Plan JSON")->required();
  bm->add_option("--out", bm_out, "Output directory (default: next to the plan)");
  bm->add_option("--threads", bm_threads, "Worker threads (0: all cores)");
  add_common(bm, bm_c);

  // serve
  Common sv_c;
  std::string sv_registry, sv_host = "127.0.0.1", sv_bench = ".";
  int sv_port = 8080;
  long sv_timeout = 30000;
  auto* sv = app.add_subcommand("serve", "Serve the HTTP API");
  sv->add_option("--registry", sv_registry, "Dataset registry JSON")->required();
  sv->add_option("--host", sv_host, "Bind address");
  sv->add_option("--port", sv_port, "Port (0: any free port)");
  sv->add_option("--timeout-ms", sv_timeout, "Explain timeout in milliseconds");
  sv->add_option("--benchmarks", sv_bench, "Directory of benchmark reports");
  add_common(sv, sv_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", e.what()}, {"field", ""}}.dump() << '\n';
    return 1;
  }

  try {
    if (gen->parsed()) {
      SyntheticDomain d = synthetic_domain(gen_domain, gen_rows, gen_c.seed);
      write_domain(d, gen_out);
      std::cout << json{{"domain", d.name},
                        {"rows", d.data.size()},
                        {"out", gen_out},
                        {"causal", d.scm.has_value()}}
                       .dump()
                << '\n';
    } else if (val->parsed()) {
      const FeatureSchema s = load_schema(val_schema);
      std::size_t actionable = 0;
      for (const auto& f : s.features) actionable += f.actionable;
      json out{{"valid", true}, {"features", s.size()}, {"actionable", actionable},
               {"hash", s.hash()}};
      if (!val_data.empty()) out["rows"] = load_dataset(val_data, s).size();
      std::cout << out.dump() << '\n';
    } else if (tr->parsed()) {
      const auto data = load_encoded(tr_data, tr_schema, tr_encoding);
      const TrainOptions opts =
          TrainOptions::from_json(tr_c.config_json(), model_kind_from_string(tr_kind));
      const TrainResult r = train(*data, opts, tr_c.seed);
      std::ofstream out(tr_out);
      if (!out) throw ValidationError("cannot write '" + tr_out + "'", "out");
      out << r.model->to_json(data->schema().hash()).dump(2) << '\n';
      std::cout << json{{"model", tr_kind},
                        {"holdout_accuracy", r.holdout_accuracy},
                        {"train_rows", r.train_rows},
                        {"holdout_rows", r.holdout_rows},
                        {"out", tr_out}}
                       .dump()
                << '\n';
    } else if (ex->parsed()) {
      if (ex_individual.empty() == ex_row.empty())
        throw ValidationError("give exactly one of --individual and --row", "individual");
      if (ex_format != "json" && ex_format != "text" && ex_format != "both")
        throw ValidationError("format must be json, text or both", "format");
      auto data = load_encoded(ex_data, ex_schema, ex_encoding);
      PredictorPtr model = load_predictor(ex_model, data->schema().hash());
      std::optional<Scm> scm;
      if (!ex_scm.empty()) scm = load_scm(ex_scm);
      ServiceOptions so;
      so.timeout = std::chrono::milliseconds(3600 * 1000);
      so.engine = EngineConfig::from_json(ex_c.config_json());
      Service svc(so);
      svc.add_dataset("cli", data, model, scm);
      json req{{"dataset", "cli"}, {"method", ex_method}, {"m", ex_m}, {"seed", ex_c.seed}};
      if (!ex_row.empty()) {
        req["individual"] = ex_row;
      } else {
        json ind = read_json_file(ex_individual);
        if (ind.contains("record")) ind = ind["record"];
        req["individual"] = ind;
      }
      if (!ex_overrides.empty()) req["overrides"] = read_json_file(ex_overrides);
      const json out = svc.explain(req);
      if (ex_format != "text") std::cout << out.dump(2) << '\n';
      if (ex_format != "json")
        for (const auto& it : out["items"]) std::cout << it["sentence"].get<std::string>() << '\n';
    } else if (bm->parsed()) {
      const json pj = read_json_file(bm_plan);
      const auto base = std::filesystem::path(bm_plan).parent_path().string();
      BenchmarkPlan plan = BenchmarkPlan::from_json(pj, base.empty() ? "." : base);
      if (bm_c.seed_given) plan.split_seed = bm_c.seed;
      if (!bm_c.config.empty()) plan.engine = EngineConfig::from_json(bm_c.config_json(), plan.engine);
      if (bm_threads) plan.threads = bm_threads;
      const std::string out_dir =
          bm_out.empty() ? (std::filesystem::path(base) / "results").string() : bm_out;
      const BenchmarkReport rep = run_benchmark(plan);
      write_report(rep, out_dir, plan.name);
      std::size_t failures = 0;
      for (const auto& r : rep.rows) failures += r.status == "error";
      std::cout << json{{"run", plan.name},
                        {"rows", rep.rows.size()},
                        {"failures", failures},
                        {"csv", (std::filesystem::path(out_dir) / (plan.name + ".csv")).string()},
                        {"summary", (std::filesystem::path(out_dir) /
                                     (plan.name + ".summary.json"))
                                        .string()}}
                       .dump()
                << '\n';
    } else if (sv->parsed()) {
      ServiceOptions so;
      so.timeout = std::chrono::milliseconds(sv_timeout);
      so.benchmark_dir = sv_bench;
      so.engine = EngineConfig::from_json(sv_c.config_json());
      const Service svc = Service::from_registry(sv_registry, so);
      HttpServer http(svc);
      const int port = http.bind(sv_host, sv_port);
      std::cerr << "listening on " << sv_host << ':' << port << std::endl;
      http.listen();
    }
  } catch (const std::exception& e) {
    return fail(e);
  }
  return 0;
}
