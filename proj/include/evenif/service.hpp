#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "evenif/engine.hpp"

namespace evenif {

struct ServiceDataset {
  std::string id;
  std::shared_ptr<const EncodedDataset> data;
  PredictorPtr model;
  std::optional<Scm> scm;  // bound to data->encoder()
};

struct ServiceOptions {
  std::chrono::milliseconds timeout{30000};
  EngineConfig engine;
  // Where GET /v1/benchmarks/{run} looks for <run>.summary.json.
  std::string benchmark_dir = ".";
};

struct Response {
  int status = 200;
  json body;
};

// Stateless request handling over datasets loaded once and shared read-only.
class Service {
 public:
  explicit Service(ServiceOptions options = {});

  // `scm` in raw units; bound to the dataset's encoder here.
  void add_dataset(std::string id, std::shared_ptr<const EncodedDataset> data,
                   PredictorPtr model, std::optional<Scm> scm = std::nullopt);

  // Registry file:
  //   {"datasets": [{"id", "csv", "schema", "model"?, "model_kind"?, "scm"?,
  //                  "encoding"?, "seed"?}]}
  // Without "model", a model of "model_kind" (default logistic) is trained.
  static Service from_registry(const std::string& path, ServiceOptions options = {});

  // Routes one request; `query` holds URL parameters.
  Response handle(const std::string& method, const std::string& path, const std::string& body,
                  const std::map<std::string, std::string>& query = {}) const;

  json list_datasets() const;
  json schema(const std::string& id) const;
  json individuals(const std::string& id, const std::string& label_filter,
                   std::size_t limit) const;
  json predict(const json& request) const;
  // {"dataset", "individual": id | record, "method", "m", "overrides", "seed",
  //  "config", "timeout_ms"}
  json explain(const json& request) const;
  json benchmark(const std::string& run) const;

  const ServiceOptions& options() const noexcept { return options_; }

 private:
  const ServiceDataset& dataset(const std::string& id) const;

  ServiceOptions options_;
  std::map<std::string, ServiceDataset> datasets_;
};

// Maps an exception from request handling to a status and {"error", "field"}.
Response error_response(const std::exception& e);

// cpp-httplib front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); blocking.
  void listen();
  // Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace evenif
