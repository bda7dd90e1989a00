#include "evenif/service.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "evenif/error.hpp"

namespace evenif {

Service::Service(ServiceOptions options) : options_(std::move(options)) {}

void Service::add_dataset(std::string id, std::shared_ptr<const EncodedDataset> data,
                          PredictorPtr model, std::optional<Scm> scm) {
  if (!data || !model) throw Error("dataset '" + id + "' needs data and a model");
  if (model->width() != data->width())
    throw ValidationError("model width does not match dataset '" + id + "'", id);
  ServiceDataset d;
  d.id = id;
  if (scm) d.scm = scm->bind(data->encoder());
  d.data = std::move(data);
  d.model = std::move(model);
  datasets_[std::move(id)] = std::move(d);
}

Service Service::from_registry(const std::string& path, ServiceOptions options) {
  const json reg = read_json_file(path);
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (base / p).string();
  };
  if (!reg.contains("datasets") || !reg["datasets"].is_array())
    throw ValidationError("registry needs a \"datasets\" array", "datasets");
  Service svc(std::move(options));
  for (const auto& e : reg["datasets"]) {
    const std::string id = e.value("id", "");
    if (id.empty()) throw ValidationError("registry entry without an id", "id");
    const json sj = read_json_file(resolve(e.value("schema", "")));
    const FeatureSchema schema = FeatureSchema::from_json(sj);
    CategoricalEncoding enc = CategoricalEncoding::one_hot;
    if (sj.contains("encoding")) enc = encoding_from_string(sj["encoding"].get<std::string>());
    if (e.contains("encoding")) enc = encoding_from_string(e["encoding"].get<std::string>());
    auto data = std::make_shared<EncodedDataset>(load_dataset(resolve(e.value("csv", "")), schema),
                                                 enc);
    PredictorPtr model;
    if (e.contains("model")) {
      model = load_predictor(resolve(e["model"].get<std::string>()), schema.hash());
    } else {
      const ModelKind kind = model_kind_from_string(e.value("model_kind", "logistic"));
      model = train(*data, TrainOptions::from_json(e.value("train", json::object()), kind),
                    e.value("seed", std::uint64_t{0}))
                  .model;
    }
    std::optional<Scm> scm;
    if (e.contains("scm")) scm = Scm::from_json(read_json_file(resolve(e["scm"].get<std::string>())));
    svc.add_dataset(id, std::move(data), std::move(model), std::move(scm));
  }
  return svc;
}

const ServiceDataset& Service::dataset(const std::string& id) const {
  const auto it = datasets_.find(id);
  if (it == datasets_.end()) throw NotFound("dataset '" + id + "'");
  return it->second;
}

json Service::list_datasets() const {
  json out = json::array();
  for (const auto& [id, d] : datasets_)
    out.push_back({{"id", id},
                   {"rows", d.data->size()},
                   {"features", d.data->schema().size()},
                   {"model", to_string(d.model->kind())},
                   {"causal", d.scm.has_value()}});
  return {{"datasets", out}};
}

json Service::schema(const std::string& id) const {
  const ServiceDataset& d = dataset(id);
  json j = d.data->schema().to_json();
  j["encoding"] = to_string(d.data->encoder().encoding());
  j["ranges"] = json::array();
  for (const Bounds& b : d.data->encoder().ranges()) j["ranges"].push_back({b.lo, b.hi});
  return j;
}

json Service::individuals(const std::string& id, const std::string& label_filter,
                          std::size_t limit) const {
  const ServiceDataset& d = dataset(id);
  int want = -1;
  if (label_filter == "positive" || label_filter == "1") want = 1;
  else if (label_filter == "negative" || label_filter == "0") want = 0;
  else if (!label_filter.empty())
    throw ValidationError("label must be 'positive' or 'negative'", "label");
  json list = json::array();
  for (std::size_t r = 0; r < d.data->size() && list.size() < limit; ++r) {
    const Vec& x = d.data->X()[r];
    const int label = d.model->label(x);
    if (want >= 0 && label != want) continue;
    list.push_back({{"id", d.data->data().ids[r]},
                    {"record", record_to_json(d.data->data().rows[r])},
                    {"score", d.model->score(x)},
                    {"label", label}});
  }
  return {{"dataset", id}, {"individuals", list}};
}

namespace {

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    throw ValidationError(std::string("missing field '") + name + "'", name);
  return j[name];
}

std::string string_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) throw ValidationError(std::string(name) + " must be a string", name);
  return v.get<std::string>();
}

Vec encode_record(const ServiceDataset& d, const json& rec) {
  if (!rec.is_object()) throw ValidationError("record must be an object", "record");
  return d.data->encoder().encode(record_from_json(rec));
}

}  // namespace

json Service::predict(const json& request) const {
  const ServiceDataset& d = dataset(string_field(request, "dataset"));
  const Vec x = encode_record(d, field(request, "record"));
  const double s = d.model->score(x);
  return {{"score", s}, {"label", s > d.model->psi() ? 1 : 0}};
}

json Service::explain(const json& request) const {
  if (!request.is_object()) throw ValidationError("request must be a JSON object");
  const ServiceDataset& d = dataset(string_field(request, "dataset"));
  const std::string method = request.value("method", "sgen");
  check_method(method);

  json m_json = request.value("m", json(1));
  if (!m_json.is_number_integer() || m_json.get<long long>() < 1)
    throw ValidationError("m must be a positive integer", "m");
  const auto m = m_json.get<std::size_t>();
  json seed_json = request.value("seed", json(0));
  if (!seed_json.is_number_integer() || seed_json.get<long long>() < 0)
    throw ValidationError("seed must be a non-negative integer", "seed");
  const auto seed = seed_json.get<std::uint64_t>();

  const FeatureSchema constraints =
      request.contains("overrides") ? apply_overrides(d.data->schema(), request["overrides"])
                                    : d.data->schema();
  const EngineConfig cfg = request.contains("config")
                               ? EngineConfig::from_json(request["config"], options_.engine)
                               : options_.engine;

  const json& ind = field(request, "individual");
  Vec x;
  if (ind.is_string()) {
    const auto row = d.data->row_of(ind.get<std::string>());
    if (!row) throw NotFound("individual '" + ind.get<std::string>() + "'");
    x = d.data->X()[*row];
  } else {
    x = encode_record(d, ind);
  }

  auto timeout = options_.timeout;
  if (request.contains("timeout_ms")) {
    if (!request["timeout_ms"].is_number() || request["timeout_ms"].get<double>() <= 0)
      throw ValidationError("timeout_ms must be positive", "timeout_ms");
    timeout = std::chrono::milliseconds(request["timeout_ms"].get<long long>());
  }

  const ActionSpace space(d.data->encoder(), constraints, x);
  ExplainInputs in{&space, d.model.get(), &d.data->X(), d.scm ? &*d.scm : nullptr};
  const ExplanationSet set = run_method(method, in, m, cfg, seed, Deadline(timeout));
  json out = set.to_json(space, d.data->schema().positive_label_meaning);
  out["dataset"] = d.id;
  return out;
}

json Service::benchmark(const std::string& run) const {
  if (run.empty() || run.find('/') != std::string::npos || run.find("..") != std::string::npos)
    throw ValidationError("bad run name", "run");
  const auto path = std::filesystem::path(options_.benchmark_dir) / (run + ".summary.json");
  if (!std::filesystem::exists(path)) throw NotFound("benchmark run '" + run + "'");
  json j = read_json_file(path.string());
  j["run"] = run;
  return j;
}

Response error_response(const std::exception& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e))
    return {400, {{"error", v->what()}, {"field", v->field()}}};
  if (dynamic_cast<const NotFound*>(&e)) return {404, {{"error", e.what()}, {"field", ""}}};
  if (const auto* n = dynamic_cast<const NoEffectiveSemifactual*>(&e))
    return {422, {{"error", n->what()}, {"field", ""}, {"diagnostics", n->diagnostics()}}};
  if (dynamic_cast<const NotPositiveOutcome*>(&e) || dynamic_cast<const EmptyActionSpace*>(&e))
    return {422, {{"error", e.what()}, {"field", ""}}};
  if (dynamic_cast<const TimeoutError*>(&e)) return {504, {{"error", e.what()}, {"field", ""}}};
  return {500, {{"error", e.what()}, {"field", ""}}};
}

Response Service::handle(const std::string& method, const std::string& path,
                         const std::string& body,
                         const std::map<std::string, std::string>& query) const {
  std::vector<std::string> seg;
  for (std::size_t i = 0; i < path.size();) {
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string::npos ? path.size() : j;
    if (end > i) seg.push_back(path.substr(i, end - i));
    i = end + 1;
  }
  try {
    if (seg.size() < 2 || seg[0] != "v1") throw NotFound("route " + path);
    auto parse_body = [&] {
      try {
        return json::parse(body);
      } catch (const json::parse_error&) {
        throw ValidationError("request body is not valid JSON", "body");
      }
    };
    if (method == "GET") {
      if (seg.size() == 2 && seg[1] == "datasets") return {200, list_datasets()};
      if (seg.size() == 4 && seg[1] == "datasets" && seg[3] == "schema")
        return {200, schema(seg[2])};
      if (seg.size() == 4 && seg[1] == "datasets" && seg[3] == "individuals") {
        std::size_t limit = 1000;
        if (const auto it = query.find("limit"); it != query.end()) {
          try {
            limit = std::stoul(it->second);
          } catch (const std::exception&) {
            throw ValidationError("limit must be a non-negative integer", "limit");
          }
        }
        const auto lbl = query.find("label");
        return {200, individuals(seg[2], lbl == query.end() ? "" : lbl->second, limit)};
      }
      if (seg.size() == 3 && seg[1] == "benchmarks") return {200, benchmark(seg[2])};
    } else if (method == "POST" && seg.size() == 2) {
      if (seg[1] == "predict" || seg[1] == "probe") return {200, predict(parse_body())};
      if (seg[1] == "explain") return {200, explain(parse_body())};
    }
    throw NotFound("route " + method + " " + path);
  } catch (const std::exception& e) {
    return error_response(e);
  }
}

// -------------------------------------------------------------------- HTTP

struct HttpServer::Impl {
  const Service* service;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const Response r = impl_->service->handle(req.method, req.path, req.body, query);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  impl_->server.Get(".*", route);
  impl_->server.Post(".*", route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace evenif
