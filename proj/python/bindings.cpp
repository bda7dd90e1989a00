#include <filesystem>
#include <memory>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evenif/engine.hpp"
#include "evenif/error.hpp"
#include "evenif/evaluation.hpp"
#include "evenif/service.hpp"
#include "evenif/synthetic.hpp"

namespace py = pybind11;
using namespace evenif;

namespace {

PyObject* new_error(py::module_& m, const char* name, PyObject* base) {
  const std::string qualified = std::string("evenif._evenif.") + name;
  PyObject* t = PyErr_NewException(qualified.c_str(), base, nullptr);
  m.add_object(name, py::handle(t));
  return t;
}

std::string run_plan(const std::string& plan_json, const std::string& base_dir,
                     const std::string& out_dir) {
  BenchmarkPlan plan;
  {
    py::gil_scoped_release release;
    plan = BenchmarkPlan::from_json(json::parse(plan_json), base_dir);
  }
  BenchmarkReport rep;
  {
    py::gil_scoped_release release;
    rep = run_benchmark(plan);
    if (!out_dir.empty()) write_report(rep, out_dir, plan.name);
  }
  json s = rep.summary();
  s["run"] = plan.name;
  return s.dump();
}

}  // namespace

PYBIND11_MODULE(_evenif, m) {
  m.doc() = "Robust semifactual explanations for tabular classifiers";

  PyObject* base = new_error(m, "Error", PyExc_RuntimeError);
  static PyObject* validation = new_error(m, "ValidationError", base);
  static PyObject* not_found = new_error(m, "NotFound", base);
  static PyObject* not_positive = new_error(m, "NotPositiveOutcome", base);
  static PyObject* empty_space = new_error(m, "EmptyActionSpace", base);
  static PyObject* no_effective = new_error(m, "NoEffectiveSemifactual", base);
  static PyObject* timeout = new_error(m, "TimeoutError", base);
  static PyObject* error = base;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::tuple args = py::make_tuple(e.what(), e.field());
      PyErr_SetObject(validation, args.ptr());
    } catch (const NotFound& e) {
      PyErr_SetString(not_found, e.what());
    } catch (const NotPositiveOutcome& e) {
      PyErr_SetString(not_positive, e.what());
    } catch (const EmptyActionSpace& e) {
      PyErr_SetString(empty_space, e.what());
    } catch (const NoEffectiveSemifactual& e) {
      PyErr_SetString(no_effective, e.what());
    } catch (const evenif::TimeoutError& e) {
      PyErr_SetString(timeout, e.what());
    } catch (const Error& e) {
      PyErr_SetString(error, e.what());
    } catch (const json::exception& e) {
      PyErr_SetObject(validation, py::make_tuple(e.what(), "json").ptr());
    }
  });

  m.def("method_names", [] { return method_names(); });

  m.def(
      "generate",
      [](const std::string& domain, std::size_t rows, std::uint64_t seed,
         const std::string& out_dir) {
        std::filesystem::create_directories(out_dir);
        write_domain(synthetic_domain(domain, rows, seed), out_dir);
      },
      py::arg("domain"), py::arg("rows") = 1000, py::arg("seed") = 0, py::arg("out_dir") = ".");

  m.def("run_benchmark", &run_plan, py::arg("plan_json"), py::arg("base_dir") = ".",
        py::arg("out_dir") = "");

  m.def("default_config", [] { return EngineConfig{}.to_json().dump(); });

  py::class_<Service, std::shared_ptr<Service>>(m, "Service")
      .def_static(
          "from_registry",
          [](const std::string& path, const std::string& benchmark_dir, long timeout_ms) {
            ServiceOptions o;
            o.benchmark_dir = benchmark_dir;
            o.timeout = std::chrono::milliseconds(timeout_ms);
            py::gil_scoped_release release;
            return std::make_shared<Service>(Service::from_registry(path, o));
          },
          py::arg("path"), py::arg("benchmark_dir") = ".", py::arg("timeout_ms") = 30000)
      .def(
          "handle",
          [](const Service& s, const std::string& method, const std::string& path,
             const std::string& body, const std::map<std::string, std::string>& query) {
            Response r;
            {
              py::gil_scoped_release release;
              r = s.handle(method, path, body, query);
            }
            return py::make_tuple(r.status, r.body.dump());
          },
          py::arg("method"), py::arg("path"), py::arg("body") = "",
          py::arg("query") = std::map<std::string, std::string>{})
      .def("list_datasets", [](const Service& s) { return s.list_datasets().dump(); })
      .def("schema", [](const Service& s, const std::string& id) { return s.schema(id).dump(); })
      .def(
          "individuals",
          [](const Service& s, const std::string& id, const std::string& label,
             std::size_t limit) { return s.individuals(id, label, limit).dump(); },
          py::arg("id"), py::arg("label") = "", py::arg("limit") = 1000)
      .def("predict",
           [](const Service& s, const std::string& req) {
             return s.predict(json::parse(req)).dump();
           })
      .def("explain", [](const Service& s, const std::string& req) {
        const json r = json::parse(req);
        py::gil_scoped_release release;
        return s.explain(r).dump();
      });

  py::class_<HttpServer>(m, "HttpServer")
      .def(py::init<const Service&>(), py::keep_alive<1, 2>())
      .def("bind", &HttpServer::bind, py::arg("host") = "127.0.0.1", py::arg("port") = 0)
      .def("start", &HttpServer::start)
      .def("stop", &HttpServer::stop, py::call_guard<py::gil_scoped_release>());
}
