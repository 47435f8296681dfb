#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "kvtune/dataset.hpp"
#include "kvtune/domain.hpp"
#include "kvtune/errors.hpp"
#include "kvtune/experiments.hpp"
#include "kvtune/harness.hpp"
#include "kvtune/oracle.hpp"
#include "kvtune/surrogate.hpp"

namespace py = pybind11;
using namespace kvtune;

namespace {

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["throughput_ops"] = m.throughput_ops;
  d["read_latency_ms"] = m.read_latency_ms;
  d["write_latency_ms"] = m.write_latency_ms;
  return d;
}

py::dict point_dict(const TuningDomain& domain, const ConfigurationPoint& p) {
  py::dict d;
  for (std::size_t i = 0; i < domain.size(); ++i) d[py::str(domain.parameter(i).name)] = p[i];
  return d;
}

ConfigurationPoint point_from(const TuningDomain& domain, const std::map<std::string, int>& values) {
  std::vector<int> v(domain.size(), 0);
  std::vector<bool> seen(domain.size(), false);
  for (const auto& [name, value] : values) {
    const auto idx = domain.find(name);
    if (!idx) throw ValidationError("unknown parameter " + name);
    v[*idx] = value;
    seen[*idx] = true;
  }
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (!seen[i]) throw ValidationError("missing parameter " + domain.parameter(i).name);
  return ConfigurationPoint(std::move(v));
}

SubdomainSpec subdomain_from(const std::string& td, std::optional<std::string> workload,
                             std::optional<std::pair<int, int>> physical) {
  std::optional<Workload> w;
  std::optional<Physical> ph;
  if (workload) w = parse_workload(*workload);
  if (physical) ph = Physical{physical->first, physical->second};
  return SubdomainSpec::make(parse_subdomain_id(td), w, ph);
}

}  // namespace

PYBIND11_MODULE(_kvtune, m) {
  m.doc() = "Surrogate-model configuration tuning for replicated key-value stores";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

  py::class_<TuningDomain>(m, "Domain")
      .def(py::init([](int disks, int heap_mb) { return build_cassandra_domain(disks, heap_mb); }), py::arg("disks") = 1,
           py::arg("heap_mb") = 8192)
      .def_property_readonly("parameter_names",
                             [](const TuningDomain& d) {
                               std::vector<std::string> names;
                               for (const auto& p : d.parameters()) names.push_back(p.name);
                               return names;
                             })
      .def("values", [](const TuningDomain& d, const std::string& name) {
        const auto idx = d.find(name);
        if (!idx) throw ValidationError("unknown parameter " + name);
        return d.parameter(*idx).values;
      })
      .def_property_readonly("knob_space_size", &TuningDomain::knob_space_size)
      .def("describe", [](const TuningDomain& d) { return describe(d); })
      .def("default_configuration",
           [](const TuningDomain& d, const std::string& workload, int nodes, int rf) {
             return point_dict(d, default_configuration(d, parse_workload(workload), {nodes, rf}));
           })
      .def("violations", [](const TuningDomain& d, const std::map<std::string, int>& point) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& v : validate(d, point_from(d, point))) out.emplace_back(v.parameter, v.message);
        return out;
      });

  m.def(
      "oracle_metrics",
      [](const TuningDomain& d, const std::map<std::string, int>& point, double sigma, std::uint64_t seed,
         std::uint64_t invocation) {
        OracleParams p;
        p.noise_sigma = sigma;
        p.seed = seed;
        return metrics_dict(oracle_metrics(d, point_from(d, point), p, invocation));
      },
      py::arg("domain"), py::arg("point"), py::arg("sigma") = 0.0, py::arg("seed") = 0, py::arg("invocation") = 0);

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", &Dataset::size)
      .def_property_readonly("domain", &Dataset::domain)
      .def("targets", [](const Dataset& d, const std::string& t) { return d.targets(parse_target(t)); })
      .def("row",
           [](const Dataset& d, std::size_t i) {
             const auto& e = d[i];
             return py::make_tuple(point_dict(d.domain(), e.point), metrics_dict(e.metrics));
           })
      .def("to_csv",
           [](const Dataset& d) {
             std::ostringstream os;
             write_csv(d, os);
             return os.str();
           })
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_csv(d, p); })
      .def("summary", [](const Dataset& d) { return render_summary(summarize(d)); })
      .def("split", [](const Dataset& d, double fraction, std::uint64_t seed) {
        auto s = split(d, fraction, seed);
        return py::make_tuple(std::move(s.train), std::move(s.test));
      });

  m.def("load_dataset", [](const std::filesystem::path& p, const TuningDomain& d) { return load_csv(d, p); },
        py::arg("path"), py::arg("domain") = build_cassandra_domain());

  m.def(
      "generate_dataset",
      [](std::size_t size, std::uint64_t seed, double sigma, std::vector<std::pair<int, int>> exclude,
         unsigned threads) {
        const auto domain = build_cassandra_domain();
        OracleParams op;
        op.noise_sigma = sigma;
        op.seed = derive_seed(seed, 1);
        SyntheticBackend backend(domain, op);
        auto plan = default_plan(size, seed);
        for (const auto& [n, rf] : exclude) plan = exclude_physical(std::move(plan), {n, rf});
        GenerationOptions opts;
        opts.threads = threads;
        return generate_dataset(backend, domain, plan, opts).dataset;
      },
      py::arg("size") = 2400, py::arg("seed") = 0, py::arg("sigma") = 0.02,
      py::arg("exclude") = std::vector<std::pair<int, int>>{}, py::arg("threads") = 1);

  m.def("parse_metrics", [](const std::string& text) { return metrics_dict(parse_metrics_text(text)); });

  py::class_<SurrogateModel>(m, "Model")
      .def_property_readonly("algorithm", [](const SurrogateModel& s) { return std::string(to_string(s.metadata().algorithm)); })
      .def_property_readonly("target", [](const SurrogateModel& s) { return std::string(to_string(s.metadata().target)); })
      .def_property_readonly("subdomain", [](const SurrogateModel& s) { return std::string(to_string(s.metadata().subdomain.id)); })
      .def_property_readonly("columns", [](const SurrogateModel& s) { return s.metadata().columns; })
      .def_property_readonly("n_train", [](const SurrogateModel& s) { return s.metadata().n_train; })
      .def("predict",
           [](const SurrogateModel& s, const std::map<std::string, int>& point) {
             const auto d = s.domain();
             return s.predict_point(d, point_from(d, point));
           })
      .def("predict_features", [](const SurrogateModel& s, const std::vector<double>& x) { return s.predict(x); })
      .def("evaluate",
           [](const SurrogateModel& s, const Dataset& data) {
             const auto proj = filter_and_project(data, s.metadata().subdomain);
             const auto q = evaluate(s, proj.features, proj.examples.targets(s.metadata().target));
             py::dict d;
             d["mae"] = q.mae;
             d["mae_pct"] = q.mae_pct;
             d["rmse"] = q.rmse;
             d["n_test"] = q.n_test;
             return d;
           })
      .def("is_extrapolation",
           [](const SurrogateModel& s, const std::string& workload, int nodes, int rf) {
             return s.is_extrapolation(parse_workload(workload), {nodes, rf});
           })
      .def("to_json", [](const SurrogateModel& s) { return to_json(s); })
      .def("save", [](const SurrogateModel& s, const std::filesystem::path& p) { save_model(s, p); });

  m.def("load_model", [](const std::filesystem::path& p) { return load_model(p); });
  m.def("model_from_json", [](const std::string& text) { return model_from_json(text); });

  m.def(
      "train",
      [](const Dataset& data, const std::string& algo, const std::string& target, const std::string& td,
         std::optional<std::string> workload, std::optional<std::pair<int, int>> physical, bool tune,
         std::size_t budget, std::uint64_t seed) {
        TrainOptions o;
        o.algorithm = parse_algorithm(algo);
        o.target = parse_target(target);
        o.subdomain = subdomain_from(td, workload, physical);
        o.tune = tune;
        o.budget = budget;
        o.seed = seed;
        return train_surrogate(data, o).model;
      },
      py::arg("data"), py::arg("algo") = "gbdt", py::arg("target") = "throughput", py::arg("td") = "td1",
      py::arg("workload") = py::none(), py::arg("physical") = py::none(), py::arg("tune") = false,
      py::arg("budget") = 60, py::arg("seed") = 0);

  m.def(
      "tune",
      [](const SurrogateModel& model, const std::string& workload, int nodes, int rf, const std::string& opt,
         std::size_t budget, std::uint64_t seed) {
        TuneRequest req{parse_workload(workload), {nodes, rf}, parse_optimizer(opt), budget, seed};
        const auto out = tune_with_model(model, req);
        py::dict d;
        d["config"] = point_dict(model.domain(), out.result.best);
        d["predicted"] = out.result.value;
        d["evaluations"] = out.result.evaluations;
        d["extrapolation"] = out.extrapolation;
        d["report"] = out.report.csv();
        return d;
      },
      py::arg("model"), py::arg("workload"), py::arg("nodes"), py::arg("rf"), py::arg("opt") = "sa",
      py::arg("budget") = 5000, py::arg("seed") = 0);

  m.def(
      "compare",
      [](const std::map<std::string, int>& baseline, const std::map<std::string, int>& tuned, std::size_t trials,
         double sigma, std::uint64_t seed) {
        const auto domain = build_cassandra_domain();
        OracleParams op;
        op.noise_sigma = sigma;
        op.seed = seed;
        SyntheticBackend backend(domain, op);
        const auto c = compare_configs(backend, point_from(domain, baseline), point_from(domain, tuned), trials);
        py::dict d;
        for (const auto& row : c.rows) d[py::str(std::string(to_string(row.metric)))] = row.delta_pct;
        return d;
      },
      py::arg("baseline"), py::arg("tuned"), py::arg("trials") = 5, py::arg("sigma") = 0.0, py::arg("seed") = 0);
}
