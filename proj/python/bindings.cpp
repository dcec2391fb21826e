#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "subscreen/bench.hpp"
#include "subscreen/estimators.hpp"
#include "subscreen/io.hpp"
#include "subscreen/linalg.hpp"
#include "subscreen/ratebounds.hpp"
#include "subscreen/screening.hpp"
#include "subscreen/simgen.hpp"

namespace py = pybind11;
using namespace subscreen;

namespace {

// Configs and results cross the boundary as JSON text; the Python side wraps
// them in dicts.
io::Json parse(const std::string& text) {
  if (text.empty()) return io::Json::object();
  try {
    return io::Json::parse(text);
  } catch (const io::Json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

std::vector<simgen::SourceDataset> datasets(const std::vector<Matrix>& xs, const std::vector<Vector>& ys) {
  if (xs.size() != ys.size()) throw ValidationError("covariates and responses differ in length");
  std::vector<simgen::SourceDataset> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].rows() != ys[i].size()) throw ValidationError("source " + std::to_string(i) + ": row count mismatch");
    out[i] = {xs[i], ys[i], i};
  }
  return out;
}

py::dict population_dict(const simgen::Population& p) {
  py::dict d;
  std::vector<Matrix> xs;
  std::vector<Vector> ys;
  for (const auto& s : p.sources) {
    xs.push_back(s.covariates);
    ys.push_back(s.responses);
  }
  d["config"] = io::to_json(p.config).dump();
  d["basis"] = p.truth.shared_basis;
  d["heads"] = p.truth.heads;
  d["theta"] = p.truth.theta;
  d["sample_sizes"] = p.sample_sizes;
  d["labels"] = p.truth.cluster_labels ? py::cast(*p.truth.cluster_labels) : py::none();
  d["covariates"] = xs;
  d["responses"] = ys;
  return d;
}

ratebounds::RateInputs rate_inputs(double d, double k, double m, double n, double lambda1, double lambdak,
                                   double s_size, std::vector<double> beta) {
  ratebounds::RateInputs in;
  in.d = d;
  in.k = k;
  in.M = m;
  in.N = n;
  in.lambda1 = lambda1;
  in.lambdak = lambdak;
  in.S_size = s_size;
  in.beta = std::move(beta);
  return in;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Source screening for shared subspace learning";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<Unsupported>(m, "Unsupported", PyExc_NotImplementedError);

  // linear algebra
  m.def("stable_rank", &linalg::stable_rank, py::arg("a"));
  m.def("spectral_norm", &linalg::spectral_norm, py::arg("a"));
  m.def("column_norm", &linalg::column_norm, py::arg("h"));
  m.def("gram_condition_number", &linalg::gram_condition_number, py::arg("a"));
  m.def("principal_angle_distance", &linalg::principal_angle_distance, py::arg("b1"), py::arg("b2"));
  m.def(
      "inf_to_one_norm",
      [](const Matrix& h, const std::string& mode) {
        auto b = mode == "auto" ? linalg::inf_to_one_norm_auto(h)
                                : linalg::inf_to_one_norm(h, mode == "exact" ? linalg::NormMode::exact
                                                                             : linalg::NormMode::bracket);
        return py::make_tuple(b.lower, b.upper, b.exact);
      },
      py::arg("h"), py::arg("mode") = "auto", "(lower, upper, exact) bounds on max_{x,y in {-1,1}^s} x^T H y");
  m.def(
      "grothendieck_factorize",
      [](const Matrix& h, double tol, int max_steps) {
        auto f = linalg::grothendieck_factorize(h, {tol, max_steps});
        py::dict d;
        d["diag"] = f.diag;
        d["core"] = f.core;
        d["norm_bound"] = f.certified_norm_bound;
        d["level"] = f.level;
        d["feasible"] = f.feasible;
        d["probes"] = f.probes;
        return d;
      },
      py::arg("h"), py::arg("tol") = 1e-6, py::arg("max_steps") = 5000);

  // simulation
  m.def(
      "sample_population",
      [](const std::string& cfg) {
        return population_dict(simgen::sample_population(io::population_config_from_json(parse(cfg))));
      },
      py::arg("config_json") = "");
  m.def("diversity_matrix", [](const Matrix& heads, const std::vector<std::size_t>& sizes) {
    return simgen::diversity_matrix(heads, sizes);
  });

  // estimators
  m.def(
      "estimate",
      [](const std::string& kind, const std::vector<Matrix>& xs, const std::vector<Vector>& ys, std::size_t k) {
        auto sources = datasets(xs, ys);
        auto e = estimators::estimate(estimators::estimator_from_string(kind), sources, k);
        return py::make_tuple(e.basis, e.spectrum);
      },
      py::arg("kind"), py::arg("covariates"), py::arg("responses"), py::arg("k"));

  // screening
  m.def(
      "genie_search",
      [](const Matrix& heads, std::uint64_t seed, const std::string& cfg) {
        Rng rng = make_stream(seed, StreamTag::selection);
        auto r = screening::genie_search(heads, io::screening_config_from_json(parse(cfg)), rng);
        r.seed = seed;
        return io::to_json(r).dump();
      },
      py::arg("heads"), py::arg("seed") = 0, py::arg("config_json") = "");
  m.def(
      "empirical_search",
      [](const std::vector<Matrix>& xs, const std::vector<Vector>& ys, std::size_t k, std::uint64_t seed,
         const std::string& cfg) {
        auto sources = datasets(xs, ys);
        Rng rng = make_stream(seed, StreamTag::selection);
        auto r = screening::empirical_search(estimators::build_moment_proxies(sources), k,
                                             io::screening_config_from_json(parse(cfg)), rng);
        r.seed = seed;
        return io::to_json(r).dump();
      },
      py::arg("covariates"), py::arg("responses"), py::arg("k"), py::arg("seed") = 0, py::arg("config_json") = "");
  m.def(
      "is_admissible",
      [](const IndexSet& selected, const Matrix& heads, const std::string& cfg) {
        auto rep = screening::is_admissible(selected, heads, io::screening_config_from_json(parse(cfg)));
        return py::make_tuple(rep.admissible, rep.kappa, rep.size_floor);
      },
      py::arg("selected"), py::arg("heads"), py::arg("config_json") = "");
  m.def("theoretical_c", &screening::theoretical_c);

  // rates
  py::class_<ratebounds::RateInputs>(m, "RateInputs")
      .def(py::init(&rate_inputs), py::arg("d"), py::arg("k"), py::arg("M"), py::arg("N"), py::arg("lambda1") = 0.0,
           py::arg("lambdak") = 0.0, py::arg("S_size") = 0.0, py::arg("beta") = std::vector<double>{})
      .def_readwrite("d", &ratebounds::RateInputs::d)
      .def_readwrite("k", &ratebounds::RateInputs::k)
      .def_readwrite("M", &ratebounds::RateInputs::M)
      .def_readwrite("N", &ratebounds::RateInputs::N)
      .def_readwrite("lambda1", &ratebounds::RateInputs::lambda1)
      .def_readwrite("lambdak", &ratebounds::RateInputs::lambdak)
      .def_readwrite("S_size", &ratebounds::RateInputs::S_size)
      .def_readwrite("beta", &ratebounds::RateInputs::beta)
      .def("validate", &ratebounds::RateInputs::validate);
  m.def("sota_upper_general", &ratebounds::sota_upper_general);
  m.def("sota_lower_general", &ratebounds::sota_lower_general);
  m.def("genie_balanced_upper", &ratebounds::genie_balanced_upper);
  m.def("well_represented", &ratebounds::well_represented, py::arg("d"), py::arg("k"), py::arg("N"));

  // experiments
  m.def(
      "run_experiment",
      [](const std::string& cfg, unsigned workers, std::uint64_t seed_offset) {
        auto config = io::experiment_config_from_json(parse(cfg));
        bench::RunOptions opts;
        opts.workers = workers;
        opts.seed_offset = seed_offset;
        std::vector<bench::ExperimentRecord> records;
        {
          py::gil_scoped_release release;
          records = bench::run_experiment(config, opts);
        }
        std::ostringstream os;
        bench::write_results(records, os, bench::ResultFormat::json);
        return os.str();
      },
      py::arg("config_json") = "", py::arg("workers") = 1, py::arg("seed_offset") = 0);
  m.def("default_config", [] { return io::to_json(bench::ExperimentConfig{}).dump(); });
}
