#include "subscreen/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace subscreen::io {

namespace {

// Reads fields out of one JSON object and rejects anything it did not consume.
class Reader {
 public:
  Reader(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ConfigError(what_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(what_ + "." + key + ": " + e.what());
    }
  }

  void get_real(const char* key, double& out) {
    seen_.insert(key);
    if (j_.contains(key)) out = real_from_json(j_.at(key));
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(what_ + ": unknown field '" + key + "'");
  }

 private:
  const Json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

Json index_array(const IndexSet& s) {
  Json a = Json::array();
  for (auto i : s) a.push_back(i);
  return a;
}

}  // namespace

Json real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double real_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError("expected a number, got " + j.dump());
}

Json to_json(const simgen::PopulationConfig& c) {
  Json j;
  j["M"] = c.num_sources;
  j["d"] = c.ambient_dim;
  j["k"] = c.latent_dim;
  j["n_lo"] = c.sample_size_lo();
  j["n_hi"] = c.sample_size_hi();
  j["regime"] = simgen::to_string(c.regime);
  j["cluster_prob"] = c.cluster_prob;
  j["multiplicities"] = c.multiplicities;
  j["noise_std"] = c.noise_std;
  j["seed"] = c.seed;
  j["resample_sizes"] = c.resample_sizes;
  j["size_seed"] = c.size_seed;
  return j;
}

simgen::PopulationConfig population_config_from_json(const Json& j) {
  simgen::PopulationConfig c;
  Reader r(j, "population");
  r.get("M", c.num_sources);
  r.get("d", c.ambient_dim);
  r.get("k", c.latent_dim);
  r.get("n_lo", c.n_lo);
  r.get("n_hi", c.n_hi);
  std::string regime = simgen::to_string(c.regime);
  r.get("regime", regime);
  c.regime = simgen::regime_from_string(regime);
  r.get("cluster_prob", c.cluster_prob);
  r.get("multiplicities", c.multiplicities);
  r.get("noise_std", c.noise_std);
  r.get("seed", c.seed);
  r.get("resample_sizes", c.resample_sizes);
  r.get("size_seed", c.size_seed);
  r.finish();
  return c;
}

Json to_json(const screening::ScreeningConfig& c) {
  Json j;
  j["c"] = c.c;
  j["delta"] = c.delta;
  j["exact_norm_threshold"] = c.exact_norm_threshold;
  j["normalize_columns"] = c.normalize_columns;
  j["kappa_max"] = c.kappa_max;
  j["size_ratio_min"] = c.size_ratio_min;
  j["clamp_batch_to_latent_dim"] = c.clamp_batch_to_latent_dim;
  j["norm_test_ratio"] = c.norm_test_ratio;
  j["column_norm_warn_factor"] = c.column_norm_warn_factor;
  j["factorization_tol"] = c.factorization.tol;
  j["factorization_max_steps"] = c.factorization.max_steps;
  return j;
}

screening::ScreeningConfig screening_config_from_json(const Json& j) {
  screening::ScreeningConfig c;
  Reader r(j, "screening");
  // "theoretical" selects the proven constant.
  if (const Json* cj = r.child("c")) {
    if (cj->is_string() && cj->get<std::string>() == "theoretical")
      c.c = screening::theoretical_c();
    else if (cj->is_number())
      c.c = cj->get<double>();
    else
      throw ConfigError("screening.c: expected a number or \"theoretical\"");
  }
  r.get("delta", c.delta);
  r.get("exact_norm_threshold", c.exact_norm_threshold);
  r.get("normalize_columns", c.normalize_columns);
  r.get("kappa_max", c.kappa_max);
  r.get("size_ratio_min", c.size_ratio_min);
  r.get("clamp_batch_to_latent_dim", c.clamp_batch_to_latent_dim);
  r.get("norm_test_ratio", c.norm_test_ratio);
  r.get("column_norm_warn_factor", c.column_norm_warn_factor);
  r.get("factorization_tol", c.factorization.tol);
  r.get("factorization_max_steps", c.factorization.max_steps);
  r.finish();
  return c;
}

Json to_json(const bench::ExperimentConfig& c) {
  Json j;
  j["population"] = to_json(c.population);
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(bench::to_string(m));
  j["methods"] = methods;
  Json ests = Json::array();
  for (auto e : c.estimators) ests.push_back(estimators::to_string(e));
  j["estimators"] = ests;
  j["screening"] = to_json(c.screening);
  j["seeds"] = c.seeds;
  if (c.ablation) j["ablation"] = Json{{"param", c.ablation->param}, {"values", c.ablation->values}};
  j["size_match"] = bench::to_string(c.size_match);
  j["balanced_quota"] = c.balanced_quota;
  j["record_wall_time"] = c.record_wall_time;
  return j;
}

bench::ExperimentConfig experiment_config_from_json(const Json& j) {
  bench::ExperimentConfig c;
  Reader r(j, "config");
  if (const Json* p = r.child("population")) c.population = population_config_from_json(*p);
  std::vector<std::string> names;
  if (const Json* m = r.child("methods")) {
    names = m->get<std::vector<std::string>>();
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(bench::method_from_string(n));
  }
  if (const Json* e = r.child("estimators")) {
    names = e->get<std::vector<std::string>>();
    c.estimators.clear();
    for (const auto& n : names) c.estimators.push_back(estimators::estimator_from_string(n));
  }
  if (const Json* s = r.child("screening")) c.screening = screening_config_from_json(*s);
  r.get("seeds", c.seeds);
  if (const Json* a = r.child("ablation")) {
    if (!a->is_null()) {
      bench::Ablation ab;
      Reader ar(*a, "ablation");
      ar.get("param", ab.param);
      ar.get("values", ab.values);
      ar.finish();
      if (ab.values.empty()) ab.values = bench::default_grid(ab.param);
      c.ablation = ab;
    }
  }
  std::string size_match = bench::to_string(c.size_match);
  r.get("size_match", size_match);
  c.size_match = bench::method_from_string(size_match);
  r.get("balanced_quota", c.balanced_quota);
  r.get("record_wall_time", c.record_wall_time);
  r.finish();
  c.validate();
  return c;
}

bench::ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return experiment_config_from_json(j);
}

Json to_json(const screening::SelectionResult& r) {
  Json j;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["selected"] = index_array(r.selected);
  Json batches = Json::array();
  for (const auto& b : r.batches) batches.push_back(index_array(b));
  j["batches"] = batches;
  Json certs = Json::array();
  for (const auto& c : r.certificates) {
    Json cj;
    cj["round"] = c.round;
    cj["candidate"] = index_array(c.candidate);
    cj["inf_to_one"] = real(c.inf_to_one.conservative());
    cj["inf_to_one_lower"] = real(c.inf_to_one.lower);
    cj["inf_to_one_exact"] = c.inf_to_one.exact;
    cj["factor_norm"] = real(c.factor_norm);
    cj["deviation"] = real(c.deviation);
    cj["batch_kappa"] = real(c.batch_kappa);
    cj["factorization_feasible"] = c.factorization_feasible;
    certs.push_back(cj);
  }
  j["certificates"] = certs;
  j["reason"] = screening::to_string(r.reason);
  j["t_star"] = r.t_star;
  j["attempts_per_round"] = r.attempts_per_round;
  j["batch_size"] = r.batch_size;
  j["stable_rank"] = real(r.stable_rank);
  j["lambda_min"] = real(r.lambda_min);
  j["c_tilde"] = real(r.c_tilde);
  j["round_cap"] = r.round_cap;
  j["attempt_cap"] = r.attempt_cap;
  j["column_scales"] = std::vector<double>(r.column_scales.data(), r.column_scales.data() + r.column_scales.size());
  j["warnings"] = r.warnings;
  return j;
}

Json to_json(const bench::ExperimentRecord& r) {
  Json j;
  j["method"] = r.method;
  j["estimator"] = r.estimator;
  j["regime"] = r.regime;
  j["seed"] = r.seed;
  j["swept_param"] = r.swept_param;
  j["swept_value"] = real(r.swept_value);
  j["error_sin_theta"] = real(r.error_sin_theta);
  j["subset_size"] = r.subset_size;
  j["wall_ms"] = real(r.wall_ms);
  j["screening_reason"] = r.screening_reason;
  return j;
}

bench::ExperimentRecord record_from_json(const Json& j) {
  bench::ExperimentRecord r;
  Reader rd(j, "record");
  rd.get("method", r.method);
  rd.get("estimator", r.estimator);
  rd.get("regime", r.regime);
  rd.get("seed", r.seed);
  rd.get("swept_param", r.swept_param);
  rd.get_real("swept_value", r.swept_value);
  rd.get_real("error_sin_theta", r.error_sin_theta);
  rd.get("subset_size", r.subset_size);
  rd.get_real("wall_ms", r.wall_ms);
  rd.get("screening_reason", r.screening_reason);
  rd.finish();
  return r;
}

Json population_sidecar(const simgen::Population& p) {
  Json j;
  j["config"] = to_json(p.config);
  j["sample_sizes"] = p.sample_sizes;
  Json basis = Json::array();
  const Matrix& b = p.truth.shared_basis;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < b.cols(); ++c) row.push_back(b(i, c));
    basis.push_back(row);
  }
  j["shared_basis"] = basis;
  j["noise_std"] = p.truth.noise_std;
  return j;
}

}  // namespace subscreen::io
