#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "subscreen/bench.hpp"
#include "subscreen/io.hpp"

using namespace subscreen;
using namespace subscreen::bench;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.population.num_sources = 30;
  cfg.population.ambient_dim = 12;
  cfg.population.latent_dim = 4;
  cfg.population.cluster_prob = 0.3;
  cfg.seeds = {1, 2, 3};
  return cfg;
}

std::string csv_of(const std::vector<ExperimentRecord>& r) {
  std::ostringstream os;
  write_results(r, os, ResultFormat::csv);
  return os.str();
}

}  // namespace

TEST_CASE("one record per estimator for a single full run") {
  ExperimentConfig cfg = small_config();
  cfg.methods = {Method::full};
  cfg.seeds = {5};
  auto recs = run_experiment(cfg);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].estimator == "split_averaging");
  CHECK(recs[1].estimator == "mom");
  for (const auto& r : recs) {
    CHECK(r.method == "full");
    CHECK(r.regime == "clustered");
    CHECK(r.seed == 5);
    CHECK(r.subset_size == 30);
    CHECK(r.error_sin_theta >= 0.0);
    CHECK(r.error_sin_theta <= 1.0);
    CHECK(r.wall_ms == 0.0);
  }
}

TEST_CASE("random and power-of-choice match the empirical subset size") {
  ExperimentConfig cfg = small_config();
  cfg.methods = {Method::empirical, Method::random, Method::power_of_choice};
  auto recs = run_experiment(cfg);
  for (auto seed : cfg.seeds) {
    std::size_t emp = 0;
    bool found = false;
    for (const auto& r : recs)
      if (r.seed == seed && r.method == "empirical") {
        emp = r.subset_size;
        found = true;
      }
    REQUIRE(found);
    for (const auto& r : recs)
      if (r.seed == seed && r.method != "empirical") CHECK(r.subset_size == emp);
  }
}

TEST_CASE("seed offset shifts the seeds") {
  ExperimentConfig cfg = small_config();
  cfg.methods = {Method::full};
  cfg.estimators = {estimators::EstimatorKind::mom};
  RunOptions opts;
  opts.seed_offset = 100;
  auto recs = run_experiment(cfg, opts);
  CHECK(recs.size() == 3);
  CHECK(recs[0].seed == 101);
}

TEST_CASE("identical configs give byte-identical CSV regardless of workers") {
  ExperimentConfig cfg = small_config();
  const std::string a = csv_of(run_experiment(cfg));
  const std::string b = csv_of(run_experiment(cfg));
  RunOptions opts;
  opts.workers = 3;
  const std::string c = csv_of(run_experiment(cfg, opts));
  CHECK(a == b);
  CHECK(a == c);
}

TEST_CASE("ablation sweeps the requested parameter") {
  ExperimentConfig cfg = small_config();
  cfg.methods = {Method::full};
  cfg.estimators = {estimators::EstimatorKind::split_averaging};
  cfg.seeds = {1};
  cfg.ablation = Ablation{"g", {0.1, 0.5}};
  auto recs = run_experiment(cfg);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].swept_param == "g");
  CHECK(recs[0].swept_value == 0.1);
  CHECK(recs[1].swept_value == 0.5);

  cfg.ablation = Ablation{"k", {3}};
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);  // clustered needs even k
  cfg.ablation = Ablation{"z", {1}};
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
  CHECK(default_grid("k") == std::vector<double>{2, 4, 6, 8, 10});
  CHECK(default_grid("M") == std::vector<double>{40, 70, 100, 200});
}

TEST_CASE("skipped estimators and selectors leave notices") {
  ExperimentConfig cfg = small_config();
  cfg.population.regime = simgen::Regime::hetero_gaussian;
  cfg.methods = {Method::full, Method::balanced};
  cfg.estimators = {estimators::EstimatorKind::split_averaging, estimators::EstimatorKind::dfht};
  cfg.seeds = {1};
  std::ostringstream notes;
  RunOptions opts;
  opts.notices = &notes;
  auto recs = run_experiment(cfg, opts);
  CHECK(recs.size() == 1);
  CHECK(notes.str().find("dfht") != std::string::npos);
  CHECK(notes.str().find("balanced") != std::string::npos);
}

TEST_CASE("CSV output has a fixed header and one line per record") {
  std::vector<ExperimentRecord> recs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    recs[i].method = "full";
    recs[i].estimator = "mom";
    recs[i].regime = "clustered";
    recs[i].seed = i;
    recs[i].error_sin_theta = 0.1 * static_cast<double>(i) + 1.0 / 3.0;
  }
  const std::string text = csv_of(recs);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "method,estimator,regime,seed,swept_param,swept_value,error_sin_theta,subset_size,wall_ms,screening_reason");
  int n = 1;
  while (std::getline(in, line)) ++n;
  CHECK(n == 4);
}

TEST_CASE("results round trip through CSV and JSON") {
  ExperimentConfig cfg = small_config();
  cfg.record_wall_time = true;
  auto recs = run_experiment(cfg);
  auto from_csv = parse_results_csv(csv_of(recs));
  std::ostringstream js;
  write_results(recs, js, ResultFormat::json);
  auto from_json = parse_results_json(js.str());
  REQUIRE(from_csv.size() == recs.size());
  REQUIRE(from_json.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    for (const auto* back : {&from_csv[i], &from_json[i]}) {
      CHECK(back->method == recs[i].method);
      CHECK(back->estimator == recs[i].estimator);
      CHECK(back->regime == recs[i].regime);
      CHECK(back->seed == recs[i].seed);
      CHECK(back->swept_param == recs[i].swept_param);
      CHECK(std::abs(back->swept_value - recs[i].swept_value) <= 1e-12);
      CHECK(std::abs(back->error_sin_theta - recs[i].error_sin_theta) <= 1e-12);
      CHECK(back->subset_size == recs[i].subset_size);
      CHECK(std::abs(back->wall_ms - recs[i].wall_ms) <= 1e-12);
      CHECK(back->screening_reason == recs[i].screening_reason);
    }
  }
  CHECK_THROWS_AS(parse_results_csv("a,b\n"), ValidationError);
}

TEST_CASE("emit_results rejects empty input and unwritable paths") {
  CHECK_THROWS_AS(emit_results({}, "unused.csv", ResultFormat::csv), DomainError);
  std::vector<ExperimentRecord> one(1);
  CHECK_THROWS(emit_results(one, "/nonexistent-dir/out.csv", ResultFormat::csv));
  emit_results(one, "bench_emit_test.json", ResultFormat::json);
  auto back = load_results("bench_emit_test.json");
  CHECK(back.size() == 1);
  std::remove("bench_emit_test.json");
}

TEST_CASE("plot data means and standard errors") {
  std::vector<ExperimentRecord> recs;
  std::vector<double> xs;
  for (int s = 0; s < 20; ++s)
    for (const char* m : {"full", "genie"}) {
      ExperimentRecord r;
      r.method = m;
      r.estimator = "mom";
      r.seed = static_cast<std::uint64_t>(s);
      r.error_sin_theta = std::string(m) == "full" ? 0.5 + 0.01 * s * s / 20.0 : 0.3;
      if (std::string(m) == "full") xs.push_back(r.error_sin_theta);
      recs.push_back(r);
    }
  auto rows = aggregate(recs, {"method"});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].keys == std::vector<std::string>{"full"});
  CHECK(rows[0].n == 20);
  CHECK(rows[1].n == 20);

  double mean = 0.0;
  for (double x : xs) mean += x / 20.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  CHECK(std::abs(rows[0].mean - mean) <= 1e-14);
  CHECK(std::abs(rows[0].standard_error - std::sqrt(ss / 19.0) / std::sqrt(20.0)) <= 1e-14);
  CHECK(rows[1].standard_error <= 1e-15);  // constant data, rounding only
  CHECK_FALSE(rows[1].single_sample);

  auto single = aggregate({recs[0]}, {"method", "seed"});
  CHECK(single[0].single_sample);
  CHECK(single[0].standard_error == 0.0);
  CHECK_THROWS_AS(aggregate(recs, {"error_sin_theta"}), ConfigError);
  CHECK_THROWS_AS(aggregate({}, {"method"}), DomainError);

  std::ostringstream os;
  write_plotdata(rows, {"method"}, os);
  CHECK(os.str().rfind("method,n,mean_error,standard_error,single_sample\n", 0) == 0);
}

TEST_CASE("experiment config JSON round trip and validation") {
  ExperimentConfig cfg = small_config();
  cfg.ablation = Ablation{"d", {20, 30}};
  cfg.methods = {Method::genie, Method::full};
  io::Json j = io::to_json(cfg);
  ExperimentConfig back = io::experiment_config_from_json(j);
  CHECK(io::to_json(back).dump() == j.dump());

  ExperimentConfig defaults = io::experiment_config_from_json(io::Json::object());
  CHECK(defaults.population.num_sources == 100);
  CHECK(defaults.population.ambient_dim == 30);
  CHECK(defaults.population.latent_dim == 6);
  CHECK(defaults.population.cluster_prob == 0.2);
  CHECK(defaults.seeds.size() == 20);
  CHECK(defaults.methods.size() == 6);

  CHECK_THROWS_AS(io::experiment_config_from_json(io::Json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(io::experiment_config_from_json(io::Json{{"methods", io::Json::array()}}), ConfigError);
  CHECK_THROWS_AS(io::experiment_config_from_json(io::Json{{"methods", {"oracle"}}}), ConfigError);
  CHECK_THROWS_AS(io::experiment_config_from_json(io::Json{{"screening", {{"delta", 2.0}}}}), ConfigError);
  auto theo = io::experiment_config_from_json(io::Json{{"screening", {{"c", "theoretical"}}}});
  CHECK(theo.screening.c == screening::theoretical_c());
  auto sweep = io::experiment_config_from_json(io::Json{{"ablation", {{"param", "M"}}}});
  REQUIRE(sweep.ablation);
  CHECK(sweep.ablation->values == default_grid("M"));
}

TEST_CASE("selection results serialize with the expected fields") {
  Matrix a = Matrix::Identity(2, 2);
  Rng rng(1);
  auto r = screening::genie_search(a, {}, rng);
  r.seed = 4;
  io::Json j = io::to_json(r);
  for (const char* key : {"method", "seed", "selected", "batches", "certificates", "reason", "t_star"})
    CHECK(j.contains(key));
  CHECK(j["method"] == "genie");
  CHECK(j["seed"] == 4);
  CHECK(io::real(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isinf(io::real_from_json(io::Json("inf"))));
}

TEST_CASE("selftest passes") {
  for (const auto& line : run_selftest()) {
    INFO(line.name << ": " << line.detail);
    CHECK(line.passed);
  }
}
