#include "subscreen/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "subscreen/io.hpp"
#include "subscreen/linalg.hpp"
#include "subscreen/ratebounds.hpp"

namespace subscreen::bench {

namespace {

const std::vector<std::string> kRecordFields{"method", "estimator", "regime", "seed", "swept_param", "swept_value"};

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

std::string field(const ExperimentRecord& r, const std::string& name) {
  if (name == "method") return r.method;
  if (name == "estimator") return r.estimator;
  if (name == "regime") return r.regime;
  if (name == "seed") return std::to_string(r.seed);
  if (name == "swept_param") return r.swept_param;
  if (name == "swept_value") return fmt17(r.swept_value);
  throw ConfigError("cannot group by '" + name + "'");
}

simgen::PopulationConfig apply_sweep(simgen::PopulationConfig pop, const std::string& param, double v) {
  const auto count = [&](const char* what) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(std::string("ablation ") + what + " needs positive integers");
    return static_cast<std::size_t>(v);
  };
  if (param == "k") {
    pop.latent_dim = count("k");
    pop.multiplicities.clear();
  } else if (param == "d") {
    pop.ambient_dim = count("d");
  } else if (param == "M") {
    pop.num_sources = count("M");
    pop.multiplicities.clear();
  } else if (param == "g") {
    pop.cluster_prob = v;
  } else if (param == "N") {
    const auto n = static_cast<std::size_t>(std::max(2.0, std::round(v / static_cast<double>(pop.num_sources))));
    pop.n_lo = pop.n_hi = n;
  } else {
    throw ConfigError("unknown ablation parameter '" + param + "'");
  }
  return pop;
}

struct Task {
  double swept_value = 0.0;
  std::uint64_t seed = 0;
};

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::vector<simgen::SourceDataset> subset(const std::vector<simgen::SourceDataset>& all, const IndexSet& idx) {
  std::vector<simgen::SourceDataset> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

// Everything computed for one (sweep point, seed).
std::vector<ExperimentRecord> run_task(const ExperimentConfig& cfg, const Task& task, std::ostream* notices,
                                       std::mutex& notice_mu) {
  const auto note = [&](const std::string& msg) {
    if (!notices) return;
    std::lock_guard<std::mutex> lock(notice_mu);
    *notices << "notice: " << msg << '\n';
  };

  simgen::PopulationConfig pc = cfg.population;
  std::string param = "none";
  if (cfg.ablation) {
    param = cfg.ablation->param;
    pc = apply_sweep(pc, param, task.swept_value);
  }
  pc.seed = task.seed;
  const simgen::Population pop = simgen::sample_population(pc);
  const auto& sources = pop.sources;
  const std::size_t k = pc.latent_dim;
  const std::string regime = simgen::to_string(pc.regime);

  // Screening selections, computed once per task and shared by estimators.
  std::map<Method, screening::SelectionResult> screened;
  std::map<Method, double> screen_ms;
  const auto screen = [&](Method m) -> const screening::SelectionResult& {
    auto it = screened.find(m);
    if (it != screened.end()) return it->second;
    const auto start = std::chrono::steady_clock::now();
    Rng rng = make_stream(task.seed, StreamTag::selection, static_cast<std::uint64_t>(m));
    screening::SelectionResult r;
    if (m == Method::genie) {
      r = screening::genie_search(pop.truth.heads, cfg.screening, rng);
    } else {
      const auto proxies = estimators::build_moment_proxies(sources);
      r = screening::empirical_search(proxies, k, cfg.screening, rng);
    }
    r.seed = task.seed;
    screen_ms[m] = elapsed_ms(start);
    return screened.emplace(m, std::move(r)).first->second;
  };

  const bool needs_match = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method m) {
    return m == Method::random || m == Method::power_of_choice;
  });
  std::size_t matched = 0;
  if (needs_match) matched = screen(cfg.size_match).selected.size();

  std::vector<ExperimentRecord> out;
  for (Method method : cfg.methods) {
    // Selector output that does not depend on the estimator.
    std::optional<IndexSet> fixed;
    std::string reason = "none";
    double select_ms = 0.0;
    bool skip = false;
    switch (method) {
      case Method::full: {
        IndexSet all(sources.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        fixed = std::move(all);
        break;
      }
      case Method::genie:
      case Method::empirical: {
        const auto& r = screen(method);
        fixed = r.selected;
        reason = screening::to_string(r.reason);
        select_ms = screen_ms[method];
        break;
      }
      case Method::random: {
        const auto start = std::chrono::steady_clock::now();
        Rng rng = make_stream(task.seed, StreamTag::selection, static_cast<std::uint64_t>(method));
        fixed = screening::random_baseline(sources.size(), matched, rng);
        select_ms = elapsed_ms(start);
        break;
      }
      case Method::balanced: {
        if (!pop.truth.cluster_labels) {
          note("balanced selector skipped: regime " + regime + " has no group labels");
          skip = true;
          break;
        }
        const auto start = std::chrono::steady_clock::now();
        const auto& labels = *pop.truth.cluster_labels;
        const std::size_t smallest = screening::smallest_group(labels);
        const std::size_t quota = cfg.balanced_quota == 0 ? smallest : std::min(cfg.balanced_quota, smallest);
        Rng rng = make_stream(task.seed, StreamTag::selection, static_cast<std::uint64_t>(method));
        fixed = screening::balanced_baseline(labels, quota, rng);
        select_ms = elapsed_ms(start);
        break;
      }
      case Method::power_of_choice: break;  // depends on the estimator's first round
    }
    if (skip) continue;

    bool noted_empty = false;
    for (auto kind : cfg.estimators) {
      if (kind == estimators::EstimatorKind::dfht) continue;
      ExperimentRecord rec;
      rec.method = to_string(method);
      rec.estimator = estimators::to_string(kind);
      rec.regime = regime;
      rec.seed = task.seed;
      rec.swept_param = param;
      rec.swept_value = cfg.ablation ? task.swept_value : 0.0;
      rec.screening_reason = reason;

      const auto start = std::chrono::steady_clock::now();
      double extra_ms = select_ms;
      try {
        IndexSet chosen;
        if (fixed) {
          chosen = *fixed;
        } else {
          const auto round1 = estimators::estimate(kind, sources, k);
          const auto losses = screening::local_losses(sources, round1.basis);
          chosen = screening::power_of_choice_baseline(losses, matched);
        }
        rec.subset_size = chosen.size();
        if (chosen.empty()) {
          // No sources, no information: the worst possible distance.
          rec.error_sin_theta = 1.0;
          if (!noted_empty)
            note(rec.method + " seed " + std::to_string(task.seed) + ": empty selection scored as error 1");
          noted_empty = true;
        } else {
          const auto picked = subset(sources, chosen);
          const auto est = estimators::estimate(kind, picked, k);
          rec.error_sin_theta = linalg::principal_angle_distance(est.basis, pop.truth.shared_basis);
        }
      } catch (const std::exception& e) {
        rec.error_sin_theta = std::numeric_limits<double>::quiet_NaN();
        rec.screening_reason = "failed";
        note(rec.method + "/" + rec.estimator + " seed " + std::to_string(task.seed) + " failed: " + e.what());
      }
      if (cfg.record_wall_time) rec.wall_ms = elapsed_ms(start) + extra_ms;
      out.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::full: return "full";
    case Method::random: return "random";
    case Method::power_of_choice: return "power_of_choice";
    case Method::balanced: return "balanced";
    case Method::genie: return "genie";
    case Method::empirical: return "empirical";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::full, Method::random, Method::power_of_choice, Method::balanced, Method::genie,
                   Method::empirical})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown method '" + name + "'");
}

std::vector<double> default_grid(const std::string& param) {
  if (param == "k") return {2, 4, 6, 8, 10};
  if (param == "d") return {20, 30, 40, 60};
  if (param == "M") return {40, 70, 100, 200};
  if (param == "g") return {0.1, 0.2, 0.3, 0.5};
  if (param == "N") return {2000, 8000, 32000, 128000};
  throw ConfigError("unknown ablation parameter '" + param + "'");
}

std::vector<std::uint64_t> ExperimentConfig::default_seeds() {
  std::vector<std::uint64_t> s(20);
  std::iota(s.begin(), s.end(), std::uint64_t{0});
  return s;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("methods must not be empty");
  if (estimators.empty()) throw ConfigError("estimators must not be empty");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (size_match != Method::empirical && size_match != Method::genie)
    throw ConfigError("size_match must be genie or empirical");
  screening.validate();
  if (ablation) {
    if (ablation->values.empty()) throw ConfigError("ablation values must not be empty");
    for (double v : ablation->values) apply_sweep(population, ablation->param, v).validate();
  } else {
    population.validate();
  }
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  if (opts.notices &&
      std::find(cfg.estimators.begin(), cfg.estimators.end(), estimators::EstimatorKind::dfht) != cfg.estimators.end())
    *opts.notices << "notice: estimator dfht is not implemented and is skipped\n";

  std::vector<Task> tasks;
  const std::vector<double> points = cfg.ablation ? cfg.ablation->values : std::vector<double>{0.0};
  for (double v : points)
    for (auto seed : cfg.seeds) tasks.push_back({v, seed + opts.seed_offset});

  std::vector<std::vector<ExperimentRecord>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex notice_mu;
  std::mutex error_mu;
  std::exception_ptr error;
  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      try {
        slots[t] = run_task(cfg, tasks[t], opts.notices, notice_mu);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(opts.workers, static_cast<unsigned>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<ExperimentRecord> out;
  for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
  return out;
}

ResultFormat format_from_string(const std::string& name) {
  if (name == "csv") return ResultFormat::csv;
  if (name == "json") return ResultFormat::json;
  throw ConfigError("unknown format '" + name + "'");
}

void write_results(const std::vector<ExperimentRecord>& records, std::ostream& os, ResultFormat format) {
  if (format == ResultFormat::json) {
    io::Json arr = io::Json::array();
    for (const auto& r : records) arr.push_back(io::to_json(r));
    os << arr.dump(2) << '\n';
    return;
  }
  os << kCsvHeader << '\n';
  for (const auto& r : records)
    os << r.method << ',' << r.estimator << ',' << r.regime << ',' << r.seed << ',' << r.swept_param << ','
       << fmt17(r.swept_value) << ',' << fmt17(r.error_sin_theta) << ',' << r.subset_size << ','
       << fmt17(r.wall_ms) << ',' << r.screening_reason << '\n';
}

void emit_results(const std::vector<ExperimentRecord>& records, const std::string& path, ResultFormat format) {
  if (records.empty()) throw DomainError("no records to emit");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_results(records, f, format);
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<ExperimentRecord> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ValidationError("results CSV has an unexpected header");
  std::vector<ExperimentRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 10) throw ValidationError("results CSV line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      ExperimentRecord r;
      r.method = cells[0];
      r.estimator = cells[1];
      r.regime = cells[2];
      r.seed = std::stoull(cells[3]);
      r.swept_param = cells[4];
      r.swept_value = parse_real(cells[5]);
      r.error_sin_theta = parse_real(cells[6]);
      r.subset_size = std::stoull(cells[7]);
      r.wall_ms = parse_real(cells[8]);
      r.screening_reason = cells[9];
      out.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw ValidationError("results CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ExperimentRecord> parse_results_json(const std::string& text) {
  io::Json arr;
  try {
    arr = io::Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("results JSON: ") + e.what());
  }
  if (!arr.is_array()) throw ValidationError("results JSON must be an array");
  std::vector<ExperimentRecord> out;
  for (const auto& j : arr) out.push_back(io::record_from_json(j));
  return out;
}

std::vector<ExperimentRecord> load_results(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  return json ? parse_results_json(ss.str()) : parse_results_csv(ss.str());
}

std::vector<PlotRow> aggregate(const std::vector<ExperimentRecord>& records, const std::vector<std::string>& group_by) {
  if (records.empty()) throw DomainError("no records to aggregate");
  for (const auto& g : group_by)
    if (std::find(kRecordFields.begin(), kRecordFields.end(), g) == kRecordFields.end())
      throw ConfigError("cannot group by '" + g + "'");
  std::map<std::vector<std::string>, std::vector<double>> groups;
  std::vector<std::vector<std::string>> order;
  for (const auto& r : records) {
    std::vector<std::string> key;
    for (const auto& g : group_by) key.push_back(field(r, g));
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.error_sin_theta);
  }
  std::vector<PlotRow> out;
  for (const auto& key : order) {
    const auto& xs = groups[key];
    PlotRow row;
    row.keys = key;
    row.n = xs.size();
    row.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(row.n);
    if (row.n < 2) {
      row.single_sample = true;
    } else {
      double ss = 0.0;
      for (double x : xs) ss += (x - row.mean) * (x - row.mean);
      row.standard_error = std::sqrt(ss / static_cast<double>(row.n - 1)) / std::sqrt(static_cast<double>(row.n));
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_plotdata(const std::vector<PlotRow>& rows, const std::vector<std::string>& group_by, std::ostream& os) {
  for (const auto& g : group_by) os << g << ',';
  os << "n,mean_error,standard_error,single_sample\n";
  for (const auto& r : rows) {
    for (const auto& k : r.keys) os << k << ',';
    os << r.n << ',' << fmt17(r.mean) << ',' << fmt17(r.standard_error) << ',' << (r.single_sample ? 1 : 0) << '\n';
  }
}

void emit_plotdata(const std::vector<ExperimentRecord>& records, const std::vector<std::string>& group_by,
                   const std::string& path) {
  const auto rows = aggregate(records, group_by);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_plotdata(rows, group_by, f);
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<SelftestLine> run_selftest() {
  std::vector<SelftestLine> out;
  const auto check = [&](std::string name, auto&& fn) {
    SelftestLine line{std::move(name), false, ""};
    try {
      line.detail = fn(line.passed);
    } catch (const std::exception& e) {
      line.detail = std::string("threw: ") + e.what();
    }
    out.push_back(std::move(line));
  };

  check("inf_to_one hand instances", [](bool& ok) {
    Matrix swap(2, 2);
    swap << 0, 1, 1, 0;
    const double a = linalg::inf_to_one_norm(swap, linalg::NormMode::exact).upper;
    const double b = linalg::inf_to_one_norm(Matrix::Zero(4, 4), linalg::NormMode::exact).upper;
    const double c = linalg::inf_to_one_norm(Matrix::Ones(3, 3), linalg::NormMode::exact).upper;
    ok = a == 2.0 && b == 0.0 && c == 9.0;
    return "swap " + fmt17(a) + ", zero " + fmt17(b) + ", ones " + fmt17(c);
  });

  check("bracket contains exact value", [](bool& ok) {
    Rng rng = make_stream(11, StreamTag::local_search);
    ok = true;
    for (int t = 0; t < 50; ++t) {
      Matrix g = gaussian_matrix(10, 10, rng);
      const Matrix h = 0.5 * (g + g.transpose());
      const auto ex = linalg::inf_to_one_norm(h, linalg::NormMode::exact);
      const auto br = linalg::inf_to_one_norm(h, linalg::NormMode::bracket);
      ok = ok && br.lower <= ex.upper + 1e-9 && ex.upper <= br.upper + 1e-9;
    }
    return std::string("50 symmetric 10x10 matrices");
  });

  check("factorization constraints", [](bool& ok) {
    Rng rng = make_stream(12, StreamTag::local_search);
    ok = true;
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
      Matrix g = gaussian_matrix(6, 6, rng);
      Matrix h = 0.5 * (g + g.transpose());
      h.diagonal().setZero();
      const auto f = linalg::grothendieck_factorize(h);
      const double bound = 2.0 * linalg::inf_to_one_norm(h, linalg::NormMode::exact).upper * (1 + 1e-4);
      const Matrix rec = f.diag.asDiagonal() * f.core * f.diag.asDiagonal();
      worst = std::max(worst, (rec - h).cwiseAbs().maxCoeff());
      ok = ok && std::abs(f.diag.squaredNorm() - 1.0) <= 1e-6 && f.certified_norm_bound <= bound;
    }
    ok = ok && worst <= 1e-6;
    return "max reconstruction error " + fmt17(worst);
  });

  check("stable rank invariance", [](bool& ok) {
    Rng rng = make_stream(13, StreamTag::basis);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Matrix q = linalg::haar_orthonormal(12, 4, rng);
      const Matrix a = gaussian_matrix(4, 30, rng);
      worst = std::max(worst, std::abs(linalg::stable_rank(q * a) - linalg::stable_rank(a)));
    }
    ok = worst <= 1e-9;
    return "max difference " + fmt17(worst);
  });

  check("orthogonal heads spectrum", [](bool& ok) {
    Rng rng = make_stream(14, StreamTag::heads);
    const std::vector<std::size_t> mult{8, 4, 2, 1};
    const auto heads = simgen::sample_heads_orthogonal(4, mult, rng);
    const std::vector<std::size_t> sizes(15, 10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(simgen::diversity_matrix(heads.heads, sizes));
    double worst = 0.0;
    for (int j = 0; j < 4; ++j) worst = std::max(worst, std::abs(es.eigenvalues()(j) - mult[3 - j] / 15.0));
    ok = worst <= 1e-10;
    return "max eigenvalue error " + fmt17(worst);
  });

  check("genie batch certificates", [](bool& ok) {
    Rng rng = make_stream(15, StreamTag::heads);
    Matrix a = gaussian_matrix(4, 400, rng);
    const auto r = screening::genie_search(a, {}, rng);
    ok = true;
    for (const auto& c : r.certificates) ok = ok && c.deviation <= 0.5 + 1e-6;
    return std::to_string(r.batches.size()) + " batches, reason " + screening::to_string(r.reason);
  });

  check("rate formula", [](bool& ok) {
    ratebounds::RateInputs in;
    in.d = 30;
    in.k = 6;
    in.M = 100;
    in.N = 3000;
    in.lambda1 = in.lambdak = 1.0 / 6.0;
    const double v = ratebounds::sota_upper_general(in);
    ok = std::abs(v - (std::sqrt(0.06) + std::sqrt(0.012))) <= 1e-12;
    return "upper " + fmt17(v);
  });

  check("results round trip", [](bool& ok) {
    ExperimentRecord r{"genie", "mom", "clustered", 7, "g", 0.2, 0.123456789012345678, 12, 0.0, "round_cap"};
    std::ostringstream os;
    write_results({r, r}, os, ResultFormat::csv);
    const auto back = parse_results_csv(os.str());
    ok = back.size() == 2 && back[0] == r;
    return std::string("two records");
  });

  return out;
}

}  // namespace subscreen::bench
