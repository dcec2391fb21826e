// subscreen: run screening experiments, aggregate results, check invariants.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subscreen/bench.hpp"
#include "subscreen/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

using namespace subscreen;

struct RunArgs {
  std::string config;
  std::string out = "-";
  std::string format;
  unsigned workers = 1;
  std::uint64_t seed_offset = 0;
};

struct PlotArgs {
  std::string input;
  std::string out = "-";
  std::vector<std::string> group_by{"method", "estimator", "swept_value"};
};

bench::ResultFormat pick_format(const std::string& flag, const std::string& out) {
  if (!flag.empty()) return bench::format_from_string(flag);
  const bool json = out.size() >= 5 && out.compare(out.size() - 5, 5, ".json") == 0;
  return json ? bench::ResultFormat::json : bench::ResultFormat::csv;
}

int cmd_run(const RunArgs& a) {
  bench::ExperimentConfig cfg;
  if (!a.config.empty()) cfg = io::load_experiment_config(a.config);
  cfg.validate();
  const auto format = pick_format(a.format, a.out);

  bench::RunOptions opts;
  opts.workers = a.workers;
  opts.seed_offset = a.seed_offset;
  opts.notices = &std::cerr;
  auto records = bench::run_experiment(cfg, opts);
  if (a.out == "-")
    bench::write_results(records, std::cout, format);
  else
    bench::emit_results(records, a.out, format);
  return kExitOk;
}

int cmd_plotdata(const PlotArgs& a) {
  auto records = a.input == "-" ? bench::parse_results_csv(std::string(std::istreambuf_iterator<char>(std::cin), {}))
                                : bench::load_results(a.input);
  if (a.out == "-") {
    bench::write_plotdata(bench::aggregate(records, a.group_by), a.group_by, std::cout);
  } else {
    bench::emit_plotdata(records, a.group_by, a.out);
  }
  return kExitOk;
}

int cmd_selftest() {
  int failed = 0;
  for (const auto& line : bench::run_selftest()) {
    std::printf("%s %s", line.passed ? "PASS" : "FAIL", line.name.c_str());
    if (!line.detail.empty()) std::printf(" (%s)", line.detail.c_str());
    std::printf("\n");
    failed += line.passed ? 0 : 1;
  }
  return failed == 0 ? kExitOk : kExitRuntime;
}

int cmd_config(const std::string& path) {
  bench::ExperimentConfig cfg;
  if (!path.empty()) cfg = io::load_experiment_config(path);
  std::cout << io::to_json(cfg).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source screening for shared subspace learning"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write per-record results");
  run_cmd->add_option("--config", run.config, "Experiment config (JSON); defaults when omitted")->check(CLI::ExistingFile);
  run_cmd->add_option("--out", run.out, "Output file, '-' for stdout");
  run_cmd->add_option("--format", run.format, "csv or json (default: from --out extension)")
      ->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_option("--workers", run.workers, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed-offset", run.seed_offset, "Added to every seed");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plotdata", "Aggregate results into mean and standard error per group");
  plot_cmd->add_option("input", plot.input, "Results file (csv or json), '-' for CSV on stdin")->required();
  plot_cmd->add_option("--out", plot.out, "Output CSV, '-' for stdout");
  plot_cmd->add_option("--group-by", plot.group_by, "Grouping fields")->delimiter(',');

  auto* self_cmd = app.add_subcommand("selftest", "Run the invariant suite");

  std::string config_path;
  auto* cfg_cmd = app.add_subcommand("config", "Print the effective config with every default filled in");
  cfg_cmd->add_option("--config", config_path, "Config to merge over the defaults")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*plot_cmd) return cmd_plotdata(plot);
    if (*self_cmd) return cmd_selftest();
    if (*cfg_cmd) return cmd_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
