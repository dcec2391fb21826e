#pragma once

// Experiment harness: generate populations, run selectors, fit estimators on
// the selected sources and score against the true basis.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "subscreen/estimators.hpp"
#include "subscreen/screening.hpp"
#include "subscreen/simgen.hpp"

namespace subscreen::bench {

enum class Method { full, random, power_of_choice, balanced, genie, empirical };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Sweep over one population parameter. `param` is one of k, d, M, g, N;
/// N sets every per-source sample size to round(N / M).
struct Ablation {
  std::string param;
  std::vector<double> values;
};

/// Default grid for a swept parameter.
std::vector<double> default_grid(const std::string& param);

struct ExperimentConfig {
  simgen::PopulationConfig population{};
  std::vector<Method> methods{Method::full, Method::random, Method::power_of_choice, Method::balanced,
                              Method::genie, Method::empirical};
  std::vector<estimators::EstimatorKind> estimators{estimators::EstimatorKind::split_averaging,
                                                    estimators::EstimatorKind::mom};
  screening::ScreeningConfig screening{};
  std::vector<std::uint64_t> seeds = default_seeds();
  std::optional<Ablation> ablation;
  // Random and power-of-choice take as many sources as this selector chose.
  Method size_match = Method::empirical;
  // Sources per group for the balanced selector; 0 means the smallest group.
  std::size_t balanced_quota = 0;
  // Wall time varies between runs, so it is recorded only on request and the
  // results file stays reproducible otherwise.
  bool record_wall_time = false;

  static std::vector<std::uint64_t> default_seeds();  // 0..19

  /// Throws ConfigError.
  void validate() const;
};

struct ExperimentRecord {
  std::string method;
  std::string estimator;
  std::string regime;
  std::uint64_t seed = 0;
  std::string swept_param = "none";
  double swept_value = 0.0;
  double error_sin_theta = 0.0;
  std::size_t subset_size = 0;
  double wall_ms = 0.0;
  std::string screening_reason = "none";

  bool operator==(const ExperimentRecord&) const = default;
};

struct RunOptions {
  unsigned workers = 1;
  std::uint64_t seed_offset = 0;
  std::ostream* notices = nullptr;  // skipped estimators and per-record failures
};

/// One record per (sweep point, seed, method, estimator), in that nesting order.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

enum class ResultFormat { csv, json };

ResultFormat format_from_string(const std::string& name);

inline constexpr const char* kCsvHeader =
    "method,estimator,regime,seed,swept_param,swept_value,error_sin_theta,subset_size,wall_ms,screening_reason";

void write_results(const std::vector<ExperimentRecord>& records, std::ostream& os, ResultFormat format);
/// Throws DomainError on empty input and std::runtime_error when the path is unwritable.
void emit_results(const std::vector<ExperimentRecord>& records, const std::string& path, ResultFormat format);
std::vector<ExperimentRecord> parse_results_csv(const std::string& text);
std::vector<ExperimentRecord> parse_results_json(const std::string& text);
/// Format chosen by extension (.json or csv otherwise).
std::vector<ExperimentRecord> load_results(const std::string& path);

struct PlotRow {
  std::vector<std::string> keys;  // values of the group-by fields
  std::size_t n = 0;
  double mean = 0.0;
  double standard_error = 0.0;
  bool single_sample = false;     // standard error is 0 because n == 1
};

/// Group-by fields: method, estimator, regime, seed, swept_param, swept_value.
std::vector<PlotRow> aggregate(const std::vector<ExperimentRecord>& records, const std::vector<std::string>& group_by);
void write_plotdata(const std::vector<PlotRow>& rows, const std::vector<std::string>& group_by, std::ostream& os);
void emit_plotdata(const std::vector<ExperimentRecord>& records, const std::vector<std::string>& group_by,
                   const std::string& path);

struct SelftestLine {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick invariant checks over the library.
std::vector<SelftestLine> run_selftest();

}  // namespace subscreen::bench
