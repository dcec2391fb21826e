#pragma once

// JSON conversions for configurations and results.

#include <string>

#include "json.hpp"
#include "subscreen/bench.hpp"
#include "subscreen/screening.hpp"
#include "subscreen/simgen.hpp"

namespace subscreen::io {

using Json = nlohmann::ordered_json;

// Readers accept partial objects: absent fields keep their defaults, unknown
// fields raise ConfigError.
Json to_json(const simgen::PopulationConfig& c);
simgen::PopulationConfig population_config_from_json(const Json& j);

Json to_json(const screening::ScreeningConfig& c);
screening::ScreeningConfig screening_config_from_json(const Json& j);

Json to_json(const bench::ExperimentConfig& c);
bench::ExperimentConfig experiment_config_from_json(const Json& j);
/// Throws ConfigError on unreadable files or malformed JSON.
bench::ExperimentConfig load_experiment_config(const std::string& path);

/// {method, seed, selected, batches, certificates, reason, t_star, ...}.
/// Infinite condition numbers serialize as the string "inf".
Json to_json(const screening::SelectionResult& r);

Json to_json(const bench::ExperimentRecord& r);
bench::ExperimentRecord record_from_json(const Json& j);

/// Config, sample sizes and the shared basis (row-major rows) of a population.
Json population_sidecar(const simgen::Population& p);

/// A number, or "inf" / "-inf" / "nan" for non-finite values.
Json real(double v);
double real_from_json(const Json& j);

}  // namespace subscreen::io
