#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tarma/harness.hpp"
#include "tarma/series.hpp"
#include "tarma/suplm.hpp"

namespace tarma {

/// Read a series from CSV: single column with or without a header, or two
/// columns (time, value) using the value column.  Non-finite entries raise
/// IoError naming the offending row.
TimeSeries read_series_csv(const std::filesystem::path& path);

/// One value per line under a `x` header, full double precision.
void write_series_csv(const TimeSeries& series, const std::filesystem::path& path);

nlohmann::json to_json(const ArmaSpec& spec);
ArmaSpec arma_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TarmaSpec& spec);
TarmaSpec tarma_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LocalAltSpec& spec);
LocalAltSpec local_alt_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DgpSpec& dgp);
DgpSpec dgp_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ArmaFit& fit, bool include_residuals = false);
nlohmann::json to_json(const TestReport& report);

nlohmann::json replicate_record_json(const ReplicateRecord& rec);
nlohmann::json summary_json(const ExperimentReport& report);

}  // namespace tarma
