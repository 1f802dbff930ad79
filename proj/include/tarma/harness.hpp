#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tarma/dgp.hpp"
#include "tarma/suplm.hpp"
#include "tarma/tables.hpp"

namespace tarma {

struct OrderPolicy {
  enum class Kind { Fixed, HannanRissanen };
  Kind kind = Kind::Fixed;
  int p = 1, q = 1;          // Fixed
  int p_max = 3, q_max = 3;  // HannanRissanen
};

struct TableSourceSpec {
  enum class Kind { Bundled, File, TabulateOnFly };
  Kind kind = Kind::Bundled;
  std::string path;          // File
  int B = 2000;              // TabulateOnFly
};

using DgpSpec = std::variant<ArmaSpec, TarmaSpec, LocalAltSpec, NamedDgp>;

struct ExperimentConfig {
  std::string name;
  DgpSpec dgp;
  int n_obs = 500;
  int replicates = 1000;
  double nominal_level = 0.05;
  std::vector<Variant> variants{Variant::AR_ONLY, Variant::GENERAL};
  OrderPolicy order_policy;
  Band band{0.25, 0.75};
  int d = 1;
  std::uint64_t seed = 0;
  TableSourceSpec table_source;
  int burn_in = kDefaultBurnIn;
  std::optional<ArmaSpec> paired_null;  // enables size-corrected power

  void validate() const;
};

/// One line of the JSON-lines report, fields fixed by the file schema.
struct ReplicateRecord {
  int replicate_id = 0;
  Variant variant = Variant::AR_ONLY;
  double tn = 0.0;
  double r_hat = 0.0;
  double p_value = 1.0;
  bool fit_converged = false;
};

struct VariantResult {
  double rejection_rate = 0.0;
  double se = 0.0;  // sqrt(rate (1-rate) / R)
  double tn_mean = 0.0;
  std::map<std::string, double> tn_quantiles;  // p50, p90, p95, p99
  std::optional<double> critical_value;        // size-corrected runs
};

struct ExperimentReport {
  ExperimentConfig config;
  std::map<Variant, VariantResult> results;
  std::vector<ReplicateRecord> records;                // replicate-major order
  std::map<Variant, std::vector<double>> null_sorted;  // paired-null statistics when size-corrected
  int redraws = 0;
  double runtime_sec = 0.0;
  bool monotone_power = true;  // used by run_power_growth
};

/// Rejection percentages under the null DGP at the nominal level.
ExperimentReport run_size_experiment(const ExperimentConfig& config, int threads);

/// Power under a TARMA / local-alternative DGP.  When config.paired_null is
/// set, rejections are counted against the empirical (1-alpha) critical value
/// of a same-size paired null run (size-corrected power); otherwise table
/// p-values are used.
ExperimentReport run_power_experiment(const ExperimentConfig& config, int threads);

/// One run per named-DGP config; linear DGPs read as size, non-linear as power.
std::vector<ExperimentReport> run_misspec_suite(const std::vector<ExperimentConfig>& configs,
                                                int threads);

/// One power run per scaled h (config.dgp must hold a LocalAltSpec); the
/// report sequence carries a monotonicity flag (2-SE slack).
std::vector<ExperimentReport> run_power_growth(const ExperimentConfig& base,
                                               const std::vector<double>& h_scales, int threads);

/// Empirical upper critical value used for size correction: k-th order
/// statistic of the sorted null sample, k = ceil((1-alpha) R).
double empirical_critical_value(const std::vector<double>& sorted_null, double alpha);

/// Run an experiment writing/appending the JSON-lines report; resumes from a
/// partial report when seeds and config match.  Returns the final report.
ExperimentReport run_experiment_to_file(const ExperimentConfig& config,
                                        const std::filesystem::path& out_path, int threads);

}  // namespace tarma
