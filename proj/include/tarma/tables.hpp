#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tarma/dgp.hpp"
#include "tarma/suplm.hpp"

namespace tarma {

/// Tabulated null distribution of a sup-LM statistic for one (variant, p, q, band).
struct QuantileTable {
  Variant variant = Variant::AR_ONLY;
  int p = 1;
  int q = 1;
  Band band{0.25, 0.75};
  int n_sim = 1000;
  int B = 0;                       // replicate count
  ArmaSpec generator;              // H0 process used for tabulation
  std::vector<std::pair<double, double>> knots;  // (probability, quantile), sorted
  std::optional<std::vector<double>> full_sample;  // sorted statistics, optional
  std::uint64_t seed = 0;
  std::string source = "simulated";  // "simulated" | "paper" | "file"

  int dim() const { return psi_dim(variant, p, q); }
  /// Quantile at one of the stored knot probabilities (exact match required).
  double knot(double probability) const;
};

/// Root-safe mid-region generator used for tabulation by default:
/// phi_k = 0.3/k, theta_s = 0.2/s, zero intercept, unit variance.
ArmaSpec default_tabulation_generator(int p, int q);

/// Simulate B null series of length n_sim, fit ARMA(p,q), collect Tn, and
/// extract type-7 empirical quantile knots.  Replicates whose fit fails are
/// redrawn from a fresh sub-stream; a redraw rate >= 1% of B raises
/// TabulationError.  Deterministic for fixed inputs at any parallelism.
QuantileTable tabulate(Variant variant, int p, int q, Band band, const ArmaSpec& generator_spec,
                       int n_sim, int B, std::uint64_t seed, int parallelism,
                       bool keep_full_sample = true);

void save_table(const QuantileTable& table, const std::filesystem::path& path);
QuantileTable load_table(const std::filesystem::path& path);

/// Filename convention `<variant>_p<p>q<q>_b<piL>-<piU>.qt.json`.
std::string table_filename(Variant variant, int p, int q, Band band);

/// The paper-tabulated quantile knots (8 orders x 2 variants, band 25-75,
/// B = 10000, n_sim = 1000), knots only, flagged source = "paper".
const std::vector<QuantileTable>& bundled_defaults();

/// Exact (variant, p, q, band) lookup among bundled tables; nullptr if absent.
const QuantileTable* find_bundled(Variant variant, int p, int q, Band band);

/// Lookup for a usable table: exact (p, q) first, then any table of the same
/// variant, band and tested-parameter dimension, then the nearest dimension.
const QuantileTable* find_table(const std::vector<QuantileTable>& tables, Variant variant,
                                int p, int q, Band band);

}  // namespace tarma
