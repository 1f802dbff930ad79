#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tarma/rng.hpp"
#include "tarma/series.hpp"

namespace tarma {

/// Linear ARMA(p,q) parameters:
///   X_t = phi_0 + sum_k phi_k X_{t-k} + e_t - sum_s theta_s e_{t-s},  e_t ~ (0, sigma2).
/// `phi` holds the intercept first (length p+1), `theta` the q MA coefficients.
struct ArmaSpec {
  int p = 0;
  int q = 0;
  std::vector<double> phi{0.0};  // phi_0, phi_1, ..., phi_p
  std::vector<double> theta;     // theta_1, ..., theta_q
  double sigma2 = 1.0;

  double intercept() const { return phi[0]; }

  /// Throws ValidationError unless the AR and MA polynomials have all roots
  /// outside the closed unit disk (margin 1e-8), share no common root within
  /// 1e-6, and sigma2 > 0.
  void validate() const;
  bool is_valid() const;
};

/// Two-regime TARMA(p,q) used for simulation.  On {X_{t-d} <= r} the term
///   psi_0 + sum_k psi_k X_{t-k} - sum_s psi_{p+s} e_{t-s}
/// is added to the ARMA recursion.  When `psi_ma_present` is false psi has
/// length p+1, otherwise p+q+1.
struct TarmaSpec {
  ArmaSpec base;
  std::vector<double> psi;
  bool psi_ma_present = false;
  double r = 0.0;
  int d = 1;

  void validate() const;
};

/// Local-alternative DGP: TARMA with added regime-1 coefficients h / sqrt(n).
struct LocalAltSpec {
  ArmaSpec base;
  std::vector<double> h;  // h_10..h_1p [, h_21..h_2q]
  double r0 = 0.0;
  int d = 1;
  int n = 0;

  void validate() const;
};

/// The named processes of the mis-specification study.
enum class NamedDgp {
  AR5, AR2_1, AR2_2, ARMA21_1, ARMA21_2, ARMA22, MA2,
  TAR3, THREE_TAR1, NLMA_1, NLMA_2, BIL_1, BIL_2, EXPAR_1, EXPAR_2, NLAR,
};

NamedDgp named_dgp_from_string(const std::string& name);
std::string to_string(NamedDgp name);
std::vector<NamedDgp> all_named_dgps();
bool named_dgp_is_linear(NamedDgp name);

/// Standardized innovation sampler; draws are scaled by sqrt(sigma2) inside
/// the simulators.  Defaults to a standard Gaussian.
using InnovationSampler = std::function<double(Rng&)>;
InnovationSampler gaussian_innovations();

constexpr int kDefaultBurnIn = 200;

TimeSeries simulate_arma(const ArmaSpec& spec, int n, int burn_in, RngStream stream,
                         const InnovationSampler& sampler = gaussian_innovations());
TimeSeries simulate_tarma(const TarmaSpec& spec, int n, int burn_in, RngStream stream,
                          const InnovationSampler& sampler = gaussian_innovations());
TimeSeries simulate_local_alternative(const LocalAltSpec& spec, int burn_in, RngStream stream,
                                      const InnovationSampler& sampler = gaussian_innovations());
TimeSeries simulate_named_dgp(NamedDgp name, int n, int burn_in, RngStream stream);

/// Deterministic cores driven by explicit innovations (the final e_t values,
/// already on the sigma scale).  The full path of length eps.size() is
/// returned; pre-sample X and e are zero and the threshold indicator is off
/// at pre-sample times.
std::vector<double> arma_recursion(const ArmaSpec& spec, std::span<const double> eps);
std::vector<double> tarma_recursion(const TarmaSpec& spec, std::span<const double> eps);
std::vector<double> named_dgp_recursion(NamedDgp name, std::span<const double> eps);  // not NLAR

/// Noiseless logistic map x -> 4 x (1 - x); returns n iterates after x0,
/// discarding burn_in of them first.
std::vector<double> simulate_logistic_map(double x0, int n, int burn_in);

}  // namespace tarma
