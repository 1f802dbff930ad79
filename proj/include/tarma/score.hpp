#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "tarma/arma.hpp"
#include "tarma/series.hpp"

namespace tarma {

/// Which block of threshold parameters is tested.
enum class Variant {
  AR_ONLY,  // sLM:  Psi = (Psi_10, Psi_11..Psi_1p),          m = p+1
  GENERAL,  // sLMg: Psi = (Psi_10..Psi_1p, Psi_21..Psi_2q),  m = p+q+1
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Dimension of the tested parameter vector.
inline int psi_dim(Variant v, int p, int q) {
  return v == Variant::AR_ONLY ? p + 1 : p + q + 1;
}

/// Impulse-response coefficients of the inverse MA polynomial:
/// a_0 = 1, a_j = sum_s theta_s a_{j-s}, a_{j<0} = 0.
struct AlphaSeq {
  std::vector<double> values;
};

AlphaSeq alpha_sequence(std::span<const double> theta, int n);

/// Per-observation derivatives of e_t, evaluated at the null fit.
///   d_zeta: n x (p+q+1), columns d/d phi_0, d/d phi_1..p, d/d theta_1..q.
///   d_psi[g]: n x m for the g-th grid threshold.
/// Terms whose lag index falls before the sample start contribute zero,
/// including the threshold indicator at pre-sample times.
struct ScorePanel {
  Eigen::MatrixXd d_zeta;
  std::vector<Eigen::MatrixXd> d_psi;
  std::vector<double> grid;  // strictly increasing
  int delay = 1;
  Variant variant = Variant::AR_ONLY;
  int p = 0;
  int q = 0;

  int grid_index(double r) const;  // throws if r is not a grid value
};

/// Derivatives of the conditional residuals with respect to (phi, theta) at an
/// arbitrary parameter point; used both for the panel and for the fit_arma
/// gradient.  `residuals` must be residuals_conditional(series, spec).
Eigen::MatrixXd zeta_derivatives(const TimeSeries& series, const ArmaSpec& spec,
                                 std::span<const double> residuals);

/// Build the full derivative panel over the threshold grid.  Cost is
/// O(n (p+q) |grid|) via the recursion d e_t = (direct term) + sum_s theta_s d e_{t-s}.
ScorePanel build_score_panel(const TimeSeries& series, const ArmaFit& fit,
                             std::span<const double> grid, int d, Variant variant);

}  // namespace tarma
