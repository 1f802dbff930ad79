#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "tarma/score.hpp"

namespace tarma {

struct QuantileTable;  // tables.hpp

using Band = std::pair<double, double>;  // (pi_L, pi_U) percentile band

constexpr int kDefaultMaxGridPoints = 200;

/// Outer-product information blocks, (1/sigma2) sum_t (de_t/d.)(de_t/d.)^T.
struct InfoBlocks {
  Eigen::MatrixXd I11;               // (p+q+1)^2
  std::vector<Eigen::MatrixXd> I12;  // per grid r, (p+q+1) x m
  std::vector<Eigen::MatrixXd> I22;  // per grid r, m x m
};

/// Result of a sup-LM test.
struct TestReport {
  Variant variant = Variant::AR_ONLY;
  double statistic = 0.0;  // Tn = max over profile
  double r_hat = 0.0;      // smallest maximizer
  std::vector<std::pair<double, double>> profile;  // (r, Tn(r)), non-skipped
  std::optional<double> p_value;
  std::vector<double> skipped_r;  // thresholds dropped for ill-conditioning
  ArmaFit fit;
  Band grid_band{0.25, 0.75};
  int d = 1;
};

/// Candidate thresholds: unique delayed values X_{t-d} whose empirical-CDF
/// rank lies in [pi_L, pi_U]; thinned to an evenly rank-spaced subset of
/// max_points when larger.
std::vector<double> threshold_grid(const TimeSeries& series, int d, Band band,
                                   int max_points = kDefaultMaxGridPoints);

/// Score of the tested block:  d l / d Psi (r) = - sum_t (e_t / sigma2) de_t/dPsi.
Eigen::VectorXd score_vector(const ScorePanel& panel, std::span<const double> residuals,
                             double sigma2, double r);

InfoBlocks build_info_blocks(const ScorePanel& panel, double sigma2);

/// Sup-LM statistic over the threshold grid.  Per threshold the Schur
/// complement S(r) = I22 - I21 I11^{-1} I12 is formed and the quadratic form
/// solved through a symmetric factorization; r is skipped when the minimum
/// eigenvalue of S(r) is <= 1e-10 trace(S(r)).  Throws SingularityError when
/// every threshold is skipped and EstimationError when the fit did not converge.
TestReport test_statistic(const TimeSeries& series, const ArmaFit& fit, Variant variant,
                          int d, Band band, int max_points = kDefaultMaxGridPoints);

/// Same statistic on a caller-supplied threshold grid; `band_echo` is only
/// recorded in the report.
TestReport test_statistic_on_grid(const TimeSeries& series, const ArmaFit& fit,
                                  Variant variant, int d, std::span<const double> grid,
                                  Band band_echo = {0.25, 0.75});

/// p = 1 - F(Tn) with F linearly interpolated between the table's quantile
/// knots, clipped to [1/(B+1), 1 - 1/(B+1)].  The table must match the
/// report's variant, band, and tested-parameter dimension.
double pvalue(const TestReport& report, const QuantileTable& table);

}  // namespace tarma
