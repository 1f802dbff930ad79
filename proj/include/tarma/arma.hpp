#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tarma/dgp.hpp"
#include "tarma/series.hpp"

namespace tarma {

/// Result of conditional Gaussian maximum-likelihood estimation.
/// Invariants kept by fit_arma:
///   - residuals reproduce loglik exactly through the conditional likelihood;
///   - sigma2 is the profiled MLE, mean of squared residuals;
///   - spec satisfies the ArmaSpec root conditions.
struct ArmaFit {
  ArmaSpec spec;
  std::vector<double> residuals;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double naic = 0.0;  // (-2 loglik + 2k) / n,      k = p+q+2
  double nbic = 0.0;  // (-2 loglik + k log n) / n
  std::vector<double> objective_trace;  // profile log-likelihood at accepted steps
};

/// Hannan-Rissanen order selection outcome.
struct OrderSelection {
  int p_hat = 0;
  int q_hat = 0;
  Eigen::MatrixXd criterion_grid;  // (p_max+1) x (q_max+1), BIC; (0,0) = +inf
  int long_ar_order = 0;
};

/// Conditional residuals of the null ARMA model: e_t for t = 1..n with
/// pre-sample X and e set to zero.  Requires n > p.
std::vector<double> residuals_conditional(const TimeSeries& series, const ArmaSpec& spec);

/// Conditional log-likelihood of `spec` on `series` with sigma2 profiled out.
double conditional_loglik(const TimeSeries& series, const ArmaSpec& spec);

/// Two-stage Hannan-Rissanen estimate used to initialize fit_arma.  Falls
/// back to a zero coefficient vector with intercept = sample mean when the
/// regressions are rank deficient; shrinks coefficients by 0.9 until the
/// root conditions hold.
ArmaSpec hannan_rissanen_init(const TimeSeries& series, int p, int q);

/// Maximize the conditional Gaussian likelihood over (phi, theta) with sigma2
/// profiled out.  q = 0 is solved in closed form (ordinary least squares);
/// otherwise BFGS ascent from the Hannan-Rissanen start with an infeasibility
/// barrier on the root conditions.  converged = false if the gradient norm
/// tolerance 1e-6 is not met within 500 iterations.
ArmaFit fit_arma(const TimeSeries& series, int p, int q);

enum class OrderCriterion { BIC, AIC };

/// Hannan-Rissanen order selection over [0..p_max] x [0..q_max] minus (0,0),
/// minimizing n log(sigma2~) + penalty over the stage-2 regressions; ties
/// broken by smallest p+q, then smallest p.  BIC by default.
OrderSelection select_order_hr(const TimeSeries& series, int p_max, int q_max,
                               OrderCriterion criterion = OrderCriterion::BIC);

}  // namespace tarma
