#include "tarma/arma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tarma/score.hpp"

namespace tarma {

namespace {

constexpr double kGradTol = 1e-6;
constexpr int kMaxIterations = 500;
constexpr double kTwoPi = 6.283185307179586476925286766559;

void residuals_into(const ArmaSpec& spec, std::span<const double> x, std::span<double> eps) {
  const int n = static_cast<int>(x.size());
  for (int t = 0; t < n; ++t) {
    double e = x[t] - spec.phi[0];
    for (int k = 1; k <= spec.p && k <= t; ++k) e -= spec.phi[k] * x[t - k];
    for (int s = 1; s <= spec.q && s <= t; ++s) e += spec.theta[s - 1] * eps[t - s];
    eps[t] = e;
  }
}

double sum_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double loglik_from_ssr(double ssr, int n) {
  const double sigma2 = ssr / n;
  return -0.5 * n * (std::log(sigma2 * kTwoPi) + 1.0);
}

ArmaSpec spec_from_zeta(int p, int q, const Eigen::VectorXd& zeta, double sigma2 = 1.0) {
  ArmaSpec s;
  s.p = p;
  s.q = q;
  s.phi.assign(zeta.data(), zeta.data() + p + 1);
  s.theta.assign(zeta.data() + p + 1, zeta.data() + p + 1 + q);
  s.sigma2 = sigma2;
  return s;
}

Eigen::VectorXd zeta_from_spec(const ArmaSpec& s) {
  Eigen::VectorXd z(s.p + 1 + s.q);
  for (int i = 0; i <= s.p; ++i) z[i] = s.phi[i];
  for (int i = 0; i < s.q; ++i) z[s.p + 1 + i] = s.theta[i];
  return z;
}

struct Lsq {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  bool full_rank = false;
};

Lsq solve_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Lsq out;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  out.full_rank = qr.rank() == X.cols();
  out.beta = qr.solve(y);
  out.residuals = y - X * out.beta;
  return out;
}

/// Shrink AR/MA coefficients toward zero until the root conditions hold.
ArmaSpec shrink_to_valid(ArmaSpec spec) {
  for (int i = 0; i < 200 && !spec.is_valid(); ++i) {
    for (int k = 1; k <= spec.p; ++k) spec.phi[k] *= 0.9;
    for (double& th : spec.theta) th *= 0.9;
  }
  if (!spec.is_valid()) {
    std::fill(spec.phi.begin() + 1, spec.phi.end(), 0.0);
    std::fill(spec.theta.begin(), spec.theta.end(), 0.0);
  }
  return spec;
}

int long_ar_order(int n) {
  int m = static_cast<int>(std::floor(10.0 * std::log10(static_cast<double>(n))));
  m = std::min(m, n / 4);
  return std::max(m, 1);
}

double sample_mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_var(std::span<const double> v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

ArmaSpec fallback_spec(const TimeSeries& series, int p, int q) {
  ArmaSpec s;
  s.p = p;
  s.q = q;
  s.phi.assign(p + 1, 0.0);
  s.phi[0] = sample_mean(series.values);
  s.theta.assign(q, 0.0);
  const double v = sample_var(series.values);
  s.sigma2 = v > 0.0 ? v : 1.0;
  return s;
}

/// Long-AR proxy residuals; e_hat[t] is valid for t >= m (0-based), zero before.
std::vector<double> long_ar_residuals(const TimeSeries& series, int m, bool& ok) {
  const auto& x = series.values;
  const int n = series.n();
  const int rows = n - m;
  Eigen::MatrixXd Z(rows, m + 1);
  Eigen::VectorXd y(rows);
  for (int i = 0; i < rows; ++i) {
    const int t = m + i;
    Z(i, 0) = 1.0;
    for (int k = 1; k <= m; ++k) Z(i, k) = x[t - k];
    y[i] = x[t];
  }
  const Lsq fit = solve_ols(Z, y);
  ok = fit.full_rank;
  std::vector<double> ehat(n, 0.0);
  for (int i = 0; i < rows; ++i) ehat[m + i] = fit.residuals[i];
  return ehat;
}

}  // namespace

std::vector<double> residuals_conditional(const TimeSeries& series, const ArmaSpec& spec) {
  spec.validate();
  series.validate();
  if (series.n() <= spec.p)
    throw ValidationError("need n > p to compute conditional residuals");
  std::vector<double> eps(series.values.size());
  residuals_into(spec, series.values, eps);
  return eps;
}

double conditional_loglik(const TimeSeries& series, const ArmaSpec& spec) {
  const auto eps = residuals_conditional(series, spec);
  const double ssr = sum_sq(eps);
  if (!(ssr > 0.0)) throw EstimationError("zero residual variance");
  return loglik_from_ssr(ssr, series.n());
}

ArmaSpec hannan_rissanen_init(const TimeSeries& series, int p, int q) {
  series.validate();
  const auto& x = series.values;
  const int n = series.n();
  if (n < p + q + 2) throw ValidationError("series too short for Hannan-Rissanen");

  if (p == 0 && q == 0) return fallback_spec(series, 0, 0);

  int t0 = p;
  std::vector<double> ehat;
  int m = 0;
  if (q > 0) {
    m = long_ar_order(n);
    bool ok = false;
    ehat = long_ar_residuals(series, m, ok);
    if (!ok) return fallback_spec(series, p, q);
    t0 = std::max(p, m + q);
  }
  const int rows = n - t0;
  if (rows < p + q + 2) return fallback_spec(series, p, q);

  Eigen::MatrixXd Z(rows, 1 + p + q);
  Eigen::VectorXd y(rows);
  for (int i = 0; i < rows; ++i) {
    const int t = t0 + i;
    Z(i, 0) = 1.0;
    for (int k = 1; k <= p; ++k) Z(i, k) = x[t - k];
    for (int s = 1; s <= q; ++s) Z(i, p + s) = ehat[t - s];
    y[i] = x[t];
  }
  const Lsq fit = solve_ols(Z, y);
  if (!fit.full_rank) return fallback_spec(series, p, q);

  ArmaSpec spec;
  spec.p = p;
  spec.q = q;
  spec.phi.assign(fit.beta.data(), fit.beta.data() + p + 1);
  spec.theta.resize(q);
  for (int s = 0; s < q; ++s) spec.theta[s] = -fit.beta[p + 1 + s];  // Eq. (6) sign
  const double ssr = fit.residuals.squaredNorm();
  spec.sigma2 = ssr > 0.0 ? ssr / rows : 1.0;
  return shrink_to_valid(spec);
}

namespace {

struct ScoringResult {
  Eigen::VectorXd x;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;  // profile log-likelihood at accepted points
};

double loglik_from_ssr_n(double ssr, int n) {
  return -0.5 * n * (std::log(ssr / n * kTwoPi) + 1.0);
}

/// Exact Hessian of SSR/2 at zeta: J^T J + sum_t e_t He_t, where the residual
/// second derivatives He_t obey
///   w^{ij}_t = [i = theta_a] u^j_{t-a} + [j = theta_b] u^i_{t-b} + sum_s theta_s w^{ij}_{t-s}
/// and vanish when neither coordinate is an MA parameter.
Eigen::MatrixXd ssr_half_hessian(const ArmaSpec& spec, std::span<const double> eps,
                                 const Eigen::MatrixXd& J, const Eigen::MatrixXd& JtJ) {
  const int n = static_cast<int>(eps.size());
  const int p = spec.p, q = spec.q, k = p + q + 1;
  Eigen::MatrixXd H = JtJ;
  if (q == 0) return H;
  std::vector<double> w(n);
  for (int i = 0; i < k; ++i) {
    for (int j = std::max(i, p + 1); j < k; ++j) {  // j is an MA coordinate
      const int b = j - p;
      const int a = i - p;  // >= 1 only when i is an MA coordinate
      double corr = 0.0;
      for (int t = 0; t < n; ++t) {
        double v = t - b >= 0 ? J(t - b, i) : 0.0;
        if (a >= 1 && t - a >= 0) v += J(t - a, j);
        for (int s = 1; s <= q && s <= t; ++s) v += spec.theta[s - 1] * w[t - s];
        w[t] = v;
        corr += eps[t] * v;
      }
      H(i, j) += corr;
      if (i != j) H(j, i) += corr;
    }
  }
  return H;
}

/// Damped Newton ascent of the profile likelihood through the residual sum of
/// squares, with the analytic Jacobian and exact Hessian.  Candidates
/// violating the root conditions are rejected by raising the damping
/// (infeasibility barrier).  Steps are accepted on a residual-sum decrease
/// or, once such decreases fall below floating-point resolution, on a strict
/// contraction of the score norm (Newton polishing of the first-order
/// conditions).  Convergence is declared on the full-scale profile gradient
/// (n/SSR) J^T e, norm <= 1e-6.
ScoringResult scoring_fit(const TimeSeries& series, int p, int q, const Eigen::VectorXd& x0) {
  const int n = series.n();
  ScoringResult res;
  res.x = x0;

  std::vector<double> eps(n);
  ArmaSpec spec = spec_from_zeta(p, q, res.x);
  if (!spec.is_valid()) throw EstimationError("infeasible starting point for ARMA fit");
  residuals_into(spec, series.values, eps);
  double ssr = sum_sq(eps);
  if (!(ssr > 0.0)) throw EstimationError("zero residual variance at the starting point");
  res.trace.push_back(loglik_from_ssr_n(ssr, n));

  auto map_eps = [n](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), n);
  };
  Eigen::MatrixXd J = zeta_derivatives(series, spec, eps);
  Eigen::VectorXd Jte = J.transpose() * map_eps(eps);
  Eigen::MatrixXd JtJ = J.transpose() * J;
  Eigen::MatrixXd H = ssr_half_hessian(spec, eps, J, JtJ);
  double lambda = 1e-4;
  std::vector<double> eps_cand(n);

  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    res.iterations = iter;
    if ((n / ssr) * Jte.norm() <= kGradTol) {
      res.converged = true;
      break;
    }

    // Marquardt-scaled damping keeps the step sane across column scales; the
    // outer-product diagonal is positive even where H is indefinite.
    const Eigen::VectorXd diag = JtJ.diagonal().cwiseMax(1e-12);
    bool accepted = false;
    double ssr_cand = ssr;
    Eigen::VectorXd x_cand;
    Eigen::MatrixXd J_cand;
    Eigen::VectorXd Jte_cand;
    double trial_lambda = 0.0;  // undamped Newton first
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      Eigen::MatrixXd A = H;
      A.diagonal() += trial_lambda * diag;
      const Eigen::VectorXd delta = A.ldlt().solve(-Jte);
      x_cand = res.x + delta;
      const ArmaSpec cand = spec_from_zeta(p, q, x_cand);
      if (cand.is_valid() && delta.allFinite()) {
        residuals_into(cand, series.values, eps_cand);
        ssr_cand = sum_sq(eps_cand);
        if (std::isfinite(ssr_cand)) {
          J_cand = zeta_derivatives(series, cand, eps_cand);
          Jte_cand = J_cand.transpose() * map_eps(eps_cand);
          if (ssr_cand < ssr ||
              (ssr_cand <= ssr * (1.0 + 1e-10) && Jte_cand.norm() < 0.9 * Jte.norm())) {
            accepted = true;
            break;
          }
        }
      }
      trial_lambda = trial_lambda == 0.0 ? lambda : trial_lambda * 4.0;
    }
    if (!accepted) break;  // no usable step below the damping ceiling

    lambda = std::max(trial_lambda, 1e-8);
    res.x = x_cand;
    eps.swap(eps_cand);
    ssr = ssr_cand;
    J.swap(J_cand);
    Jte.swap(Jte_cand);
    JtJ = J.transpose() * J;
    spec = spec_from_zeta(p, q, res.x);
    H = ssr_half_hessian(spec, eps, J, JtJ);
    lambda = std::max(lambda * 0.1, 1e-8);
    res.trace.push_back(loglik_from_ssr_n(ssr, n));
  }
  if (!res.converged && (n / ssr) * Jte.norm() <= kGradTol) res.converged = true;
  return res;
}

ArmaFit finalize_fit(const TimeSeries& series, ArmaSpec spec, bool converged, int iterations,
                     std::vector<double> trace) {
  const int n = series.n();
  ArmaFit fit;
  std::vector<double> eps(n);
  residuals_into(spec, series.values, eps);
  const double ssr = sum_sq(eps);
  if (!(ssr > 0.0)) throw EstimationError("zero residual variance at the optimum");
  spec.sigma2 = ssr / n;
  fit.spec = std::move(spec);
  fit.residuals = std::move(eps);
  fit.loglik = loglik_from_ssr(ssr, n);
  fit.converged = converged;
  fit.iterations = iterations;
  const double k = fit.spec.p + fit.spec.q + 2;  // intercept, AR, MA, sigma2
  fit.naic = (-2.0 * fit.loglik + 2.0 * k) / n;
  fit.nbic = (-2.0 * fit.loglik + std::log(static_cast<double>(n)) * k) / n;
  fit.objective_trace = std::move(trace);
  return fit;
}

}  // namespace

ArmaFit fit_arma(const TimeSeries& series, int p, int q) {
  series.validate();
  if (p < 0 || q < 0) throw ValidationError("orders must be non-negative");
  const int n = series.n();
  if (n < 10 * (p + q + 2))
    throw ValidationError("series too short: need n >= 10 (p+q+2)");
  const double var = sample_var(series.values);
  const double mean = sample_mean(series.values);
  if (var <= 1e-14 * (1.0 + mean * mean))
    throw EstimationError("degenerate series: zero variance");

  if (q == 0) {
    // The profiled conditional MLE is ordinary least squares on the
    // zero-initialized lag design; solve it exactly.
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, p + 1);
    Eigen::VectorXd y(n);
    const auto& x = series.values;
    for (int t = 0; t < n; ++t) {
      Z(t, 0) = 1.0;
      for (int k = 1; k <= p && k <= t; ++k) Z(t, k) = x[t - k];
      y[t] = x[t];
    }
    const Lsq ols = solve_ols(Z, y);
    ArmaSpec spec;
    spec.p = p;
    spec.q = 0;
    spec.phi.assign(ols.beta.data(), ols.beta.data() + p + 1);
    if (ols.full_rank && spec.is_valid()) {
      const double ll = loglik_from_ssr(ols.residuals.squaredNorm(), n);
      return finalize_fit(series, std::move(spec), true, 1, {ll});
    }
    // Boundary or collinear case: fall through to the barrier optimizer
    // from a shrunk interior point.
  }

  const ArmaSpec start = shrink_to_valid(hannan_rissanen_init(series, p, q));
  const ScoringResult res = scoring_fit(series, p, q, zeta_from_spec(start));
  ArmaSpec spec = spec_from_zeta(p, q, res.x);
  return finalize_fit(series, std::move(spec), res.converged, res.iterations, res.trace);
}

OrderSelection select_order_hr(const TimeSeries& series, int p_max, int q_max,
                               OrderCriterion criterion) {
  series.validate();
  if (p_max < 1 || q_max < 1) throw ValidationError("p_max and q_max must be >= 1");
  const auto& x = series.values;
  const int n = series.n();
  const int m = long_ar_order(n);
  const int t0 = std::max(p_max, m + q_max);
  const int rows = n - t0;
  if (rows < p_max + q_max + 2) throw ValidationError("series too short for order selection");

  bool stage1_ok = false;
  const std::vector<double> ehat = long_ar_residuals(series, m, stage1_ok);

  OrderSelection sel;
  sel.long_ar_order = m;
  sel.criterion_grid =
      Eigen::MatrixXd::Constant(p_max + 1, q_max + 1, std::numeric_limits<double>::infinity());

  const double logn = std::log(static_cast<double>(rows));
  for (int p = 0; p <= p_max; ++p) {
    for (int q = 0; q <= q_max; ++q) {
      if (p == 0 && q == 0) continue;
      if (q > 0 && !stage1_ok) continue;
      Eigen::MatrixXd Z(rows, 1 + p + q);
      Eigen::VectorXd y(rows);
      for (int i = 0; i < rows; ++i) {
        const int t = t0 + i;
        Z(i, 0) = 1.0;
        for (int k = 1; k <= p; ++k) Z(i, k) = x[t - k];
        for (int s = 1; s <= q; ++s) Z(i, p + s) = ehat[t - s];
        y[i] = x[t];
      }
      const Lsq fit = solve_ols(Z, y);
      if (!fit.full_rank) continue;
      const double sigma2 = fit.residuals.squaredNorm() / rows;
      if (!(sigma2 > 0.0)) continue;
      const double penalty =
          criterion == OrderCriterion::BIC ? (p + q + 1) * logn : 2.0 * (p + q + 1);
      sel.criterion_grid(p, q) = rows * std::log(sigma2) + penalty;
    }
  }

  double best = std::numeric_limits<double>::infinity();
  for (int p = 0; p <= p_max; ++p) {
    for (int q = 0; q <= q_max; ++q) {
      const double bic = sel.criterion_grid(p, q);
      if (!std::isfinite(bic)) continue;
      const bool better =
          bic < best ||
          (bic == best && (p + q < sel.p_hat + sel.q_hat ||
                           (p + q == sel.p_hat + sel.q_hat && p < sel.p_hat)));
      if (better) {
        best = bic;
        sel.p_hat = p;
        sel.q_hat = q;
      }
    }
  }
  if (!std::isfinite(best)) throw EstimationError("order selection failed on all candidates");
  return sel;
}

}  // namespace tarma
