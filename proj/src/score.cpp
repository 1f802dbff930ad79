#include "tarma/score.hpp"

#include <algorithm>
#include <cmath>

namespace tarma {

std::string to_string(Variant v) { return v == Variant::AR_ONLY ? "slm" : "slmg"; }

Variant variant_from_string(const std::string& s) {
  if (s == "slm" || s == "sLM" || s == "ar_only") return Variant::AR_ONLY;
  if (s == "slmg" || s == "sLMg" || s == "general") return Variant::GENERAL;
  throw ValidationError("unknown variant: " + s);
}

AlphaSeq alpha_sequence(std::span<const double> theta, int n) {
  if (n < 1) throw ValidationError("alpha sequence needs n >= 1");
  const int q = static_cast<int>(theta.size());
  AlphaSeq a;
  a.values.assign(n, 0.0);
  a.values[0] = 1.0;
  for (int j = 1; j < n; ++j) {
    double v = 0.0;
    for (int s = 1; s <= q && s <= j; ++s) v += theta[s - 1] * a.values[j - s];
    a.values[j] = v;
  }
  return a;
}

int ScorePanel::grid_index(double r) const {
  const auto it = std::lower_bound(grid.begin(), grid.end(), r);
  if (it == grid.end() || *it != r) throw ValidationError("threshold r is not a grid value");
  return static_cast<int>(it - grid.begin());
}

namespace {

/// Apply u_t = direct_t + sum_s theta_s u_{t-s} down a column.
void ma_filter_column(std::span<const double> theta, Eigen::MatrixXd& mat, int col) {
  const int n = static_cast<int>(mat.rows());
  const int q = static_cast<int>(theta.size());
  if (q == 0) return;
  for (int t = 0; t < n; ++t) {
    double v = mat(t, col);
    for (int s = 1; s <= q && s <= t; ++s) v += theta[s - 1] * mat(t - s, col);
    mat(t, col) = v;
  }
}

}  // namespace

Eigen::MatrixXd zeta_derivatives(const TimeSeries& series, const ArmaSpec& spec,
                                 std::span<const double> residuals) {
  const auto& x = series.values;
  const int n = series.n();
  if (static_cast<int>(residuals.size()) != n)
    throw ValidationError("residual vector length must match the series");
  const int p = spec.p, q = spec.q;
  Eigen::MatrixXd d(n, p + q + 1);

  d.col(0).setConstant(-1.0);  // d/d phi_0
  ma_filter_column(spec.theta, d, 0);
  for (int k = 1; k <= p; ++k) {
    for (int t = 0; t < n; ++t) d(t, k) = t - k >= 0 ? -x[t - k] : 0.0;
    ma_filter_column(spec.theta, d, k);
  }
  for (int s = 1; s <= q; ++s) {
    const int col = p + s;
    for (int t = 0; t < n; ++t) d(t, col) = t - s >= 0 ? residuals[t - s] : 0.0;
    ma_filter_column(spec.theta, d, col);
  }
  return d;
}

ScorePanel build_score_panel(const TimeSeries& series, const ArmaFit& fit,
                             std::span<const double> grid, int d, Variant variant) {
  series.validate();
  if (grid.empty()) throw ValidationError("threshold grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i - 1] < grid[i])) throw ValidationError("threshold grid must be strictly increasing");
  if (d < 1) throw ValidationError("delay d must be >= 1");
  const int n = series.n();
  if (static_cast<int>(fit.residuals.size()) != n)
    throw ValidationError("fit residuals unavailable or of wrong length");

  const auto& x = series.values;
  const auto& eps = fit.residuals;
  const int p = fit.spec.p, q = fit.spec.q;
  const int m = psi_dim(variant, p, q);

  ScorePanel panel;
  panel.grid.assign(grid.begin(), grid.end());
  panel.delay = d;
  panel.variant = variant;
  panel.p = p;
  panel.q = q;
  panel.d_zeta = zeta_derivatives(series, fit.spec, eps);
  panel.d_psi.reserve(grid.size());

  std::vector<double> ind(n);  // I(X_{t-d} <= r), zero at pre-sample times
  for (double r : grid) {
    for (int t = 0; t < n; ++t) ind[t] = (t - d >= 0 && x[t - d] <= r) ? 1.0 : 0.0;
    Eigen::MatrixXd dp(n, m);
    for (int t = 0; t < n; ++t) dp(t, 0) = -ind[t];
    ma_filter_column(fit.spec.theta, dp, 0);
    for (int k = 1; k <= p; ++k) {
      for (int t = 0; t < n; ++t) dp(t, k) = t - k >= 0 ? -x[t - k] * ind[t] : 0.0;
      ma_filter_column(fit.spec.theta, dp, k);
    }
    if (variant == Variant::GENERAL) {
      for (int s = 1; s <= q; ++s) {
        const int col = p + s;
        for (int t = 0; t < n; ++t) dp(t, col) = t - s >= 0 ? eps[t - s] * ind[t] : 0.0;
        ma_filter_column(fit.spec.theta, dp, col);
      }
    }
    panel.d_psi.push_back(std::move(dp));
  }
  return panel;
}

}  // namespace tarma
