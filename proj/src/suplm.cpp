#include "tarma/suplm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tarma/tables.hpp"

namespace tarma {

std::vector<double> threshold_grid(const TimeSeries& series, int d, Band band, int max_points) {
  series.validate();
  if (d < 1) throw ValidationError("delay d must be >= 1");
  if (!(band.first > 0.0 && band.first < band.second && band.second < 1.0))
    throw ValidationError("empty percentile band: need 0 < pi_L < pi_U < 1");
  if (max_points < 2) throw ValidationError("max_points must be >= 2");
  const auto& x = series.values;
  const int n = series.n();
  if (n <= d) throw ValidationError("series too short for delay d");

  // Candidate thresholds are the observed delayed values X_{t-d}.
  std::vector<double> cand(x.begin(), x.end() - d);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  std::vector<double> sorted(x);
  std::sort(sorted.begin(), sorted.end());

  // Keep candidates whose empirical-CDF rank lies inside the band.
  std::vector<double> grid;
  for (double v : cand) {
    const auto le = std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
    const double rank = static_cast<double>(le) / n;
    if (rank >= band.first && rank <= band.second) grid.push_back(v);
  }
  if (grid.empty()) throw ValidationError("no thresholds inside the percentile band");

  const int K = static_cast<int>(grid.size());
  if (K <= max_points) return grid;
  std::vector<double> thinned;
  thinned.reserve(max_points);
  for (int i = 0; i < max_points; ++i) {
    const int idx = static_cast<int>(
        std::llround(static_cast<double>(i) * (K - 1) / (max_points - 1)));
    if (thinned.empty() || grid[idx] != thinned.back()) thinned.push_back(grid[idx]);
  }
  return thinned;
}

Eigen::VectorXd score_vector(const ScorePanel& panel, std::span<const double> residuals,
                             double sigma2, double r) {
  const int g = panel.grid_index(r);
  if (static_cast<int>(residuals.size()) != panel.d_psi[g].rows())
    throw ValidationError("residual vector length must match the panel");
  const Eigen::Map<const Eigen::VectorXd> eps(residuals.data(), residuals.size());
  return -(panel.d_psi[g].transpose() * eps) / sigma2;
}

InfoBlocks build_info_blocks(const ScorePanel& panel, double sigma2) {
  InfoBlocks blocks;
  blocks.I11 = (panel.d_zeta.transpose() * panel.d_zeta) / sigma2;
  blocks.I12.reserve(panel.d_psi.size());
  blocks.I22.reserve(panel.d_psi.size());
  for (const auto& dp : panel.d_psi) {
    blocks.I12.push_back((panel.d_zeta.transpose() * dp) / sigma2);
    blocks.I22.push_back((dp.transpose() * dp) / sigma2);
  }
  return blocks;
}

TestReport test_statistic(const TimeSeries& series, const ArmaFit& fit, Variant variant,
                          int d, Band band, int max_points) {
  const auto grid = threshold_grid(series, d, band, max_points);
  return test_statistic_on_grid(series, fit, variant, d, grid, band);
}

TestReport test_statistic_on_grid(const TimeSeries& series, const ArmaFit& fit,
                                  Variant variant, int d, std::span<const double> grid,
                                  Band band_echo) {
  if (!fit.converged) throw EstimationError("ARMA fit did not converge; test precondition failed");
  const double sigma2 = fit.spec.sigma2;

  TestReport report;
  report.variant = variant;
  report.grid_band = band_echo;
  report.d = d;
  report.fit = fit;

  const ScorePanel panel = build_score_panel(series, fit, grid, d, variant);
  const Eigen::Map<const Eigen::VectorXd> eps(fit.residuals.data(), fit.residuals.size());

  const Eigen::MatrixXd I11 = (panel.d_zeta.transpose() * panel.d_zeta) / sigma2;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt11(I11);

  double best = -std::numeric_limits<double>::infinity();
  double best_r = 0.0;
  for (std::size_t g = 0; g < panel.d_psi.size(); ++g) {
    const auto& dp = panel.d_psi[g];
    const Eigen::VectorXd s = -(dp.transpose() * eps) / sigma2;
    const Eigen::MatrixXd I12 = (panel.d_zeta.transpose() * dp) / sigma2;
    const Eigen::MatrixXd I22 = (dp.transpose() * dp) / sigma2;
    Eigen::MatrixXd S = I22 - I12.transpose() * ldlt11.solve(I12);
    S = 0.5 * (S + S.transpose()).eval();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (!(min_eig > 1e-10 * S.trace())) {
      report.skipped_r.push_back(grid[g]);
      continue;
    }
    const double tn_r = std::max(0.0, s.dot(S.ldlt().solve(s)));
    report.profile.emplace_back(grid[g], tn_r);
    if (tn_r > best) {  // strict: ties keep the smallest maximizer
      best = tn_r;
      best_r = grid[g];
    }
  }
  if (report.profile.empty())
    throw SingularityError("information matrix ill-conditioned at every grid threshold");
  report.statistic = best;
  report.r_hat = best_r;
  return report;
}

double pvalue(const TestReport& report, const QuantileTable& table) {
  if (table.variant != report.variant) throw ValidationError("table mismatch: variant");
  if (std::abs(table.band.first - report.grid_band.first) > 1e-12 ||
      std::abs(table.band.second - report.grid_band.second) > 1e-12)
    throw ValidationError("table mismatch: percentile band");
  const int report_dim = psi_dim(report.variant, report.fit.spec.p, report.fit.spec.q);
  if (table.dim() != report_dim)
    throw ValidationError("table mismatch: tested-parameter dimension");
  if (table.B < 1 || table.knots.size() < 2) throw ValidationError("table mismatch: empty table");

  const double clip_lo = 1.0 / (table.B + 1);
  const double clip_hi = 1.0 - clip_lo;
  const double tn = report.statistic;
  const auto& knots = table.knots;

  double p;
  if (tn < knots.front().second) {
    p = clip_hi;
  } else if (tn >= knots.back().second) {
    p = clip_lo;
  } else {
    const auto hi = std::lower_bound(knots.begin(), knots.end(), tn,
                                     [](const auto& knot, double v) { return knot.second < v; });
    if (hi->second == tn) {
      p = 1.0 - hi->first;
    } else {
      const auto lo = hi - 1;
      const double f = lo->first + (hi->first - lo->first) * (tn - lo->second) /
                                       (hi->second - lo->second);
      p = 1.0 - f;
    }
  }
  return std::clamp(p, clip_lo, clip_hi);
}

}  // namespace tarma
