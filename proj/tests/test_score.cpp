#include <doctest.h>

#include <cmath>

#include "support/oracles.hpp"
#include "tarma/arma.hpp"
#include "tarma/dgp.hpp"
#include "tarma/score.hpp"
#include "tarma/suplm.hpp"

using namespace tarma;

namespace {

ArmaSpec arma22_random(Rng& rng) {
  // Draw coefficients until the root conditions hold; keeps the draws mild.
  for (;;) {
    ArmaSpec s;
    s.p = 2;
    s.q = 2;
    s.phi = {0.4 * rng.gaussian() * 0.25, 1.2 * (rng.uniform01() - 0.5),
             0.8 * (rng.uniform01() - 0.5)};
    s.theta = {1.2 * (rng.uniform01() - 0.5), 0.8 * (rng.uniform01() - 0.5)};
    if (s.is_valid()) return s;
  }
}

// Max relative error against a finite-difference column, floored to dodge
// division by near-zero entries.
double max_rel_err(const Eigen::MatrixXd& panel_col_matrix, int col,
                   const std::vector<double>& fd) {
  double worst = 0.0;
  for (int t = 0; t < panel_col_matrix.rows(); ++t) {
    const double a = panel_col_matrix(t, col);
    const double scale = std::max({std::abs(a), std::abs(fd[t]), 1.0});
    worst = std::max(worst, std::abs(a - fd[t]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("alpha sequence closed forms") {
  const auto geo = alpha_sequence(std::vector<double>{0.5}, 5).values;
  CHECK(geo[0] == 1.0);
  CHECK(geo[1] == doctest::Approx(0.5));
  CHECK(geo[2] == doctest::Approx(0.25));
  CHECK(geo[3] == doctest::Approx(0.125));

  const auto two = alpha_sequence(std::vector<double>{0.5, 0.25}, 4).values;
  CHECK(two[0] == 1.0);
  CHECK(two[1] == doctest::Approx(0.5));
  CHECK(two[2] == doctest::Approx(0.5));     // 0.5*0.5 + 0.25*1
  CHECK(two[3] == doctest::Approx(0.375));   // 0.5*0.5 + 0.25*0.5

  const auto trivial = alpha_sequence(std::vector<double>{}, 4).values;
  CHECK(trivial == std::vector<double>{1.0, 0.0, 0.0, 0.0});

  // Geometric decay under invertibility.
  const auto decay = alpha_sequence(std::vector<double>{0.6, 0.2}, 80).values;
  CHECK(std::abs(decay[79]) < std::abs(decay[0]));
}

TEST_CASE("q = 0 derivative rows are the negative lag design") {
  ArmaSpec spec;
  spec.p = 2;
  spec.phi = {0.1, 0.5, -0.2};
  const auto x = simulate_arma(spec, 50, 0, RngStream{40, 0});
  const auto eps = residuals_conditional(x, spec);
  const auto d = zeta_derivatives(x, spec, eps);
  for (int t = 0; t < 50; ++t) {
    CHECK(d(t, 0) == -1.0);
    CHECK(d(t, 1) == (t >= 1 ? -x.values[t - 1] : 0.0));
    CHECK(d(t, 2) == (t >= 2 ? -x.values[t - 2] : 0.0));
  }
}

TEST_CASE("derivative panel matches central finite differences") {
  Rng rng(RngStream{2023, 0});
  for (int instance = 0; instance < 5; ++instance) {
    ArmaSpec gen = arma22_random(rng);
    gen.sigma2 = 1.0;
    const auto x = simulate_arma(gen, 300, kDefaultBurnIn, RngStream{300, (unsigned)instance});
    const ArmaFit fit = fit_arma(x, 2, 2);
    if (!fit.converged) continue;
    const auto grid = threshold_grid(x, 1, {0.25, 0.75}, 20);
    const ScorePanel panel = build_score_panel(x, fit, grid, 1, Variant::GENERAL);

    for (int c = 0; c < 5; ++c) {
      const auto fd = oracles::fd_zeta_column(x.values, fit.spec, c);
      CHECK(max_rel_err(panel.d_zeta, c, fd) <= 1e-5);
    }
    for (std::size_t g = 0; g < grid.size(); g += 7) {
      for (int c = 0; c < 5; ++c) {
        const auto fd =
            oracles::fd_psi_column(x.values, fit.spec, c, 5, true, grid[g], 1);
        CHECK(max_rel_err(panel.d_psi[g], c, fd) <= 1e-5);
      }
    }
  }
}

TEST_CASE("indicator at +infinity collapses d_psi onto d_zeta") {
  ArmaSpec gen;
  gen.p = 1;
  gen.q = 1;
  gen.phi = {0.0, 0.4};
  gen.theta = {0.3};
  const auto x = simulate_arma(gen, 200, kDefaultBurnIn, RngStream{41, 0});
  const ArmaFit fit = fit_arma(x, 1, 1);
  REQUIRE(fit.converged);
  const double huge = 1e6;
  const int d = 2;
  const ScorePanel panel =
      build_score_panel(x, fit, std::vector<double>{huge}, d, Variant::GENERAL);
  // Rows t <= d keep the pre-sample indicator off; beyond that the psi block
  // reproduces the zeta block exactly.
  Eigen::MatrixXd expected = panel.d_zeta;
  // Recompute with the indicator zeroed for the first d rows via the direct sums.
  const auto direct = oracles::direct_convolution_panel(
      x.values, fit.spec, fit.residuals, huge, d, Variant::GENERAL);
  for (int t = 0; t < 200; ++t)
    for (int c = 0; c < 3; ++c)
      CHECK(panel.d_psi[0](t, c) == doctest::Approx(direct.d_psi(t, c)).epsilon(1e-12));
  for (int t = d + 60; t < 200; ++t)  // far from the start the two blocks agree
    for (int c = 0; c < 3; ++c)
      CHECK(panel.d_psi[0](t, c) == doctest::Approx(expected(t, c)).epsilon(1e-8));
}

TEST_CASE("recursive evaluation equals the literal convolution sums") {
  ArmaSpec gen;
  gen.p = 2;
  gen.q = 2;
  gen.phi = {0.1, 0.3, -0.2};
  gen.theta = {0.4, 0.2};
  const auto x = simulate_arma(gen, 200, kDefaultBurnIn, RngStream{42, 0});
  const ArmaFit fit = fit_arma(x, 2, 2);
  REQUIRE(fit.converged);
  const auto grid = threshold_grid(x, 1, {0.25, 0.75}, 5);
  const ScorePanel panel = build_score_panel(x, fit, grid, 1, Variant::GENERAL);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto direct = oracles::direct_convolution_panel(
        x.values, fit.spec, fit.residuals, grid[g], 1, Variant::GENERAL);
    CHECK((panel.d_zeta - direct.d_zeta).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((panel.d_psi[g] - direct.d_psi).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("nested indicators: panel differences live on the band") {
  ArmaSpec gen;
  gen.p = 1;
  gen.q = 1;
  gen.phi = {0.0, 0.5};
  gen.theta = {0.3};
  const auto x = simulate_arma(gen, 250, kDefaultBurnIn, RngStream{43, 1});
  const ArmaFit fit = fit_arma(x, 1, 1);
  REQUIRE(fit.converged);
  const auto grid = threshold_grid(x, 1, {0.30, 0.70}, 2);
  REQUIRE(grid.size() == 2);
  const ScorePanel panel = build_score_panel(x, fit, grid, 1, Variant::GENERAL);
  const Eigen::MatrixXd diff = panel.d_psi[1] - panel.d_psi[0];

  // Direct convolution with the band indicator I(r1 < X <= r2).
  const auto alpha = alpha_sequence(fit.spec.theta, x.n()).values;
  auto X = [&](int idx) { return idx >= 1 ? x.values[idx - 1] : 0.0; };
  auto E = [&](int idx) { return idx >= 1 ? fit.residuals[idx - 1] : 0.0; };
  auto band_I = [&](int idx) {
    return idx >= 1 && x.values[idx - 1] > grid[0] && x.values[idx - 1] <= grid[1] ? 1.0 : 0.0;
  };
  for (int t = 1; t <= x.n(); ++t) {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    for (int j = 0; j <= t - 1; ++j) {
      c0 -= alpha[j] * band_I(t - 1 - j);
      c1 -= alpha[j] * X(t - 1 - j) * band_I(t - 1 - j);
      c2 += alpha[j] * E(t - 1 - j) * band_I(t - 1 - j);
    }
    CHECK(diff(t - 1, 0) == doctest::Approx(c0).epsilon(1e-10));
    CHECK(diff(t - 1, 1) == doctest::Approx(c1).epsilon(1e-10));
    CHECK(diff(t - 1, 2) == doctest::Approx(c2).epsilon(1e-10));
  }
}

TEST_CASE("panel construction rejects bad inputs") {
  ArmaSpec gen;
  gen.p = 1;
  gen.phi = {0.0, 0.4};
  const auto x = simulate_arma(gen, 120, 0, RngStream{44, 0});
  const ArmaFit fit = fit_arma(x, 1, 0);
  CHECK_THROWS_AS(build_score_panel(x, fit, std::vector<double>{1.0, 0.5}, 1, Variant::AR_ONLY),
                  ValidationError);  // unsorted grid
  CHECK_THROWS_AS(build_score_panel(x, fit, std::vector<double>{}, 1, Variant::AR_ONLY),
                  ValidationError);  // empty grid
  const ScorePanel panel =
      build_score_panel(x, fit, std::vector<double>{0.0}, 1, Variant::AR_ONLY);
  CHECK_THROWS_AS(panel.grid_index(0.5), ValidationError);
}
