#include "roots.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace tarma::detail {

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
  int m = static_cast<int>(coeffs.size()) - 1;
  while (m > 0 && std::abs(coeffs[m]) < 1e-12) --m;
  std::vector<std::complex<double>> roots;
  if (m <= 0) return roots;
  if (m == 1) {
    roots.emplace_back(-coeffs[0] / coeffs[1], 0.0);
    return roots;
  }
  if (m == 2) {
    const double a = coeffs[2], b = coeffs[1], c = coeffs[0];
    const std::complex<double> disc = std::sqrt(std::complex<double>(b * b - 4.0 * a * c, 0.0));
    // Citardauq form for the smaller-magnitude root keeps cancellation in check.
    const std::complex<double> q = -0.5 * (b + (b >= 0 ? disc : -disc));
    roots.push_back(q / a);
    roots.push_back(std::abs(q) > 0 ? c / q : std::complex<double>(0.0, 0.0));
    return roots;
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < m; ++i) companion(i, m - 1) = -coeffs[i] / coeffs[m];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  const auto& ev = solver.eigenvalues();
  roots.reserve(m);
  for (int i = 0; i < m; ++i) roots.push_back(ev[i]);
  return roots;
}

bool roots_outside_unit_disk(const std::vector<std::complex<double>>& roots, double margin) {
  for (const auto& z : roots) {
    if (std::abs(z) <= 1.0 + margin) return false;
  }
  return true;
}

bool share_root(const std::vector<std::complex<double>>& a,
                const std::vector<std::complex<double>>& b, double tol) {
  for (const auto& za : a) {
    for (const auto& zb : b) {
      if (std::abs(za - zb) < tol) return true;
    }
  }
  return false;
}

std::vector<double> lag_polynomial(std::span<const double> lag_coeffs) {
  std::vector<double> poly(lag_coeffs.size() + 1);
  poly[0] = 1.0;
  for (std::size_t k = 0; k < lag_coeffs.size(); ++k) poly[k + 1] = -lag_coeffs[k];
  return poly;
}

}  // namespace tarma::detail
