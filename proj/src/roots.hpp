#pragma once

#include <complex>
#include <span>
#include <vector>

namespace tarma::detail {

/// Roots of c0 + c1 z + ... + cm z^m.  Trailing coefficients below 1e-12 in
/// magnitude are trimmed (degree reduction); a constant polynomial has no
/// roots.  Degrees one and two are solved in closed form, higher degrees via
/// the companion matrix.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

/// All roots strictly outside the closed unit disk with the given margin.
bool roots_outside_unit_disk(const std::vector<std::complex<double>>& roots, double margin);

/// Any root of `a` within `tol` of a root of `b`.
bool share_root(const std::vector<std::complex<double>>& a,
                const std::vector<std::complex<double>>& b, double tol);

/// Characteristic polynomial 1 - c1 z - ... - cm z^m of an AR/MA coefficient
/// block (the leading 1 is implicit in `lag_coeffs`).
std::vector<double> lag_polynomial(std::span<const double> lag_coeffs);

}  // namespace tarma::detail
