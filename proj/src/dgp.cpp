#include "tarma/dgp.hpp"

#include <algorithm>
#include <cmath>

#include "roots.hpp"

namespace tarma {

namespace {

constexpr double kRootMargin = 1e-8;
constexpr double kCommonRootTol = 1e-6;

std::string arma_spec_issue(const ArmaSpec& s) {
  if (s.p < 0 || s.q < 0) return "negative model order";
  if (static_cast<int>(s.phi.size()) != s.p + 1)
    return "phi must have length p+1 (intercept first)";
  if (static_cast<int>(s.theta.size()) != s.q) return "theta must have length q";
  for (double v : s.phi)
    if (!std::isfinite(v)) return "non-finite AR coefficient";
  for (double v : s.theta)
    if (!std::isfinite(v)) return "non-finite MA coefficient";
  if (!(s.sigma2 > 0.0) || !std::isfinite(s.sigma2)) return "sigma2 must be positive";

  const std::span<const double> ar_lags(s.phi.data() + 1, static_cast<std::size_t>(s.p));
  const auto ar_roots = detail::polynomial_roots(detail::lag_polynomial(ar_lags));
  if (!detail::roots_outside_unit_disk(ar_roots, kRootMargin))
    return "AR polynomial has a root inside or on the unit disk";
  const auto ma_roots = detail::polynomial_roots(detail::lag_polynomial(s.theta));
  if (!detail::roots_outside_unit_disk(ma_roots, kRootMargin))
    return "MA polynomial has a root inside or on the unit disk";
  if (detail::share_root(ar_roots, ma_roots, kCommonRootTol))
    return "AR and MA polynomials share a common root";
  return {};
}

}  // namespace

void ArmaSpec::validate() const {
  const std::string issue = arma_spec_issue(*this);
  if (!issue.empty()) throw ValidationError("invalid ARMA spec: " + issue);
}

bool ArmaSpec::is_valid() const { return arma_spec_issue(*this).empty(); }

void TarmaSpec::validate() const {
  base.validate();
  const int expected = psi_ma_present ? base.p + base.q + 1 : base.p + 1;
  if (static_cast<int>(psi.size()) != expected)
    throw ValidationError("psi must have length " + std::to_string(expected));
  if (d < 1) throw ValidationError("delay d must be >= 1");
  if (!std::isfinite(r)) throw ValidationError("threshold r must be finite");

  ArmaSpec regime1 = base;
  for (int k = 0; k <= base.p; ++k) regime1.phi[k] += psi[k];
  if (psi_ma_present) {
    for (int s = 0; s < base.q; ++s) regime1.theta[s] += psi[base.p + 1 + s];
  }
  const std::string issue = arma_spec_issue(regime1);
  if (!issue.empty()) throw ValidationError("invalid TARMA regime-1 polynomials: " + issue);
}

void LocalAltSpec::validate() const {
  base.validate();
  const int withma = base.p + base.q + 1, aronly = base.p + 1;
  if (static_cast<int>(h.size()) != withma && static_cast<int>(h.size()) != aronly)
    throw ValidationError("h must have length p+1 or p+q+1");
  if (n < 1) throw ValidationError("local alternative needs n >= 1");
  if (d < 1) throw ValidationError("delay d must be >= 1");
  if (!std::isfinite(r0)) throw ValidationError("threshold r0 must be finite");
}

InnovationSampler gaussian_innovations() {
  return [](Rng& rng) { return rng.gaussian(); };
}

std::vector<double> arma_recursion(const ArmaSpec& spec, std::span<const double> eps) {
  const int total = static_cast<int>(eps.size());
  std::vector<double> x(total);
  for (int t = 0; t < total; ++t) {
    double v = spec.phi[0] + eps[t];
    for (int k = 1; k <= spec.p && k <= t; ++k) v += spec.phi[k] * x[t - k];
    for (int s = 1; s <= spec.q && s <= t; ++s) v -= spec.theta[s - 1] * eps[t - s];
    x[t] = v;
  }
  return x;
}

std::vector<double> tarma_recursion(const TarmaSpec& spec, std::span<const double> eps) {
  const ArmaSpec& b = spec.base;
  const int total = static_cast<int>(eps.size());
  std::vector<double> x(total);
  for (int t = 0; t < total; ++t) {
    double v = b.phi[0] + eps[t];
    for (int k = 1; k <= b.p && k <= t; ++k) v += b.phi[k] * x[t - k];
    for (int s = 1; s <= b.q && s <= t; ++s) v -= b.theta[s - 1] * eps[t - s];
    // The indicator is off at pre-sample times (t - d before the start).
    if (t - spec.d >= 0 && x[t - spec.d] <= spec.r) {
      double add = spec.psi[0];
      for (int k = 1; k <= b.p && k <= t; ++k) add += spec.psi[k] * x[t - k];
      if (spec.psi_ma_present) {
        for (int s = 1; s <= b.q && s <= t; ++s) add -= spec.psi[b.p + s] * eps[t - s];
      }
      v += add;
    }
    x[t] = v;
  }
  return x;
}

namespace {

std::vector<double> draw_innovations(int total, double sigma2, RngStream stream,
                                     const InnovationSampler& sampler) {
  Rng rng(stream);
  const double scale = std::sqrt(sigma2);
  std::vector<double> eps(total);
  for (auto& e : eps) e = scale * sampler(rng);
  return eps;
}

TimeSeries tail(std::vector<double>&& path, int n) {
  std::vector<double> out(path.end() - n, path.end());
  return TimeSeries(std::move(out));
}

void check_sim_sizes(int n, int burn_in) {
  if (n < 1) throw ValidationError("simulation length n must be >= 1");
  if (burn_in < 0) throw ValidationError("burn_in must be >= 0");
}

}  // namespace

TimeSeries simulate_arma(const ArmaSpec& spec, int n, int burn_in, RngStream stream,
                         const InnovationSampler& sampler) {
  spec.validate();
  check_sim_sizes(n, burn_in);
  auto eps = draw_innovations(burn_in + n, spec.sigma2, stream, sampler);
  return tail(arma_recursion(spec, eps), n);
}

TimeSeries simulate_tarma(const TarmaSpec& spec, int n, int burn_in, RngStream stream,
                          const InnovationSampler& sampler) {
  spec.validate();
  check_sim_sizes(n, burn_in);
  auto eps = draw_innovations(burn_in + n, spec.base.sigma2, stream, sampler);
  return tail(tarma_recursion(spec, eps), n);
}

TimeSeries simulate_local_alternative(const LocalAltSpec& spec, int burn_in, RngStream stream,
                                      const InnovationSampler& sampler) {
  spec.validate();
  TarmaSpec t;
  t.base = spec.base;
  t.psi.resize(spec.h.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.n));
  for (std::size_t i = 0; i < spec.h.size(); ++i) t.psi[i] = spec.h[i] * scale;
  t.psi_ma_present = static_cast<int>(spec.h.size()) == spec.base.p + spec.base.q + 1 &&
                     spec.base.q > 0;
  t.r = spec.r0;
  t.d = spec.d;
  return simulate_tarma(t, spec.n, burn_in, stream, sampler);
}

namespace {

const std::pair<NamedDgp, const char*> kNamedDgps[] = {
    {NamedDgp::AR5, "AR5"},           {NamedDgp::AR2_1, "AR2.1"},
    {NamedDgp::AR2_2, "AR2.2"},       {NamedDgp::ARMA21_1, "ARMA21.1"},
    {NamedDgp::ARMA21_2, "ARMA21.2"}, {NamedDgp::ARMA22, "ARMA22"},
    {NamedDgp::MA2, "MA2"},           {NamedDgp::TAR3, "TAR3"},
    {NamedDgp::THREE_TAR1, "3TAR1"},  {NamedDgp::NLMA_1, "NLMA.1"},
    {NamedDgp::NLMA_2, "NLMA.2"},     {NamedDgp::BIL_1, "BIL.1"},
    {NamedDgp::BIL_2, "BIL.2"},       {NamedDgp::EXPAR_1, "EXPAR.1"},
    {NamedDgp::EXPAR_2, "EXPAR.2"},   {NamedDgp::NLAR, "NLAR"},
};

}  // namespace

NamedDgp named_dgp_from_string(const std::string& name) {
  for (const auto& [dgp, s] : kNamedDgps)
    if (name == s) return dgp;
  throw ValidationError("unknown named DGP: " + name);
}

std::string to_string(NamedDgp name) {
  for (const auto& [dgp, s] : kNamedDgps)
    if (dgp == name) return s;
  return "?";
}

std::vector<NamedDgp> all_named_dgps() {
  std::vector<NamedDgp> out;
  for (const auto& [dgp, s] : kNamedDgps) out.push_back(dgp);
  return out;
}

bool named_dgp_is_linear(NamedDgp name) {
  switch (name) {
    case NamedDgp::AR5:
    case NamedDgp::AR2_1:
    case NamedDgp::AR2_2:
    case NamedDgp::ARMA21_1:
    case NamedDgp::ARMA21_2:
    case NamedDgp::ARMA22:
    case NamedDgp::MA2:
      return true;
    default:
      return false;
  }
}

std::vector<double> simulate_logistic_map(double x0, int n, int burn_in) {
  check_sim_sizes(n, burn_in);
  double x = x0;
  for (int i = 0; i < burn_in; ++i) x = 4.0 * x * (1.0 - x);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    x = 4.0 * x * (1.0 - x);
    out[i] = x;
  }
  return out;
}

std::vector<double> named_dgp_recursion(NamedDgp name, std::span<const double> eps) {
  if (name == NamedDgp::NLAR)
    throw ValidationError("NLAR is noiseless; use simulate_logistic_map");
  const int total = static_cast<int>(eps.size());
  std::vector<double> x(total);
  auto X = [&](int t, int k) { return t - k >= 0 ? x[t - k] : 0.0; };
  auto E = [&](int t, int s) { return t - s >= 0 ? eps[t - s] : 0.0; };

  for (int t = 0; t < total; ++t) {
    double v = 0.0;
    switch (name) {
      case NamedDgp::AR5:
        v = -0.6 * X(t, 1) - 0.4 * X(t, 2) - 0.3 * X(t, 3) - 0.4 * X(t, 4) - 0.5 * X(t, 5);
        break;
      case NamedDgp::AR2_1:
        v = 0.75 * X(t, 1) - 0.125 * X(t, 2);
        break;
      case NamedDgp::AR2_2:
        v = 1.35 * X(t, 1) - 0.55 * X(t, 2);
        break;
      case NamedDgp::ARMA21_1:
        v = 0.75 * X(t, 1) - 0.125 * X(t, 2) - 0.7 * E(t, 1);
        break;
      case NamedDgp::ARMA21_2:
        v = 0.75 * X(t, 1) - 0.125 * X(t, 2) + 0.7 * E(t, 1);
        break;
      case NamedDgp::ARMA22:
        v = 0.75 * X(t, 1) - 0.125 * X(t, 2) + 0.7 * E(t, 1) - 0.4 * E(t, 2);
        break;
      case NamedDgp::MA2:
        v = 0.7 * E(t, 1) - 0.125 * E(t, 2);
        break;
      case NamedDgp::TAR3:
        if (X(t, 1) <= 0.0)
          v = 0.3 * X(t, 1) - 0.7 * X(t, 2) + 0.6 * X(t, 3);
        else
          v = -0.3 * X(t, 1) + 0.7 * X(t, 2) - 0.6 * X(t, 3);
        break;
      case NamedDgp::THREE_TAR1: {
        const double x1 = X(t, 1);
        if (x1 <= -1.0)
          v = 0.3 + 0.5 * x1;
        else if (x1 <= 1.0)
          v = 0.3 + x1;
        else
          v = 0.3 + 0.5 * x1;
        break;
      }
      case NamedDgp::NLMA_1:
        v = -0.8 * E(t, 1) * E(t, 1);
        break;
      case NamedDgp::NLMA_2:
        v = 0.8 * E(t, 1) * E(t, 1);
        break;
      case NamedDgp::BIL_1:
        v = 0.5 - 0.4 * X(t, 1) + 0.4 * E(t, 1) * X(t, 1);
        break;
      case NamedDgp::BIL_2:
        v = 0.7 * E(t, 1) * X(t, 2);
        break;
      case NamedDgp::EXPAR_1:
        v = 0.3 + 10.0 * std::exp(-X(t, 1) * X(t, 1)) * X(t, 1);
        break;
      case NamedDgp::EXPAR_2:
        v = 0.3 + 100.0 * std::exp(-X(t, 1) * X(t, 1)) * X(t, 1);
        break;
      case NamedDgp::NLAR:
        break;  // unreachable
    }
    x[t] = v + eps[t];
  }
  return x;
}

TimeSeries simulate_named_dgp(NamedDgp name, int n, int burn_in, RngStream stream) {
  check_sim_sizes(n, burn_in);
  Rng rng(stream);

  if (name == NamedDgp::NLAR) {
    double x0 = rng.uniform01();
    if (x0 == 0.0) x0 = 0.5;
    return TimeSeries(simulate_logistic_map(x0, n, burn_in));
  }

  std::vector<double> eps(burn_in + n);
  for (auto& e : eps) e = rng.gaussian();
  return tail(named_dgp_recursion(name, eps), n);
}

}  // namespace tarma
