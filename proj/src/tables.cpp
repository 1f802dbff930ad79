#include "tarma/tables.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "tarma/arma.hpp"
#include "tarma/errors.hpp"
#include "parallel.hpp"
#include "stats.hpp"

namespace tarma {

using nlohmann::json;

double QuantileTable::knot(double probability) const {
  for (const auto& [prob, q] : knots) {
    if (std::abs(prob - probability) < 1e-12) return q;
  }
  throw ValidationError("no knot stored at the requested probability");
}

ArmaSpec default_tabulation_generator(int p, int q) {
  ArmaSpec spec;
  spec.p = p;
  spec.q = q;
  spec.phi.assign(p + 1, 0.0);
  for (int k = 1; k <= p; ++k) spec.phi[k] = 0.3 / k;
  spec.theta.resize(q);
  for (int s = 1; s <= q; ++s) spec.theta[s - 1] = 0.2 / s;
  spec.sigma2 = 1.0;
  return spec;
}

namespace {

constexpr std::uint64_t kRedrawBlock = 1ULL << 48;
constexpr int kMaxAttempts = 50;

std::vector<double> knot_probabilities() {
  std::vector<double> probs{0.001, 0.005};
  for (int i = 1; i <= 99; ++i) probs.push_back(i / 100.0);
  probs.push_back(0.995);
  probs.push_back(0.999);
  return probs;
}

}  // namespace

QuantileTable tabulate(Variant variant, int p, int q, Band band, const ArmaSpec& generator_spec,
                       int n_sim, int B, std::uint64_t seed, int parallelism,
                       bool keep_full_sample) {
  if (B < 100) throw ValidationError("tabulation needs B >= 100");
  if (n_sim < 10 * (p + q + 2)) throw ValidationError("n_sim too small for the requested order");
  generator_spec.validate();
  if (generator_spec.p != p || generator_spec.q != q)
    throw ValidationError("generator order must match the tabulated (p, q)");

  std::vector<double> stats(B);
  std::atomic<int> redraws{0};

  detail::parallel_for(B, parallelism, [&](int i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= kMaxAttempts)
        throw TabulationError("replicate " + std::to_string(i) + " failed repeatedly");
      const RngStream stream{seed, static_cast<std::uint64_t>(i) + attempt * kRedrawBlock};
      try {
        const TimeSeries series = simulate_arma(generator_spec, n_sim, kDefaultBurnIn, stream);
        const ArmaFit fit = fit_arma(series, p, q);
        if (!fit.converged) throw EstimationError("non-converged replicate fit");
        // Tabulation takes the supremum over the full in-band threshold set;
        // thinning the grid would bias the tail knots downward.
        const TestReport rep = test_statistic(series, fit, variant, 1, band, n_sim);
        stats[i] = rep.statistic;
        if (attempt > 0) redraws.fetch_add(attempt, std::memory_order_relaxed);
        return;
      } catch (const EstimationError&) {
      } catch (const SingularityError&) {
      }
    }
  });

  if (redraws.load() * 100 >= B)
    throw TabulationError("redraw rate reached " + std::to_string(redraws.load()) + "/" +
                          std::to_string(B) + " (>= 1%): generator spec looks broken");

  std::sort(stats.begin(), stats.end());

  QuantileTable table;
  table.variant = variant;
  table.p = p;
  table.q = q;
  table.band = band;
  table.n_sim = n_sim;
  table.B = B;
  table.generator = generator_spec;
  table.seed = seed;
  table.source = "simulated";
  for (double prob : knot_probabilities()) {
    const double qv = detail::type7_quantile(stats, prob);
    if (table.knots.empty() || qv > table.knots.back().second)
      table.knots.emplace_back(prob, qv);
  }
  if (keep_full_sample) table.full_sample = stats;
  return table;
}

namespace {

constexpr int kSchemaVersion = 1;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string checksum_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

json generator_json(const ArmaSpec& spec) {
  return json{{"p", spec.p},
              {"q", spec.q},
              {"phi", spec.phi},
              {"theta", spec.theta},
              {"sigma2", spec.sigma2}};
}

ArmaSpec generator_from_json(const json& j) {
  ArmaSpec spec;
  spec.p = j.at("p").get<int>();
  spec.q = j.at("q").get<int>();
  spec.phi = j.at("phi").get<std::vector<double>>();
  spec.theta = j.at("theta").get<std::vector<double>>();
  spec.sigma2 = j.at("sigma2").get<double>();
  return spec;
}

json table_payload(const QuantileTable& t) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["variant"] = to_string(t.variant);
  j["p"] = t.p;
  j["q"] = t.q;
  j["band"] = {t.band.first, t.band.second};
  j["n_sim"] = t.n_sim;
  j["B"] = t.B;
  j["generator"] = generator_json(t.generator);
  j["seed"] = t.seed;
  json knots = json::array();
  for (const auto& [prob, q] : t.knots) knots.push_back({prob, q});
  j["knots"] = knots;
  if (t.full_sample) j["full_sample"] = *t.full_sample;
  return j;
}

}  // namespace

void save_table(const QuantileTable& table, const std::filesystem::path& path) {
  json j = table_payload(table);
  j["checksum"] = checksum_hex(table_payload(table).dump());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open table file for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing table file: " + path.string());
}

QuantileTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open table file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse table file " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw IoError("unsupported table schema version in " + path.string());
    const std::string stored = j.at("checksum").get<std::string>();
    json payload = j;
    payload.erase("checksum");
    if (checksum_hex(payload.dump()) != stored)
      throw IoError("table checksum failure: " + path.string());

    QuantileTable t;
    t.variant = variant_from_string(j.at("variant").get<std::string>());
    t.p = j.at("p").get<int>();
    t.q = j.at("q").get<int>();
    const auto band = j.at("band").get<std::vector<double>>();
    if (band.size() != 2) throw IoError("malformed band in " + path.string());
    t.band = {band[0], band[1]};
    t.n_sim = j.at("n_sim").get<int>();
    t.B = j.at("B").get<int>();
    t.generator = generator_from_json(j.at("generator"));
    t.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& kn : j.at("knots"))
      t.knots.emplace_back(kn.at(0).get<double>(), kn.at(1).get<double>());
    if (j.contains("full_sample"))
      t.full_sample = j.at("full_sample").get<std::vector<double>>();
    t.source = "file";
    return t;
  } catch (const json::exception& e) {
    throw IoError("malformed table file " + path.string() + ": " + e.what());
  }
}

std::string table_filename(Variant variant, int p, int q, Band band) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s_p%dq%d_b%g-%g.qt.json", to_string(variant).c_str(), p, q,
                band.first, band.second);
  return buf;
}

namespace {

struct PaperRow {
  int p, q;
  double slm[4];
  double slmg[4];
};

// Tabulated 90/95/99/99.9% quantiles, threshold band 25th-75th percentiles.
constexpr PaperRow kPaperRows[] = {
    {1, 1, {9.61, 11.37, 15.19, 20.38}, {11.64, 13.44, 17.42, 22.83}},
    {2, 1, {11.53, 13.41, 17.22, 22.17}, {13.48, 15.46, 19.63, 25.60}},
    {3, 1, {13.74, 15.71, 19.98, 25.04}, {15.59, 17.61, 21.91, 27.98}},
    {4, 1, {15.65, 17.68, 22.25, 27.44}, {17.42, 19.52, 24.02, 29.94}},
    {1, 2, {9.64, 11.47, 15.50, 20.25}, {13.69, 15.57, 19.67, 25.07}},
    {2, 2, {11.71, 13.48, 17.61, 22.49}, {15.59, 17.58, 21.95, 28.17}},
    {3, 2, {13.46, 15.35, 19.33, 25.06}, {17.13, 19.18, 23.54, 29.78}},
    {4, 2, {15.55, 17.58, 21.82, 27.80}, {18.97, 21.21, 26.42, 31.92}},
};
constexpr double kPaperProbs[4] = {0.90, 0.95, 0.99, 0.999};

QuantileTable paper_table(Variant variant, const PaperRow& row) {
  QuantileTable t;
  t.variant = variant;
  t.p = row.p;
  t.q = row.q;
  t.band = {0.25, 0.75};
  t.n_sim = 1000;
  t.B = 10000;
  t.generator = default_tabulation_generator(row.p, row.q);
  t.seed = 0;
  t.source = "paper";
  const double* qs = variant == Variant::AR_ONLY ? row.slm : row.slmg;
  for (int i = 0; i < 4; ++i) t.knots.emplace_back(kPaperProbs[i], qs[i]);
  return t;
}

}  // namespace

const std::vector<QuantileTable>& bundled_defaults() {
  static const std::vector<QuantileTable> tables = [] {
    std::vector<QuantileTable> out;
    for (const auto& row : kPaperRows) {
      out.push_back(paper_table(Variant::AR_ONLY, row));
      out.push_back(paper_table(Variant::GENERAL, row));
    }
    return out;
  }();
  return tables;
}

const QuantileTable* find_bundled(Variant variant, int p, int q, Band band) {
  for (const auto& t : bundled_defaults()) {
    if (t.variant == variant && t.p == p && t.q == q &&
        std::abs(t.band.first - band.first) < 1e-12 &&
        std::abs(t.band.second - band.second) < 1e-12)
      return &t;
  }
  return nullptr;
}

const QuantileTable* find_table(const std::vector<QuantileTable>& tables, Variant variant,
                                int p, int q, Band band) {
  const QuantileTable* exact = nullptr;
  const QuantileTable* same_dim = nullptr;
  const int want_dim = psi_dim(variant, p, q);
  for (const auto& t : tables) {
    if (t.variant != variant || std::abs(t.band.first - band.first) > 1e-12 ||
        std::abs(t.band.second - band.second) > 1e-12)
      continue;
    if (t.p == p && t.q == q) exact = &t;
    if (t.dim() == want_dim && !same_dim) same_dim = &t;
  }
  return exact ? exact : same_dim;
}

}  // namespace tarma
