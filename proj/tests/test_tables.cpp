#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "tarma/arma.hpp"
#include "tarma/dgp.hpp"
#include "tarma/suplm.hpp"
#include "tarma/tables.hpp"

using namespace tarma;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("bundled paper tables answer the documented lookups") {
  const QuantileTable* a = find_bundled(Variant::GENERAL, 4, 2, {0.25, 0.75});
  REQUIRE(a != nullptr);
  CHECK(a->knot(0.99) == 26.42);

  const QuantileTable* b = find_bundled(Variant::AR_ONLY, 1, 2, {0.25, 0.75});
  REQUIRE(b != nullptr);
  CHECK(b->knot(0.90) == 9.64);

  CHECK(find_bundled(Variant::AR_ONLY, 5, 1, {0.25, 0.75}) == nullptr);

  for (const auto& t : bundled_defaults()) {
    CHECK(t.source == "paper");
    for (std::size_t i = 1; i < t.knots.size(); ++i)
      CHECK(t.knots[i].second > t.knots[i - 1].second);
  }
}

TEST_CASE("table finder prefers exact order, then dimension") {
  const auto& tables = bundled_defaults();
  const QuantileTable* exact = find_table(tables, Variant::AR_ONLY, 2, 1, {0.25, 0.75});
  REQUIRE(exact != nullptr);
  CHECK(exact->p == 2);
  CHECK(exact->q == 1);
  // sLM with q = 0 is untabulated; dimension matching hands back a q > 0 table
  // with the same tested-parameter count.
  const QuantileTable* dim = find_table(tables, Variant::AR_ONLY, 2, 0, {0.25, 0.75});
  REQUIRE(dim != nullptr);
  CHECK(dim->dim() == 3);
}

TEST_CASE("smoke tabulation produces monotone knots and is thread-invariant") {
  const ArmaSpec gen = default_tabulation_generator(1, 1);
  const QuantileTable t1 =
      tabulate(Variant::AR_ONLY, 1, 1, {0.25, 0.75}, gen, 1000, 100, 99, 1);
  const QuantileTable t4 =
      tabulate(Variant::AR_ONLY, 1, 1, {0.25, 0.75}, gen, 1000, 100, 99, 4);
  REQUIRE(t1.full_sample.has_value());
  CHECK(*t1.full_sample == *t4.full_sample);
  CHECK(t1.knots == t4.knots);
  for (std::size_t i = 1; i < t1.knots.size(); ++i) {
    CHECK(t1.knots[i].first > t1.knots[i - 1].first);
    CHECK(t1.knots[i].second > t1.knots[i - 1].second);
  }
  CHECK_THROWS_AS(tabulate(Variant::AR_ONLY, 1, 1, {0.25, 0.75}, gen, 1000, 50, 99, 1),
                  ValidationError);  // B too small
}

TEST_CASE("save and load round-trip a table losslessly") {
  const ArmaSpec gen = default_tabulation_generator(1, 1);
  const QuantileTable table =
      tabulate(Variant::GENERAL, 1, 1, {0.25, 0.75}, gen, 800, 150, 7, 2);
  const auto path = temp_file("tarma_roundtrip.qt.json");
  save_table(table, path);
  const QuantileTable loaded = load_table(path);
  CHECK(loaded.variant == table.variant);
  CHECK(loaded.p == table.p);
  CHECK(loaded.q == table.q);
  CHECK(loaded.band == table.band);
  CHECK(loaded.n_sim == table.n_sim);
  CHECK(loaded.B == table.B);
  CHECK(loaded.seed == table.seed);
  CHECK(loaded.knots == table.knots);
  REQUIRE(loaded.full_sample.has_value());
  CHECK(*loaded.full_sample == *table.full_sample);
  CHECK(loaded.generator.phi == table.generator.phi);
  std::filesystem::remove(path);
}

TEST_CASE("corrupted and truncated table files are rejected") {
  const ArmaSpec gen = default_tabulation_generator(1, 1);
  const QuantileTable table =
      tabulate(Variant::AR_ONLY, 1, 1, {0.25, 0.75}, gen, 800, 120, 3, 2, false);
  const auto path = temp_file("tarma_corrupt.qt.json");
  save_table(table, path);

  std::string text;
  {
    std::ifstream in(path);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  // Flip one digit inside a knot value: checksum failure.
  const auto pos = text.find("knots");
  auto digit = text.find_first_of("123456789", pos);
  std::string corrupted = text;
  corrupted[digit] = corrupted[digit] == '9' ? '8' : '9';
  {
    std::ofstream out(path);
    out << corrupted;
  }
  CHECK_THROWS_AS(load_table(path), IoError);

  {
    std::ofstream out(path);
    out << text.substr(0, text.size() / 2);
  }
  CHECK_THROWS_AS(load_table(path), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("p-values from a fresh table are close to uniform under the null") {
  const ArmaSpec gen = default_tabulation_generator(1, 1);
  const QuantileTable table =
      tabulate(Variant::AR_ONLY, 1, 1, {0.25, 0.75}, gen, 600, 1500, 404, 4, false);

  const int m = 1000;
  std::vector<double> pvals;
  pvals.reserve(m);
  for (int i = 0; i < m; ++i) {
    const auto x = simulate_arma(gen, 600, kDefaultBurnIn, RngStream{505, (unsigned)i});
    ArmaFit fit;
    try {
      fit = fit_arma(x, 1, 1);
    } catch (const EstimationError&) {
      continue;
    }
    if (!fit.converged) continue;
    TestReport report;
    try {
      report = test_statistic(x, fit, Variant::AR_ONLY, 1, {0.25, 0.75});
    } catch (const SingularityError&) {
      continue;
    }
    pvals.push_back(pvalue(report, table));
  }
  REQUIRE(pvals.size() > 950);
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  const int kept = static_cast<int>(pvals.size());
  for (int i = 0; i < kept; ++i) {
    ks = std::max(ks, std::abs(pvals[i] - (i + 1.0) / kept));
    ks = std::max(ks, std::abs(pvals[i] - static_cast<double>(i) / kept));
  }
  CHECK(ks < 0.06);
}

TEST_CASE("tabulated quantiles barely move across generator parameters") {
  const Band band{0.25, 0.75};
  const int threads = std::max(1u, std::thread::hardware_concurrency());
  ArmaSpec g1 = default_tabulation_generator(1, 1);  // (0.3, 0.2)
  ArmaSpec g2 = g1;
  g2.phi[1] = -0.6;
  g2.theta[0] = 0.4;
  const QuantileTable t1 =
      tabulate(Variant::AR_ONLY, 1, 1, band, g1, 1000, 2500, 21, threads, false);
  const QuantileTable t2 =
      tabulate(Variant::AR_ONLY, 1, 1, band, g2, 1000, 2500, 22, threads, false);
  CHECK(std::abs(t1.knot(0.95) - t2.knot(0.95)) <= 0.5);
}

TEST_CASE("tabulate rejects a generator of the wrong order") {
  CHECK_THROWS_AS(tabulate(Variant::AR_ONLY, 2, 1, {0.25, 0.75},
                           default_tabulation_generator(1, 1), 600, 200, 1, 1),
                  ValidationError);
}

TEST_CASE("table filenames follow the convention") {
  CHECK(table_filename(Variant::AR_ONLY, 1, 1, {0.25, 0.75}) == "slm_p1q1_b0.25-0.75.qt.json");
  CHECK(table_filename(Variant::GENERAL, 4, 2, {0.1, 0.9}) == "slmg_p4q2_b0.1-0.9.qt.json");
}
