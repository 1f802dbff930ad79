#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tarma/arma.hpp"
#include "tarma/harness.hpp"
#include "tarma/io.hpp"
#include "tarma/tables.hpp"

namespace {

using nlohmann::json;
using namespace tarma;

constexpr int kExitUsage = 2;        // I/O, parse, flag and config errors
constexpr int kExitEstimation = 3;   // estimation / singularity / tabulation errors
constexpr int kExitResume = 4;       // resume-seed mismatch

std::uint64_t effective_seed(std::uint64_t seed, bool seed_given) {
  if (seed_given) return seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void echo_config(const json& j) { std::cout << "config: " << j.dump() << "\n"; }

std::vector<Variant> parse_variants(const std::string& s) {
  if (s == "both") return {Variant::AR_ONLY, Variant::GENERAL};
  return {variant_from_string(s)};
}

/// Table resolution for `test`: explicit file, then the conventional filename
/// under $TARMA_TABLE_DIR, then bundled, then tabulation on the fly.
struct ResolvedTable {
  QuantileTable table;
  std::string origin;
};

ResolvedTable resolve_table(const std::string& table_path, Variant variant, int p, int q,
                            Band band, int auto_B, std::uint64_t seed, int threads) {
  if (!table_path.empty())
    return {load_table(table_path), "file:" + table_path};
  if (const char* dir = std::getenv("TARMA_TABLE_DIR")) {
    const auto path = std::filesystem::path(dir) / table_filename(variant, p, q, band);
    if (std::filesystem::exists(path)) return {load_table(path), "file:" + path.string()};
  }
  if (const QuantileTable* t = find_table(bundled_defaults(), variant, p, q, band))
    return {*t, "bundled"};
  std::cerr << "note: no table for (" << to_string(variant) << ", p=" << p << ", q=" << q
            << ", band " << band.first << "-" << band.second << "); tabulating B=" << auto_B
            << " on the fly\n";
  return {tabulate(variant, p, q, band, default_tabulation_generator(p, q), 1000, auto_B,
                   seed ^ 0x7ab1e5eedULL, threads, false),
          "tabulated-on-the-fly"};
}

int cmd_test(const std::string& input, int p, int q, bool auto_order, int p_max, int q_max,
             const std::string& variant_str, std::vector<double> band_v, int delay,
             int max_grid, const std::string& table_path, const std::string& json_out,
             std::uint64_t seed, int threads) {
  const Band band{band_v[0], band_v[1]};
  const TimeSeries series = read_series_csv(input);

  int use_p = p, use_q = q;
  json selection;
  if (auto_order) {
    const OrderSelection sel = select_order_hr(series, p_max, q_max);
    use_p = sel.p_hat;
    use_q = sel.q_hat;
    selection = json{{"p_hat", sel.p_hat}, {"q_hat", sel.q_hat},
                     {"long_ar_order", sel.long_ar_order}};
    std::cout << "order selection: p=" << use_p << " q=" << use_q
              << " (long AR order " << sel.long_ar_order << ")\n";
  }

  echo_config(json{{"command", "test"}, {"input", input}, {"p", use_p}, {"q", use_q},
                   {"auto_order", auto_order}, {"variant", variant_str},
                   {"band", band_v}, {"delay", delay}, {"max_grid", max_grid},
                   {"table", table_path}, {"seed", seed}});

  const ArmaFit fit = fit_arma(series, use_p, use_q);
  std::printf("ARMA(%d,%d) fit: loglik=%.4f sigma2=%.6f NAIC=%.3f NBIC=%.3f %s (%d iter)\n",
              use_p, use_q, fit.loglik, fit.spec.sigma2, fit.naic, fit.nbic,
              fit.converged ? "converged" : "NOT CONVERGED", fit.iterations);
  std::printf("  phi:  ");
  for (double v : fit.spec.phi) std::printf(" %.4f", v);
  std::printf("\n  theta:");
  for (double v : fit.spec.theta) std::printf(" %.4f", v);
  std::printf("\n");

  json out = json::array();
  for (Variant variant : parse_variants(variant_str)) {
    TestReport report = test_statistic(series, fit, variant, delay, band, max_grid);
    const ResolvedTable resolved =
        resolve_table(table_path, variant, use_p, use_q, band, 2000, seed, threads);
    report.p_value = pvalue(report, resolved.table);

    std::printf("%s: Tn = %.4f at r_hat = %.6g, p-value %s%.6g  [table: %s]\n",
                to_string(variant).c_str(), report.statistic, report.r_hat,
                *report.p_value <= 1.0 / (resolved.table.B + 1) ? "<= " : "= ",
                *report.p_value, resolved.origin.c_str());
    if (!report.skipped_r.empty())
      std::printf("  skipped %zu ill-conditioned threshold(s)\n", report.skipped_r.size());

    auto profile = report.profile;
    std::sort(profile.begin(), profile.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
    std::printf("  top thresholds:");
    for (std::size_t i = 0; i < profile.size() && i < 5; ++i)
      std::printf("  r=%.6g Tn=%.3f", profile[i].first, profile[i].second);
    std::printf("\n");

    json jr = to_json(report);
    jr["table"] = json{{"origin", resolved.origin}, {"B", resolved.table.B},
                       {"p", resolved.table.p}, {"q", resolved.table.q}};
    if (auto_order) jr["order_selection"] = selection;
    jr["seed"] = seed;
    out.push_back(jr);
  }
  if (!json_out.empty()) {
    std::ofstream f(json_out);
    if (!f) throw IoError("cannot open " + json_out);
    f << out.dump(2) << "\n";
  }
  return 0;
}

int cmd_simulate(const std::string& model, const std::string& named, int p, int q,
                 std::vector<double> phi, std::vector<double> theta, double sigma2,
                 std::vector<double> psi, bool psi_ma, double r, int delay,
                 std::vector<double> h, double r0, int n, int burn_in, std::uint64_t seed,
                 const std::string& out) {
  echo_config(json{{"command", "simulate"}, {"model", model}, {"named", named},
                   {"n", n}, {"burn_in", burn_in}, {"seed", seed}, {"out", out}});
  const RngStream stream{seed, 0};
  TimeSeries series;
  try {
    if (model == "named") {
      series = simulate_named_dgp(named_dgp_from_string(named), n, burn_in, stream);
    } else {
      ArmaSpec base;
      base.p = p;
      base.q = q;
      base.phi = phi.empty() ? std::vector<double>(p + 1, 0.0) : phi;
      base.theta = theta.empty() ? std::vector<double>(q, 0.0) : theta;
      base.sigma2 = sigma2;
      if (model == "arma") {
        series = simulate_arma(base, n, burn_in, stream);
      } else if (model == "tarma") {
        TarmaSpec spec{base, psi, psi_ma, r, delay};
        series = simulate_tarma(spec, n, burn_in, stream);
      } else if (model == "localalt") {
        LocalAltSpec spec{base, h, r0, delay, n};
        series = simulate_local_alternative(spec, burn_in, stream);
      } else {
        std::cerr << "error: unknown model '" << model << "'\n";
        return kExitUsage;
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error (simulate): " << e.what() << "\n";
    return kExitUsage;
  }
  write_series_csv(series, out);
  std::cout << "wrote " << series.n() << " values to " << out << "\n";
  return 0;
}

int cmd_tabulate(const std::string& variant_str, int p, int q, std::vector<double> band_v,
                 int B, int n_sim, std::uint64_t seed, int threads, const std::string& out,
                 std::vector<double> gen_phi, std::vector<double> gen_theta, double gen_sigma2,
                 bool no_full_sample) {
  const Band band{band_v[0], band_v[1]};
  const Variant variant = variant_from_string(variant_str);
  ArmaSpec gen = default_tabulation_generator(p, q);
  if (!gen_phi.empty()) gen.phi = gen_phi;
  if (!gen_theta.empty()) gen.theta = gen_theta;
  gen.sigma2 = gen_sigma2;

  echo_config(json{{"command", "tabulate"}, {"variant", variant_str}, {"p", p}, {"q", q},
                   {"band", band_v}, {"B", B}, {"n_sim", n_sim}, {"seed", seed},
                   {"threads", threads}, {"out", out}, {"generator", to_json(gen)}});

  const QuantileTable table =
      tabulate(variant, p, q, band, gen, n_sim, B, seed, threads, !no_full_sample);
  save_table(table, out);
  std::printf("tabulated %s (p=%d, q=%d), B=%d, n_sim=%d\n", variant_str.c_str(), p, q, B,
              n_sim);
  for (double prob : {0.90, 0.95, 0.99, 0.999})
    std::printf("  %5.1f%% : %8.3f\n", 100 * prob, table.knot(prob));
  std::cout << "saved to " << out << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path, int threads,
                   std::uint64_t seed, bool seed_given) {
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config: " + config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(std::string("cannot parse config: ") + e.what());
  }
  const bool multi = j.is_array();
  const auto configs = multi ? j : json::array({j});
  int idx = 0;
  for (const auto& cj : configs) {
    ExperimentConfig config = experiment_config_from_json(cj);
    if (seed_given) config.seed = seed;
    echo_config(to_json(config));
    std::filesystem::path out = out_path;
    if (multi) {
      out = std::filesystem::path(out_path);
      out.replace_filename(out.stem().string() + "_" + std::to_string(idx) +
                           out.extension().string());
    }
    const ExperimentReport report = run_experiment_to_file(config, out, threads);
    for (const auto& [variant, res] : report.results) {
      std::printf("%s [%s]: rejection rate %.4f (se %.4f), mean Tn %.3f\n",
                  config.name.c_str(), to_string(variant).c_str(), res.rejection_rate,
                  res.se, res.tn_mean);
    }
    std::cout << "report: " << out.string() << " (" << report.runtime_sec << " s)\n";
    ++idx;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supremum Lagrange-multiplier tests for ARMA vs threshold ARMA"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  int threads = default_threads();
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (random if omitted)");
  app.add_option("--threads", threads, "worker threads for Monte Carlo runs");

  // test
  auto* test = app.add_subcommand("test", "run the sup-LM tests on a CSV series");
  std::string input, table_path, json_out, variant_str = "both";
  int p = 1, q = 1, p_max = 3, q_max = 3, delay = 1, max_grid = kDefaultMaxGridPoints;
  bool auto_order = false;
  std::vector<double> band_v{0.25, 0.75};
  test->add_option("--input", input, "input CSV (1 or 2 columns)")->required();
  test->add_option("--p", p, "AR order");
  test->add_option("--q", q, "MA order");
  test->add_flag("--auto-order", auto_order, "select (p,q) by Hannan-Rissanen");
  test->add_option("--p-max", p_max, "max AR order for --auto-order");
  test->add_option("--q-max", q_max, "max MA order for --auto-order");
  test->add_option("--variant", variant_str, "slm | slmg | both");
  test->add_option("--band", band_v, "threshold percentile band")->expected(2)->delimiter(',');
  test->add_option("--delay", delay, "threshold delay d");
  test->add_option("--max-grid", max_grid, "max number of grid thresholds");
  test->add_option("--table", table_path, "quantile table file");
  test->add_option("--json-out", json_out, "write the full TestReport JSON here");

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate ARMA / TARMA / local-alternative / named DGPs");
  std::string model = "arma", named;
  std::vector<double> phi, theta, psi, h;
  double sigma2 = 1.0, r = 0.0, r0 = 0.0;
  bool psi_ma = false;
  int n = 1000, burn_in = kDefaultBurnIn;
  std::string out_csv = "series.csv";
  sim->add_option("--model", model, "arma | tarma | localalt | named");
  sim->add_option("--named", named, "named DGP (e.g. NLAR, EXPAR.1)");
  sim->add_option("--p", p, "AR order");
  sim->add_option("--q", q, "MA order");
  sim->add_option("--phi", phi, "intercept then AR coefficients (length p+1)")->delimiter(',');
  sim->add_option("--theta", theta, "MA coefficients (length q)")->delimiter(',');
  sim->add_option("--sigma2", sigma2, "innovation variance");
  sim->add_option("--psi", psi, "threshold coefficients")->delimiter(',');
  sim->add_flag("--psi-ma", psi_ma, "psi includes MA block");
  sim->add_option("--r", r, "threshold");
  sim->add_option("--delay", delay, "delay d");
  sim->add_option("--h-coefs", h, "local-alternative h vector")->delimiter(',');
  sim->add_option("--r0", r0, "local-alternative threshold");
  sim->add_option("--n", n, "series length");
  sim->add_option("--burn-in", burn_in, "burn-in length");
  sim->add_option("--out", out_csv, "output CSV path");

  // tabulate
  auto* tab = app.add_subcommand("tabulate", "Monte Carlo tabulation of null quantiles");
  std::string tab_variant = "slm", tab_out = "table.qt.json";
  int B = 10000, n_sim = 1000;
  std::vector<double> gen_phi, gen_theta;
  double gen_sigma2 = 1.0;
  bool no_full_sample = false;
  tab->add_option("--variant", tab_variant, "slm | slmg")->required();
  tab->add_option("--p", p, "AR order")->required();
  tab->add_option("--q", q, "MA order")->required();
  tab->add_option("--band", band_v, "threshold percentile band")->expected(2)->delimiter(',');
  tab->add_option("--B", B, "replicates");
  tab->add_option("--n-sim", n_sim, "simulated series length");
  tab->add_option("--out", tab_out, "output table path");
  tab->add_option("--gen-phi", gen_phi, "generator intercept+AR coefficients")->delimiter(',');
  tab->add_option("--gen-theta", gen_theta, "generator MA coefficients")->delimiter(',');
  tab->add_option("--gen-sigma2", gen_sigma2, "generator innovation variance");
  tab->add_flag("--no-full-sample", no_full_sample, "store knots only");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a Monte Carlo experiment config");
  std::string config_path, report_path = "report.jsonl";
  exp->add_option("--config", config_path, "experiment config JSON")->required();
  exp->add_option("--out", report_path, "JSON-lines report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const bool seed_given = seed_opt->count() > 0;
  seed = effective_seed(seed, seed_given);
  std::cout << "seed: " << seed << "\n";

  try {
    if (app.got_subcommand(test))
      return cmd_test(input, p, q, auto_order, p_max, q_max, variant_str, band_v, delay,
                      max_grid, table_path, json_out, seed, threads);
    if (app.got_subcommand(sim))
      return cmd_simulate(model, named, p, q, phi, theta, sigma2, psi, psi_ma, r, delay, h,
                          r0, n, burn_in, seed, out_csv);
    if (app.got_subcommand(tab))
      return cmd_tabulate(tab_variant, p, q, band_v, B, n_sim, seed, threads, tab_out,
                          gen_phi, gen_theta, gen_sigma2, no_full_sample);
    if (app.got_subcommand(exp))
      return cmd_experiment(config_path, report_path, threads, seed, seed_given);
  } catch (const ResumeMismatchError& e) {
    std::cerr << "error (resume): " << e.what() << "\n";
    return kExitResume;
  } catch (const IoError& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "error (validation): " << e.what() << "\n";
    return kExitUsage;
  } catch (const EstimationError& e) {
    std::cerr << "error (estimation): " << e.what() << "\n";
    return kExitEstimation;
  } catch (const SingularityError& e) {
    std::cerr << "error (singularity): " << e.what() << "\n";
    return kExitEstimation;
  } catch (const TabulationError& e) {
    std::cerr << "error (tabulation): " << e.what() << "\n";
    return kExitEstimation;
  }
  return 0;
}
