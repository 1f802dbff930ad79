#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kCli = TARMA_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>{});
}

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("simulate is deterministic under a fixed seed") {
  const auto a = tmp("tarma_cli_a.csv"), b = tmp("tarma_cli_b.csv");
  REQUIRE(run("simulate --model named --named NLAR --n 5 --seed 7 --out " + a.string()) == 0);
  REQUIRE(run("simulate --model named --named NLAR --n 5 --seed 7 --out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).substr(0, 2) == "x\n");

  // TARMA with psi = 0 equals the ARMA run under the same seed.
  const auto c = tmp("tarma_cli_c.csv"), d = tmp("tarma_cli_d.csv");
  REQUIRE(run("simulate --model arma --p 1 --q 1 --phi 0.1,0.4 --theta 0.2 --n 50 --seed 3 "
              "--out " + c.string()) == 0);
  REQUIRE(run("simulate --model tarma --p 1 --q 1 --phi 0.1,0.4 --theta 0.2 --psi 0,0 --r 0 "
              "--delay 1 --n 50 --seed 3 --out " + d.string()) == 0);
  CHECK(slurp(c) == slurp(d));
  for (const auto& p : {a, b, c, d}) fs::remove(p);
}

TEST_CASE("bad flags and inputs map to the documented exit codes") {
  CHECK(run("simulate --model nosuch --n 10 --out /tmp/x.csv") == 2);
  CHECK(run("simulate --model arma --p 1 --q 0 --phi 0,1.5 --n 50 --seed 1 --out /tmp/x.csv") ==
        2);  // explosive spec
  CHECK(run("test --input /nonexistent.csv --p 1 --q 1") == 2);
  CHECK(run("nonsense") == 2);

  // Constant column: estimation error, exit 3.
  const auto path = tmp("tarma_cli_const.csv");
  {
    std::ofstream out(path);
    out << "x\n";
    for (int i = 0; i < 100; ++i) out << "2.5\n";
  }
  CHECK(run("test --input " + path.string() + " --p 1 --q 1") == 3);
  fs::remove(path);
}

TEST_CASE("test reports reproducible p-values and honors user tables") {
  const auto series = tmp("tarma_cli_series.csv");
  REQUIRE(run("simulate --model arma --p 1 --q 1 --phi 0,0.3 --theta 0.2 --n 400 --seed 99 "
              "--out " + series.string()) == 0);

  const auto out1 = tmp("tarma_cli_rep1.json"), out2 = tmp("tarma_cli_rep2.json");
  REQUIRE(run("test --input " + series.string() + " --p 1 --q 1 --seed 5 --json-out " +
              out1.string()) == 0);
  REQUIRE(run("test --input " + series.string() + " --p 1 --q 1 --seed 5 --json-out " +
              out2.string()) == 0);
  CHECK(slurp(out1) == slurp(out2));

  const json reports = json::parse(slurp(out1));
  REQUIRE(reports.is_array());
  REQUIRE(reports.size() == 2);
  for (const auto& r : reports) {
    CHECK(r.at("statistic").get<double>() >= 0.0);
    CHECK(r.at("p_value").get<double>() <= 1.0);
    CHECK(r.at("fit").at("converged").get<bool>());
  }

  // Tabulate a small table and round-trip it through `test --table`.
  const auto table = tmp("tarma_cli_table.qt.json");
  REQUIRE(run("tabulate --variant slm --p 1 --q 1 --B 150 --n-sim 600 --seed 42 --out " +
              table.string()) == 0);
  CHECK(run("test --input " + series.string() + " --p 1 --q 1 --variant slm --table " +
            table.string()) == 0);
  // Mismatched table: general variant table against an slm run.
  CHECK(run("test --input " + series.string() + " --p 2 --q 1 --variant slm --table " +
            table.string()) == 2);
  for (const auto& p : {series, out1, out2, table}) fs::remove(p);
}

TEST_CASE("experiment runs from a config file, resumes, and stays deterministic") {
  const auto cfg = tmp("tarma_cli_exp.json");
  {
    json j;
    j["name"] = "cli_size";
    j["dgp"] = {{"type", "arma"}, {"p", 1}, {"q", 1}, {"phi", {0.0, -0.6}},
                {"theta", {-0.4}}, {"sigma2", 1.0}};
    j["n_obs"] = 200;
    j["replicates"] = 12;
    j["variants"] = {"slm"};
    j["order_policy"] = {{"kind", "fixed"}, {"p", 1}, {"q", 1}};
    j["seed"] = 2024;
    std::ofstream out(cfg);
    out << j.dump();
  }
  const auto rep1 = tmp("tarma_cli_rep_t1.jsonl"), rep8 = tmp("tarma_cli_rep_t8.jsonl");
  fs::remove(rep1);
  fs::remove(rep8);
  REQUIRE(run("experiment --config " + cfg.string() + " --out " + rep1.string() +
              " --threads 1") == 0);
  REQUIRE(run("experiment --config " + cfg.string() + " --out " + rep8.string() +
              " --threads 8") == 0);

  auto summary_line = [](const fs::path& p) {
    std::istringstream ss(slurp(p));
    std::string line, found;
    while (std::getline(ss, line))
      if (line.find("\"summary\"") != std::string::npos) found = line;
    return found;
  };
  CHECK(!summary_line(rep1).empty());
  CHECK(summary_line(rep1) == summary_line(rep8));

  // Rerun over the complete report: no-op, exit 0, identical bytes.
  const std::string before = slurp(rep1);
  REQUIRE(run("experiment --config " + cfg.string() + " --out " + rep1.string()) == 0);
  CHECK(slurp(rep1) == before);

  // Changing the seed on a resume attempt is refused with exit 4.
  {
    json j = json::parse(slurp(cfg));
    j["seed"] = 777;
    std::ofstream out(cfg);
    out << j.dump();
  }
  CHECK(run("experiment --config " + cfg.string() + " --out " + rep1.string()) == 4);
  for (const auto& p : {cfg, rep1, rep8}) fs::remove(p);
}
