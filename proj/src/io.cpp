#include "tarma/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tarma {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.front()))) f.erase(f.begin());
    while (!f.empty() && std::isspace(static_cast<unsigned char>(f.back()))) f.pop_back();
  }
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

TimeSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path.string());

  std::vector<double> values;
  std::string line;
  int row = 0;
  int value_col = -1;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_csv_line(line);
    const bool all_empty =
        std::all_of(fields.begin(), fields.end(), [](const auto& f) { return f.empty(); });
    if (all_empty) continue;

    if (first_content_line) {
      if (fields.size() > 2)
        throw IoError("row " + std::to_string(row) + ": expected 1 or 2 columns, got " +
                      std::to_string(fields.size()));
      value_col = fields.size() == 2 ? 1 : 0;
      double probe;
      bool numeric = true;
      for (const auto& f : fields) numeric = numeric && parse_double(f, probe);
      first_content_line = false;
      if (!numeric) continue;  // header line
    }
    if (static_cast<int>(fields.size()) <= value_col)
      throw IoError("row " + std::to_string(row) + ": missing value column");
    double v;
    if (!parse_double(fields[value_col], v))
      throw IoError("row " + std::to_string(row) + ": cannot parse value '" +
                    fields[value_col] + "'");
    if (!std::isfinite(v))
      throw IoError("row " + std::to_string(row) + ": non-finite value");
    values.push_back(v);
  }
  if (values.empty()) throw IoError("no data rows in " + path.string());
  return TimeSeries(std::move(values));
}

void write_series_csv(const TimeSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path.string());
  out << "x\n";
  char buf[40];
  for (double v : series.values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

json to_json(const ArmaSpec& spec) {
  return json{{"type", "arma"}, {"p", spec.p},         {"q", spec.q},
              {"phi", spec.phi}, {"theta", spec.theta}, {"sigma2", spec.sigma2}};
}

ArmaSpec arma_spec_from_json(const json& j) {
  ArmaSpec spec;
  spec.p = j.at("p").get<int>();
  spec.q = j.at("q").get<int>();
  spec.phi = j.at("phi").get<std::vector<double>>();
  spec.theta = j.value("theta", std::vector<double>{});
  spec.sigma2 = j.value("sigma2", 1.0);
  return spec;
}

json to_json(const TarmaSpec& spec) {
  json j = to_json(spec.base);
  j["type"] = "tarma";
  j["psi"] = spec.psi;
  j["psi_ma_present"] = spec.psi_ma_present;
  j["r"] = spec.r;
  j["d"] = spec.d;
  return j;
}

TarmaSpec tarma_spec_from_json(const json& j) {
  TarmaSpec spec;
  spec.base = arma_spec_from_json(j);
  spec.psi = j.at("psi").get<std::vector<double>>();
  spec.psi_ma_present = j.value("psi_ma_present", false);
  spec.r = j.value("r", 0.0);
  spec.d = j.value("d", 1);
  return spec;
}

json to_json(const LocalAltSpec& spec) {
  json j = to_json(spec.base);
  j["type"] = "local_alt";
  j["h"] = spec.h;
  j["r0"] = spec.r0;
  j["d"] = spec.d;
  j["n"] = spec.n;
  return j;
}

LocalAltSpec local_alt_spec_from_json(const json& j) {
  LocalAltSpec spec;
  spec.base = arma_spec_from_json(j);
  spec.h = j.at("h").get<std::vector<double>>();
  spec.r0 = j.value("r0", 0.0);
  spec.d = j.value("d", 1);
  spec.n = j.at("n").get<int>();
  return spec;
}

json to_json(const DgpSpec& dgp) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NamedDgp>)
          return json{{"type", "named"}, {"name", to_string(s)}};
        else
          return to_json(s);
      },
      dgp);
}

DgpSpec dgp_spec_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "arma") return arma_spec_from_json(j);
  if (type == "tarma") return tarma_spec_from_json(j);
  if (type == "local_alt") return local_alt_spec_from_json(j);
  if (type == "named") return named_dgp_from_string(j.at("name").get<std::string>());
  throw IoError("unknown dgp type: " + type);
}

json to_json(const ExperimentConfig& config) {
  json j;
  j["name"] = config.name;
  j["dgp"] = to_json(config.dgp);
  j["n_obs"] = config.n_obs;
  j["replicates"] = config.replicates;
  j["nominal_level"] = config.nominal_level;
  json variants = json::array();
  for (Variant v : config.variants) variants.push_back(to_string(v));
  j["variants"] = variants;
  if (config.order_policy.kind == OrderPolicy::Kind::Fixed) {
    j["order_policy"] = json{{"kind", "fixed"}, {"p", config.order_policy.p},
                             {"q", config.order_policy.q}};
  } else {
    j["order_policy"] = json{{"kind", "hannan_rissanen"},
                             {"p_max", config.order_policy.p_max},
                             {"q_max", config.order_policy.q_max}};
  }
  j["band"] = {config.band.first, config.band.second};
  j["d"] = config.d;
  j["seed"] = config.seed;
  switch (config.table_source.kind) {
    case TableSourceSpec::Kind::Bundled:
      j["table_source"] = json{{"kind", "bundled"}};
      break;
    case TableSourceSpec::Kind::File:
      j["table_source"] = json{{"kind", "file"}, {"path", config.table_source.path}};
      break;
    case TableSourceSpec::Kind::TabulateOnFly:
      j["table_source"] = json{{"kind", "tabulate"}, {"B", config.table_source.B}};
      break;
  }
  j["burn_in"] = config.burn_in;
  if (config.paired_null) j["paired_null"] = to_json(*config.paired_null);
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  c.name = j.value("name", "experiment");
  c.dgp = dgp_spec_from_json(j.at("dgp"));
  c.n_obs = j.at("n_obs").get<int>();
  c.replicates = j.at("replicates").get<int>();
  c.nominal_level = j.value("nominal_level", 0.05);
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j.at("variants")) c.variants.push_back(variant_from_string(v));
  }
  if (j.contains("order_policy")) {
    const auto& op = j.at("order_policy");
    const std::string kind = op.at("kind").get<std::string>();
    if (kind == "fixed") {
      c.order_policy.kind = OrderPolicy::Kind::Fixed;
      c.order_policy.p = op.value("p", 1);
      c.order_policy.q = op.value("q", 1);
    } else if (kind == "hannan_rissanen" || kind == "hr") {
      c.order_policy.kind = OrderPolicy::Kind::HannanRissanen;
      c.order_policy.p_max = op.value("p_max", 3);
      c.order_policy.q_max = op.value("q_max", 3);
    } else {
      throw IoError("unknown order policy: " + kind);
    }
  }
  if (j.contains("band")) {
    const auto band = j.at("band").get<std::vector<double>>();
    if (band.size() != 2) throw IoError("band must have two entries");
    c.band = {band[0], band[1]};
  }
  c.d = j.value("d", 1);
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("table_source")) {
    const auto& ts = j.at("table_source");
    const std::string kind = ts.at("kind").get<std::string>();
    if (kind == "bundled") {
      c.table_source.kind = TableSourceSpec::Kind::Bundled;
    } else if (kind == "file") {
      c.table_source.kind = TableSourceSpec::Kind::File;
      c.table_source.path = ts.at("path").get<std::string>();
    } else if (kind == "tabulate") {
      c.table_source.kind = TableSourceSpec::Kind::TabulateOnFly;
      c.table_source.B = ts.value("B", 2000);
    } else {
      throw IoError("unknown table source: " + kind);
    }
  }
  c.burn_in = j.value("burn_in", kDefaultBurnIn);
  if (j.contains("paired_null")) c.paired_null = arma_spec_from_json(j.at("paired_null"));
  return c;
}

json to_json(const ArmaFit& fit, bool include_residuals) {
  json j;
  j["p"] = fit.spec.p;
  j["q"] = fit.spec.q;
  j["phi"] = fit.spec.phi;
  j["theta"] = fit.spec.theta;
  j["sigma2"] = fit.spec.sigma2;
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["naic"] = fit.naic;
  j["nbic"] = fit.nbic;
  if (include_residuals) j["residuals"] = fit.residuals;
  return j;
}

json to_json(const TestReport& report) {
  json j;
  j["variant"] = to_string(report.variant);
  j["statistic"] = report.statistic;
  j["r_hat"] = report.r_hat;
  json profile = json::array();
  for (const auto& [r, tn] : report.profile) profile.push_back({r, tn});
  j["profile"] = profile;
  if (report.p_value) j["p_value"] = *report.p_value;
  j["skipped_r"] = report.skipped_r;
  j["fit"] = to_json(report.fit);
  j["band"] = {report.grid_band.first, report.grid_band.second};
  j["d"] = report.d;
  return j;
}

json replicate_record_json(const ReplicateRecord& rec) {
  return json{{"type", "replicate"},
              {"replicate_id", rec.replicate_id},
              {"variant", to_string(rec.variant)},
              {"Tn", rec.tn},
              {"r_hat", rec.r_hat},
              {"p_value", rec.p_value},
              {"fit_converged", rec.fit_converged}};
}

json summary_json(const ExperimentReport& report) {
  json j;
  j["type"] = "summary";
  j["config"] = to_json(report.config);
  json results;
  for (const auto& [variant, res] : report.results) {
    json r;
    r["rejection_rate"] = res.rejection_rate;
    r["se"] = res.se;
    r["tn_mean"] = res.tn_mean;
    r["tn_quantiles"] = res.tn_quantiles;
    if (res.critical_value) r["critical_value"] = *res.critical_value;
    results[to_string(variant)] = r;
  }
  j["results"] = results;
  if (!report.null_sorted.empty()) {
    json nulls;
    for (const auto& [variant, stats] : report.null_sorted) nulls[to_string(variant)] = stats;
    j["null_statistics_sorted"] = nulls;
  }
  return j;
}

}  // namespace tarma
