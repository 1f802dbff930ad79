#include "tarma/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "tarma/arma.hpp"
#include "tarma/io.hpp"
#include "parallel.hpp"
#include "stats.hpp"

namespace tarma {

using nlohmann::json;

namespace {

constexpr std::uint64_t kRedrawBlock = 1ULL << 48;
constexpr std::uint64_t kPairedNullOffset = 1ULL << 32;
constexpr int kMaxAttempts = 50;

TimeSeries simulate_dgp(const DgpSpec& dgp, int n, int burn_in, RngStream stream) {
  return std::visit(
      [&](const auto& s) -> TimeSeries {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ArmaSpec>) {
          return simulate_arma(s, n, burn_in, stream);
        } else if constexpr (std::is_same_v<T, TarmaSpec>) {
          return simulate_tarma(s, n, burn_in, stream);
        } else if constexpr (std::is_same_v<T, LocalAltSpec>) {
          LocalAltSpec local = s;
          local.n = n;  // the 1/sqrt(n) scaling uses the series' own length
          return simulate_local_alternative(local, burn_in, stream);
        } else {
          return simulate_named_dgp(s, n, burn_in, stream);
        }
      },
      dgp);
}

std::vector<QuantileTable> assemble_tables(const ExperimentConfig& config, int threads) {
  switch (config.table_source.kind) {
    case TableSourceSpec::Kind::Bundled:
      return bundled_defaults();
    case TableSourceSpec::Kind::File:
      return {load_table(config.table_source.path)};
    case TableSourceSpec::Kind::TabulateOnFly: {
      std::vector<QuantileTable> tables;
      for (std::size_t i = 0; i < config.variants.size(); ++i) {
        const int p = config.order_policy.p, q = config.order_policy.q;
        tables.push_back(tabulate(config.variants[i], p, q, config.band,
                                  default_tabulation_generator(p, q), 1000,
                                  config.table_source.B,
                                  config.seed + 1000003 * (i + 1), threads,
                                  /*keep_full_sample=*/false));
      }
      return tables;
    }
  }
  throw ValidationError("unknown table source");
}

struct BatchResult {
  std::vector<ReplicateRecord> records;            // replicate-major, one per variant
  std::map<Variant, std::vector<double>> tn;       // per-variant statistics, replicate order
  int redraws = 0;
};

/// Run replicates of one DGP.  `ids` selects a subset (resume); records for
/// replicate i land in deterministic slots, so results do not depend on the
/// thread count or on how the run is split across invocations.  When
/// `require_table` is false (size-corrected runs rejecting against empirical
/// critical values) a missing table yields p_value = 1 instead of an error.
BatchResult run_batch(const ExperimentConfig& config, const DgpSpec& dgp,
                      const std::vector<QuantileTable>& tables, std::uint64_t rep_offset,
                      int threads, const std::vector<int>* ids = nullptr,
                      bool require_table = true) {
  const int nv = static_cast<int>(config.variants.size());
  std::vector<int> all_ids;
  if (!ids) {
    all_ids.resize(config.replicates);
    for (int i = 0; i < config.replicates; ++i) all_ids[i] = i;
    ids = &all_ids;
  }
  const int count = static_cast<int>(ids->size());

  BatchResult out;
  out.records.resize(static_cast<std::size_t>(count) * nv);
  for (Variant v : config.variants) out.tn[v].resize(count);
  std::atomic<int> redraws{0};

  detail::parallel_for(count, threads, [&](int slot) {
    const int rep = (*ids)[slot];
    for (int attempt = 0;; ++attempt) {
      if (attempt >= kMaxAttempts)
        throw TabulationError("replicate " + std::to_string(rep) + " failed repeatedly");
      const RngStream stream{config.seed,
                             rep_offset + static_cast<std::uint64_t>(rep) +
                                 attempt * kRedrawBlock};
      try {
        const TimeSeries series = simulate_dgp(dgp, config.n_obs, config.burn_in, stream);
        int p = config.order_policy.p, q = config.order_policy.q;
        if (config.order_policy.kind == OrderPolicy::Kind::HannanRissanen) {
          const OrderSelection sel =
              select_order_hr(series, config.order_policy.p_max, config.order_policy.q_max);
          // The tested block needs at least one AR lag; a pure-MA pick would
          // also have no tabulated dim-1 null distribution.
          p = std::max(1, sel.p_hat);
          q = sel.q_hat;
        }
        const ArmaFit fit = fit_arma(series, p, q);
        if (!fit.converged) throw EstimationError("non-converged replicate fit");

        std::vector<ReplicateRecord> recs(nv);
        for (int v = 0; v < nv; ++v) {
          const Variant variant = config.variants[v];
          TestReport rep_v = test_statistic(series, fit, variant, config.d, config.band);
          const QuantileTable* table =
              find_table(tables, variant, p, q, config.band);
          if (!table && require_table)
            throw ValidationError("no usable quantile table for variant " +
                                  to_string(variant));
          const double p_val = table ? pvalue(rep_v, *table) : 1.0;
          recs[v] = ReplicateRecord{rep, variant, rep_v.statistic, rep_v.r_hat,
                                    p_val, fit.converged};
        }
        for (int v = 0; v < nv; ++v) {
          out.records[static_cast<std::size_t>(slot) * nv + v] = recs[v];
          out.tn[config.variants[v]][slot] = recs[v].tn;
        }
        if (attempt > 0) redraws.fetch_add(attempt, std::memory_order_relaxed);
        return;
      } catch (const EstimationError&) {
      } catch (const SingularityError&) {
      }
    }
  });
  out.redraws = redraws.load();
  return out;
}

VariantResult summarize(const std::vector<double>& tn, const std::vector<bool>& rejected) {
  const int R = static_cast<int>(tn.size());
  VariantResult res;
  int hits = 0;
  for (bool r : rejected) hits += r ? 1 : 0;
  res.rejection_rate = static_cast<double>(hits) / R;
  res.se = std::sqrt(res.rejection_rate * (1.0 - res.rejection_rate) / R);
  res.tn_mean = detail::mean(tn);
  std::vector<double> sorted(tn);
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [label, prob] :
       {std::pair<const char*, double>{"p50", 0.50}, {"p90", 0.90}, {"p95", 0.95},
        {"p99", 0.99}}) {
    res.tn_quantiles[label] = detail::type7_quantile(sorted, prob);
  }
  return res;
}

ExperimentReport finish_table_based(const ExperimentConfig& config, BatchResult&& batch) {
  ExperimentReport report;
  report.config = config;
  report.redraws = batch.redraws;
  const int nv = static_cast<int>(config.variants.size());
  for (int v = 0; v < nv; ++v) {
    const Variant variant = config.variants[v];
    std::vector<bool> rejected(config.replicates);
    for (int i = 0; i < config.replicates; ++i)
      rejected[i] = batch.records[static_cast<std::size_t>(i) * nv + v].p_value <=
                    config.nominal_level;
    report.results[variant] = summarize(batch.tn[variant], rejected);
  }
  report.records = std::move(batch.records);
  return report;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (replicates < 1) throw ValidationError("replicates must be >= 1");
  if (!(nominal_level > 0.0) || !(nominal_level <= 1.0))
    throw ValidationError("nominal level must lie in (0, 1]");
  if (variants.empty()) throw ValidationError("at least one variant required");
  if (n_obs < 1) throw ValidationError("n_obs must be >= 1");
  if (d < 1) throw ValidationError("delay must be >= 1");
  if (burn_in < 0) throw ValidationError("burn_in must be >= 0");
  if (!(band.first > 0.0 && band.first < band.second && band.second < 1.0))
    throw ValidationError("invalid percentile band");
  if (table_source.kind == TableSourceSpec::Kind::TabulateOnFly &&
      order_policy.kind != OrderPolicy::Kind::Fixed)
    throw ValidationError("tabulate-on-the-fly requires a fixed order policy");
  if (std::holds_alternative<LocalAltSpec>(dgp)) {
    const auto& s = std::get<LocalAltSpec>(dgp);
    if (s.n != 0 && s.n != n_obs)
      throw ValidationError("local-alternative n must match n_obs (or be 0)");
  }
}

double empirical_critical_value(const std::vector<double>& sorted_null, double alpha) {
  const int R = static_cast<int>(sorted_null.size());
  if (R < 1) throw ValidationError("empty null sample");
  int k = static_cast<int>(std::ceil((1.0 - alpha) * R));
  k = std::clamp(k, 1, R);
  return sorted_null[k - 1];
}

ExperimentReport run_size_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  if (!std::holds_alternative<ArmaSpec>(config.dgp))
    throw ValidationError("size experiment requires a null (ARMA) DGP");
  const auto tables = assemble_tables(config, threads);
  auto batch = run_batch(config, config.dgp, tables, 0, threads);
  return finish_table_based(config, std::move(batch));
}

ExperimentReport run_power_experiment(const ExperimentConfig& config, int threads) {
  config.validate();
  if (!config.paired_null) {
    const auto tables = assemble_tables(config, threads);
    auto batch = run_batch(config, config.dgp, tables, 0, threads);
    return finish_table_based(config, std::move(batch));
  }

  // Size-corrected power: critical value from a paired null run of the same
  // size, drawn from a disjoint block of replicate streams.  No quantile
  // table is involved.
  const std::vector<QuantileTable> no_tables;
  auto batch = run_batch(config, config.dgp, no_tables, 0, threads, nullptr, false);
  const DgpSpec null_dgp = *config.paired_null;
  auto null_batch =
      run_batch(config, null_dgp, no_tables, kPairedNullOffset, threads, nullptr, false);

  ExperimentReport report;
  report.config = config;
  report.redraws = batch.redraws + null_batch.redraws;
  const int nv = static_cast<int>(config.variants.size());
  const int R = config.replicates;
  for (int v = 0; v < nv; ++v) {
    const Variant variant = config.variants[v];
    std::vector<double> null_sorted = null_batch.tn[variant];
    std::sort(null_sorted.begin(), null_sorted.end());
    const double cv = empirical_critical_value(null_sorted, config.nominal_level);

    std::vector<bool> rejected(R);
    for (int i = 0; i < R; ++i) {
      auto& rec = batch.records[static_cast<std::size_t>(i) * nv + v];
      rejected[i] = rec.tn > cv;
      // Empirical null p-value replaces the table p-value in the records.
      const auto ge = null_sorted.end() -
                      std::lower_bound(null_sorted.begin(), null_sorted.end(), rec.tn);
      rec.p_value = static_cast<double>(ge) / R;
    }
    report.results[variant] = summarize(batch.tn[variant], rejected);
    report.results[variant].critical_value = cv;
    report.null_sorted[variant] = std::move(null_sorted);
  }
  report.records = std::move(batch.records);
  return report;
}

std::vector<ExperimentReport> run_misspec_suite(const std::vector<ExperimentConfig>& configs,
                                                int threads) {
  std::vector<ExperimentReport> reports;
  reports.reserve(configs.size());
  for (const auto& config : configs) {
    config.validate();
    if (!std::holds_alternative<NamedDgp>(config.dgp))
      throw ValidationError("misspecification suite requires named DGPs");
    const auto tables = assemble_tables(config, threads);
    auto batch = run_batch(config, config.dgp, tables, 0, threads);
    reports.push_back(finish_table_based(config, std::move(batch)));
  }
  return reports;
}

std::vector<ExperimentReport> run_power_growth(const ExperimentConfig& base,
                                               const std::vector<double>& h_scales,
                                               int threads) {
  base.validate();
  if (!std::holds_alternative<LocalAltSpec>(base.dgp))
    throw ValidationError("power growth requires a local-alternative DGP");
  for (std::size_t i = 1; i < h_scales.size(); ++i)
    if (!(h_scales[i] > h_scales[i - 1]))
      throw ValidationError("h_scales must be strictly increasing");

  const LocalAltSpec proto = std::get<LocalAltSpec>(base.dgp);
  std::vector<ExperimentReport> reports;
  for (double scale : h_scales) {
    ExperimentConfig config = base;
    LocalAltSpec spec = proto;
    for (double& hi : spec.h) hi = hi * scale;
    config.dgp = spec;
    config.name = base.name + "_scale" + std::to_string(scale);
    reports.push_back(run_power_experiment(config, threads));
  }

  bool monotone = true;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    for (Variant v : base.variants) {
      const auto& prev = reports[i - 1].results.at(v);
      const auto& cur = reports[i].results.at(v);
      const double slack = 2.0 * std::sqrt(prev.se * prev.se + cur.se * cur.se);
      if (cur.rejection_rate + slack < prev.rejection_rate) monotone = false;
    }
  }
  for (auto& r : reports) r.monotone_power = monotone;
  return reports;
}

namespace {

/// Rebuild summaries from a complete record set (used by the file runner, so
/// that the summary is a pure function of config and records).
ExperimentReport report_from_records(const ExperimentConfig& config,
                                     std::vector<ReplicateRecord> records, int threads) {
  if (config.paired_null) {
    // Size-corrected runs need the paired null statistics; recompute them
    // (deterministic) and recount rejections from the stored statistics.
    const std::vector<QuantileTable> no_tables;
    auto null_batch = run_batch(config, *config.paired_null, no_tables, kPairedNullOffset,
                                threads, nullptr, false);
    ExperimentReport report;
    report.config = config;
    const int nv = static_cast<int>(config.variants.size());
    const int R = config.replicates;
    for (int v = 0; v < nv; ++v) {
      const Variant variant = config.variants[v];
      std::vector<double> null_sorted = null_batch.tn[variant];
      std::sort(null_sorted.begin(), null_sorted.end());
      const double cv = empirical_critical_value(null_sorted, config.nominal_level);
      std::vector<double> tn(R);
      std::vector<bool> rejected(R);
      for (int i = 0; i < R; ++i) {
        auto& rec = records[static_cast<std::size_t>(i) * nv + v];
        tn[i] = rec.tn;
        rejected[i] = rec.tn > cv;
        const auto ge = null_sorted.end() -
                        std::lower_bound(null_sorted.begin(), null_sorted.end(), rec.tn);
        rec.p_value = static_cast<double>(ge) / R;
      }
      report.results[variant] = summarize(tn, rejected);
      report.results[variant].critical_value = cv;
      report.null_sorted[variant] = std::move(null_sorted);
    }
    report.records = std::move(records);
    return report;
  }

  ExperimentReport report;
  report.config = config;
  const int nv = static_cast<int>(config.variants.size());
  const int R = config.replicates;
  for (int v = 0; v < nv; ++v) {
    const Variant variant = config.variants[v];
    std::vector<double> tn(R);
    std::vector<bool> rejected(R);
    for (int i = 0; i < R; ++i) {
      const auto& rec = records[static_cast<std::size_t>(i) * nv + v];
      tn[i] = rec.tn;
      rejected[i] = rec.p_value <= config.nominal_level;
    }
    report.results[variant] = summarize(tn, rejected);
  }
  report.records = std::move(records);
  return report;
}

}  // namespace

ExperimentReport run_experiment_to_file(const ExperimentConfig& config,
                                        const std::filesystem::path& out_path, int threads) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const json header{{"type", "header"}, {"seed", config.seed}, {"config", to_json(config)}};
  const int nv = static_cast<int>(config.variants.size());
  const int R = config.replicates;

  std::map<int, std::vector<ReplicateRecord>> existing;  // complete ids only
  bool had_file = false;
  bool had_summary = false;
  if (std::filesystem::exists(out_path)) {
    had_file = true;
    std::ifstream in(out_path);
    if (!in) throw IoError("cannot open report file: " + out_path.string());
    std::string line;
    bool saw_header = false;
    std::map<int, std::vector<ReplicateRecord>> partial;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        break;  // trailing partial line from an interrupted run
      }
      const std::string type = j.value("type", "");
      if (type == "header") {
        if (j.value("seed", std::uint64_t{0}) != config.seed ||
            j.value("config", json{}) != to_json(config))
          throw ResumeMismatchError("existing report was produced with a different seed/config");
        saw_header = true;
      } else if (type == "replicate") {
        ReplicateRecord rec;
        rec.replicate_id = j.at("replicate_id").get<int>();
        rec.variant = variant_from_string(j.at("variant").get<std::string>());
        rec.tn = j.at("Tn").get<double>();
        rec.r_hat = j.at("r_hat").get<double>();
        rec.p_value = j.at("p_value").get<double>();
        rec.fit_converged = j.at("fit_converged").get<bool>();
        partial[rec.replicate_id].push_back(rec);
      } else if (type == "summary") {
        had_summary = true;
      }
    }
    if (!saw_header)
      throw ResumeMismatchError("existing report lacks a header record");
    for (auto& [id, recs] : partial) {
      if (static_cast<int>(recs.size()) == nv && id >= 0 && id < R)
        existing.emplace(id, std::move(recs));
    }
  }

  std::vector<int> missing;
  for (int i = 0; i < R; ++i)
    if (!existing.count(i)) missing.push_back(i);

  // Complete report on disk: a rerun is a no-op.
  if (missing.empty() && had_summary) {
    std::vector<ReplicateRecord> records(static_cast<std::size_t>(R) * nv);
    for (const auto& [id, recs] : existing)
      for (int v = 0; v < nv; ++v) records[static_cast<std::size_t>(id) * nv + v] = recs[v];
    return report_from_records(config, std::move(records), threads);
  }

  std::vector<ReplicateRecord> fresh;
  int fresh_redraws = 0;
  if (!missing.empty()) {
    const bool paired = config.paired_null.has_value();
    const std::vector<QuantileTable> tables =
        paired ? std::vector<QuantileTable>{} : assemble_tables(config, threads);
    auto batch = run_batch(config, config.dgp, tables, 0, threads, &missing, !paired);
    fresh = std::move(batch.records);
    fresh_redraws = batch.redraws;
  }

  std::vector<ReplicateRecord> records(static_cast<std::size_t>(R) * nv);
  for (const auto& [id, recs] : existing)
    for (int v = 0; v < nv; ++v) records[static_cast<std::size_t>(id) * nv + v] = recs[v];
  for (std::size_t s = 0; s < missing.size(); ++s)
    for (int v = 0; v < nv; ++v)
      records[static_cast<std::size_t>(missing[s]) * nv + v] = fresh[s * nv + v];

  ExperimentReport report = report_from_records(config, std::move(records), threads);
  report.redraws = fresh_redraws;
  report.runtime_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  // Existing files holding a clean prefix are appended to; anything else is
  // rewritten wholesale.  Records are always emitted in replicate order.
  const bool prefix_ok = !had_summary && had_file &&
                         static_cast<int>(existing.size()) ==
                             (existing.empty() ? 0 : existing.rbegin()->first + 1);
  std::ofstream out;
  std::set<int> already;
  if (had_file && prefix_ok) {
    out.open(out_path, std::ios::app);
    for (const auto& [id, recs] : existing) already.insert(id);
  } else {
    out.open(out_path, std::ios::trunc);
  }
  if (!out) throw IoError("cannot open report file for writing: " + out_path.string());
  if (already.empty() && out.tellp() == 0) out << header.dump() << "\n";
  for (int i = 0; i < R; ++i) {
    if (already.count(i)) continue;
    for (int v = 0; v < nv; ++v)
      out << replicate_record_json(report.records[static_cast<std::size_t>(i) * nv + v]).dump()
          << "\n";
  }
  out << summary_json(report).dump() << "\n";
  // Runtime, thread count and redraw counts vary run to run; they live in a
  // separate footer so the summary stays a pure function of config + records.
  out << json{{"type", "footer"},
              {"runtime_sec", report.runtime_sec},
              {"threads", threads},
              {"redraws", report.redraws}}
             .dump()
      << "\n";
  if (!out) throw IoError("failed writing report file: " + out_path.string());
  return report;
}

}  // namespace tarma
