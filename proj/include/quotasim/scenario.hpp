#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "quotasim/engine.hpp"
#include "quotasim/report.hpp"
#include "quotasim/rng.hpp"
#include "quotasim/transfer.hpp"
#include "quotasim/types.hpp"

namespace quotasim {

/// Axes of the experiment grid. The cartesian product of all axes, with
/// allocations restricted to the step-valued simplex, defines the runs.
struct GridSpec {
    std::vector<long long> participants{1000, 10000, 50000};
    std::vector<Money> salaries{5000.0, 15000.0};
    std::vector<double> exit_rates{0.0010, 0.0357, 0.0703, 0.1050};
    std::vector<double> entry_rates{0.0, 0.0333, 0.0667, 0.1000};
    std::vector<SaleStrategy> strategies{SaleStrategy::Oldest, SaleStrategy::Newest,
                                         SaleStrategy::Shortest};
    std::vector<double> allocation_steps{0.0, 0.25, 0.50, 0.75, 1.00};
    std::vector<Date> maturities{Date(2025, 12, 31), Date(2030, 12, 31), Date(2035, 12, 31)};
    double contribution_rate = 0.15;
    int payments_per_year = 13;
    double htm_fraction = 1.0;
    std::uint64_t master_seed = 0;
    int years = 20;
    Year start_year = 2005;
    bool flat_extrapolation = false;
    int histogram_bins = 50;

    void validate() const {
        if (participants.empty() || salaries.empty() || exit_rates.empty() ||
            entry_rates.empty() || strategies.empty() || allocation_steps.empty() ||
            maturities.empty())
            throw config_error("grid axes must not be empty");
        for (long long p : participants)
            if (p < 0) throw config_error("grid participants must be >= 0");
        for (double r : exit_rates)
            if (r < 0.0 || r > 1.0) throw config_error("grid exit rates must lie in [0,1]");
        for (double r : entry_rates)
            if (r < 0.0 || r > 1.0) throw config_error("grid entry rates must lie in [0,1]");
        for (double s : allocation_steps)
            if (s < 0.0 || s > 1.0) throw config_error("allocation steps must lie in [0,1]");
        if (histogram_bins < 1) throw config_error("histogram_bins must be >= 1");
        if (years < 1) throw config_error("years must be >= 1");
    }
};

namespace scenario {

/// All weight vectors over the maturities whose components come from the
/// step set and sum to one. Non-negative by construction; deterministic
/// lexicographic order.
inline std::vector<std::vector<double>> allocation_simplex(const std::vector<double>& steps,
                                                           std::size_t dims) {
    std::vector<std::vector<double>> out;
    std::vector<double> w(dims, 0.0);
    auto snap_to_step = [&](double v) -> const double* {
        for (const double& s : steps)
            if (std::fabs(v - s) <= 1e-9) return &s;
        return nullptr;
    };
    // Choose the first dims-1 weights from the steps; the last is implied.
    std::vector<std::size_t> idx(dims - 1, 0);
    for (;;) {
        double sum = 0.0;
        for (std::size_t i = 0; i + 1 < dims; ++i) {
            w[i] = steps[idx[i]];
            sum += w[i];
        }
        if (const double* last = snap_to_step(1.0 - sum); last && *last >= 0.0) {
            w[dims - 1] = *last;
            out.push_back(w);
        }
        // odometer increment
        std::size_t pos = dims - 1;
        while (pos-- > 0) {
            if (++idx[pos] < steps.size()) break;
            idx[pos] = 0;
            if (pos == 0) return out;
        }
        if (pos == static_cast<std::size_t>(-1)) return out;
    }
}

/// Expands the grid into concrete scenario configs in deterministic
/// lexicographic order: participants, salary, exit rate, entry rate,
/// strategy, allocation. Per-scenario seeds derive from the master seed
/// and the index, never from execution order.
inline std::vector<ScenarioConfig> enumerate_grid(const GridSpec& spec) {
    spec.validate();
    const auto allocations = allocation_simplex(spec.allocation_steps, spec.maturities.size());
    std::vector<ScenarioConfig> configs;
    configs.reserve(spec.participants.size() * spec.salaries.size() * spec.exit_rates.size() *
                    spec.entry_rates.size() * spec.strategies.size() * allocations.size());
    std::uint64_t index = 0;
    for (long long participants : spec.participants)
        for (Money salary : spec.salaries)
            for (double exit_rate : spec.exit_rates)
                for (double entry_rate : spec.entry_rates)
                    for (SaleStrategy strategy : spec.strategies)
                        for (const auto& allocation : allocations) {
                            ScenarioConfig c;
                            c.name = "s" + std::to_string(index);
                            c.initial_participants = participants;
                            c.monthly_salary = salary;
                            c.contribution_rate = spec.contribution_rate;
                            c.payments_per_year = spec.payments_per_year;
                            c.exit_rate = exit_rate;
                            c.entry_rate = entry_rate;
                            c.sale_strategy = strategy;
                            c.allocation = allocation;
                            c.maturities = spec.maturities;
                            c.htm_fraction = spec.htm_fraction;
                            c.years = spec.years;
                            c.start_year = spec.start_year;
                            c.flat_extrapolation = spec.flat_extrapolation;
                            c.seed = derive_seed(spec.master_seed, index);
                            c.validate();
                            configs.push_back(std::move(c));
                            ++index;
                        }
    return configs;
}

}  // namespace scenario

/// What the grid keeps per scenario: summaries and provenance, not the
/// full event logs.
struct ScenarioOutcome {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool insolvent = false;
    Year insolvent_year = 0;
    std::string error;  // non-empty if the run failed outright
    transfer::TransferSummary exit_summary;
    transfer::TransferSummary stay_summary;
    // grid coordinates, for grouping in reports
    long long participants = 0;
    Money salary = 0.0;
    double exit_rate = 0.0;
    double entry_rate = 0.0;
    SaleStrategy strategy = SaleStrategy::Oldest;
    std::vector<double> allocation;
    std::vector<Date> maturities;
};

struct GridReport {
    std::uint64_t master_seed = 0;
    int histogram_bins = 50;
    std::vector<ScenarioOutcome> outcomes;

    std::size_t failure_count() const {
        std::size_t n = 0;
        for (const auto& o : outcomes)
            if (o.insolvent || !o.error.empty()) ++n;
        return n;
    }
};

namespace scenario {

/// Computes one scenario's outcome. config_hash is filled by the caller.
inline ScenarioOutcome run_one(const ScenarioConfig& config, const YieldCurveSet& curves,
                               std::size_t index, int bins) {
    ScenarioOutcome o;
    o.index = index;
    o.seed = config.seed;
    o.participants = config.initial_participants;
    o.salary = config.monthly_salary;
    o.exit_rate = config.exit_rate;
    o.entry_rate = config.entry_rate;
    o.strategy = config.sale_strategy;
    o.allocation = config.allocation;
    o.maturities = config.maturities;
    try {
        const SimulationResult result = run_scenario(config, curves);
        o.insolvent = result.insolvent;
        o.insolvent_year = result.insolvent_year;
        o.exit_summary = transfer::aggregate(
            transfer::observations(transfer::collect_exit_transfers(result)), bins);
        o.stay_summary =
            transfer::aggregate(transfer::observations(transfer::stay_transfers(result)), bins);
    } catch (const std::exception& e) {
        o.error = std::string("scenario ") + std::to_string(index) + ": " + e.what();
    }
    return o;
}

/// Runs every config, optionally across worker threads. The report is
/// assembled by scenario index, so its content does not depend on the
/// worker count or on scheduling.
inline GridReport run_grid(const std::vector<ScenarioConfig>& configs, const YieldCurveSet& curves,
                           unsigned parallelism, std::uint64_t master_seed, int histogram_bins = 50) {
    GridReport report;
    report.master_seed = master_seed;
    report.histogram_bins = histogram_bins;
    report.outcomes.resize(configs.size());
    if (configs.empty()) return report;

    if (parallelism == 0) parallelism = 1;
    parallelism = std::min<unsigned>(parallelism, static_cast<unsigned>(configs.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            report.outcomes[i] = run_one(configs[i], curves, i, histogram_bins);
        }
    };
    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(parallelism);
        for (unsigned i = 0; i < parallelism; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return report;
}

namespace detail {

inline std::string csv_year(bool has, Year y) { return has ? std::to_string(y) : std::string(); }

inline std::string summary_row(std::size_t id, const char* kind,
                               const transfer::TransferSummary& s) {
    std::string row = std::to_string(id);
    row += ',';
    row += kind;
    row += ',';
    row += format_number(s.max_loss_pct);
    row += ',';
    row += csv_year(s.has_loss, s.max_loss_year);
    row += ',';
    row += format_number(s.max_gain_pct);
    row += ',';
    row += csv_year(s.has_gain, s.max_gain_year);
    row += ',';
    row += format_number(s.mean_pct);
    row += ',';
    row += format_number(s.population);
    row += '\n';
    return row;
}

inline std::string rate_key(double rate) {
    // basis points, rounded; enough to tell grid levels apart
    return std::to_string(static_cast<long long>(std::llround(rate * 10000.0)));
}

}  // namespace detail

/// Writes summary.csv, one histogram CSV per scenario and kind, the
/// allocation surfaces per fixed grid coordinates, and manifest.json.
/// Reruns replace files atomically.
inline void emit_reports(const GridReport& report, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    // summary.csv: exit and stay rows per scenario. Year columns are empty
    // for stay rows and whenever no loss/gain was observed.
    std::string summary =
        "scenario_id,kind,max_loss_pct,max_loss_year,max_gain_pct,max_gain_year,mean_pct,population\n";
    for (const auto& o : report.outcomes) {
        summary += detail::summary_row(o.index, "exit", o.exit_summary);
        summary += detail::summary_row(o.index, "stay", o.stay_summary);
    }
    write_file_atomic(out_dir / "summary.csv", summary);

    // Histograms.
    for (const auto& o : report.outcomes) {
        const std::pair<const char*, const transfer::TransferSummary*> kinds[] = {
            {"exit", &o.exit_summary}, {"stay", &o.stay_summary}};
        for (const auto& [kind, s] : kinds) {
            if (s->population == 0) continue;
            std::string hist = "scenario_id,kind,bin_low,bin_high,members\n";
            const double width =
                (s->hist.hi - s->hist.lo) / static_cast<double>(s->hist.counts.size());
            for (std::size_t b = 0; b < s->hist.counts.size(); ++b) {
                hist += std::to_string(o.index);
                hist += ',';
                hist += kind;
                hist += ',';
                hist += format_number(s->hist.lo + width * static_cast<double>(b));
                hist += ',';
                hist += format_number(b + 1 == s->hist.counts.size()
                                          ? s->hist.hi
                                          : s->hist.lo + width * static_cast<double>(b + 1));
                hist += ',';
                hist += format_number(s->hist.counts[b]);
                hist += '\n';
            }
            write_file_atomic(out_dir / ("hist_" + std::to_string(o.index) + "_" + kind + ".csv"),
                              hist);
        }
    }

    // Allocation surfaces: max loss over the allocation simplex for each
    // fixed (participants, salary, exit, entry, strategy) and kind.
    using Key = std::tuple<long long, long long, long long, long long, int>;
    std::map<Key, std::vector<const ScenarioOutcome*>> groups;
    for (const auto& o : report.outcomes) {
        const Key key{o.participants, static_cast<long long>(std::llround(o.salary)),
                      std::llround(o.exit_rate * 10000.0), std::llround(o.entry_rate * 10000.0),
                      static_cast<int>(o.strategy)};
        groups[key].push_back(&o);
    }
    for (const auto& [key, members] : groups) {
        if (members.size() < 2) continue;  // no surface from a single point
        const auto& first = *members.front();
        std::string header;
        for (const auto& m : first.maturities) header += "w" + std::to_string(m.year()) + ",";
        header += "max_loss_pct\n";
        const std::string key_str = "p" + std::to_string(first.participants) + "_s" +
                                    std::to_string(static_cast<long long>(std::llround(first.salary))) +
                                    "_x" + detail::rate_key(first.exit_rate) + "bp_e" +
                                    detail::rate_key(first.entry_rate) + "bp_" +
                                    to_string(first.strategy);
        const std::pair<const char*, transfer::TransferSummary ScenarioOutcome::*> kinds[] = {
            {"exit", &ScenarioOutcome::exit_summary}, {"stay", &ScenarioOutcome::stay_summary}};
        for (const auto& [kind, member_ptr] : kinds) {
            std::string surface = header;
            for (const ScenarioOutcome* o : members) {
                for (double w : o->allocation) surface += format_number(w) + ",";
                surface += format_number((o->*member_ptr).max_loss_pct);
                surface += '\n';
            }
            write_file_atomic(out_dir / ("surface_" + key_str + "_" + kind + ".csv"), surface);
        }
    }
}

}  // namespace scenario
}  // namespace quotasim
