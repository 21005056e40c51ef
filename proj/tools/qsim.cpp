// qsim: command-line front end. `examples` replays the built-in reference
// oracles with no external data; `run` simulates one configured plan;
// `grid` runs a scenario grid and writes the report files.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "quotasim/config_io.hpp"
#include "quotasim/curve.hpp"
#include "quotasim/engine.hpp"
#include "quotasim/report.hpp"
#include "quotasim/scenario.hpp"
#include "quotasim/transfer.hpp"
#include "quotasim/version.hpp"
#include "quotasim/worked_examples.hpp"

namespace {

namespace fs = std::filesystem;
using namespace quotasim;

// Exit statuses, stable across releases:
//   0 success, 1 unexpected failure, 2 configuration error,
//   3 data error (curve files, coverage, degeneracy), 4 oracle failure.
constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitOracle = 4;

struct OracleCheck {
    std::string name;
    double actual = 0.0;
    double expected = 0.0;
    double tol = 0.0;

    bool pass() const { return std::fabs(actual - expected) <= tol; }
};

std::vector<OracleCheck> oracle_checks() {
    using namespace worked_examples;
    std::vector<OracleCheck> checks;
    const auto push = [&](std::string name, double actual, double expected, double tol) {
        checks.push_back(OracleCheck{std::move(name), actual, expected, tol});
    };

    const SingleBondCase one = single_bond_entry_exit_case(0.90);
    push("single_bond.quota_market_y2", one.quota_mtm_t2, 0.90, 1e-12);
    push("single_bond.quota_curve_y2", one.quota_htm_t2, 1.01, 1e-12);
    push("single_bond.plan_value_market", one.plan_value_mtm, 2.90, 5e-3);
    push("single_bond.plan_value_curve", one.plan_value_htm, 3.01, 5e-3);
    push("single_bond.entrant_transfer", one.second_stay_transfer, -0.037, 1e-3);
    push("single_bond.entrant_pct_of_contribution", one.second_pct_of_contribution, -0.037, 1e-3);
    push("single_bond.incumbent_transfer", one.first_stay_transfer, 0.037, 1e-3);
    push("single_bond.incumbent_pct_of_plan", one.first_pct_of_plan, 0.0126, 5e-4);
    push("single_bond.exit_value_curve", one.exit_value_htm, 2.01, 1e-9);
    push("single_bond.exit_value_market", one.exit_value_mtm, 1.90, 1e-9);
    push("single_bond.exit_transfer", one.exit_transfer, 0.11, 5e-3);
    push("single_bond.bonds_sold", one.bonds_sold, 2.2333, 1e-3);
    push("single_bond.bonds_remaining", one.bonds_remaining, 0.989, 1e-3);
    push("single_bond.stayer_bond_loss", one.second_bond_loss, 0.122, 1e-3);
    push("single_bond.congruence_gap", one.congruence - one.exit_transfer, 0.0, 1e-9);

    const SingleBondCase near = single_bond_entry_exit_case(0.98);
    push("near_curve.exit_value_market", near.exit_value_mtm, 1.98, 1e-9);
    push("near_curve.exit_transfer", near.exit_transfer, 0.03, 5e-3);
    push("near_curve.congruence_gap", near.congruence - near.exit_transfer, 0.0, 1e-9);

    const TwoBondCase full = two_bond_entry_case(1.0);
    push("two_bond.quota_curve_y2", full.quota_t2, 1.01056, 1e-5);
    push("two_bond.entrant_new_quotas", full.second_new_quotas, 0.98955, 1e-5);
    push("two_bond.entrant_transfer", full.second_transfer, -0.029, 1e-3);
    push("two_bond.entrant_transfer_bond_a", full.second_transfer_by_bond[0], -0.018, 1e-3);
    push("two_bond.entrant_transfer_bond_b", full.second_transfer_by_bond[1], -0.011, 1e-3);
    push("two_bond.incumbent_transfer", full.first_transfer, 0.029, 1e-3);
    push("two_bond.incumbent_pct_of_balance", full.first_pct_of_balance_htm, 0.0146, 5e-4);

    const TwoBondCase partial = two_bond_entry_case(0.30);
    push("partial_curve.quota_y2", partial.quota_t2, 0.94873, 1e-5);
    push("partial_curve.entrant_new_quotas", partial.second_new_quotas, 1.05404, 1e-5);
    push("partial_curve.entrant_transfer", partial.second_transfer, -0.00892, 1e-4);

    const TwoBondCase market_only = two_bond_entry_case(0.0);
    push("market_only.quota_y2", market_only.quota_t2, 0.92222, 1e-5);
    push("market_only.entrant_transfer", market_only.second_transfer, 0.0, 1e-9);
    push("blend_boundary.alpha1_equals_full", two_bond_entry_case(1.0).second_transfer - full.second_transfer,
         0.0, 0.0);
    return checks;
}

int cmd_examples(bool negative_control) {
    auto checks = oracle_checks();
    if (negative_control) {
        // Deliberately broken expectation, to demonstrate the failure path.
        checks.push_back(OracleCheck{"negative_control.expected_break",
                                     checks.front().actual, checks.front().actual + 1.0, 1e-9});
    }
    int failures = 0;
    for (const auto& c : checks) {
        const bool ok = c.pass();
        if (!ok) ++failures;
        std::cout << (ok ? "PASS " : "FAIL ") << c.name << " value=" << format_number(c.actual)
                  << " expected=" << format_number(c.expected) << " tol=" << format_number(c.tol);
        if (!ok) std::cout << " diff=" << format_number(c.actual - c.expected);
        std::cout << '\n';
    }
    std::cout << (failures == 0 ? "OK" : "FAILED") << " checks=" << checks.size()
              << " failures=" << failures << '\n';
    return failures == 0 ? kExitOk : kExitOracle;
}

YieldCurveSet load_curves(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open curve file " + path.string(), 0);
    return parse_curve_csv(in);
}

std::optional<std::uint64_t> env_u64(const char* name) {
    const char* value = std::getenv(name);
    if (!value || !*value) return std::nullopt;
    return std::strtoull(value, nullptr, 10);
}

int cmd_run(const fs::path& config_path, const fs::path& curves_path, const fs::path& out_dir,
            std::optional<std::uint64_t> seed, std::optional<double> alpha, bool flat_extrap) {
    ScenarioConfig config = io::scenario_from_file(config_path);
    if (seed) config.seed = *seed;
    if (alpha) config.htm_fraction = *alpha;
    if (flat_extrap) config.flat_extrapolation = true;
    config.validate();

    const YieldCurveSet curves = load_curves(curves_path);
    std::cerr << "running scenario '" << config.name << "' seed=" << config.seed << '\n';
    const SimulationResult result = run_scenario(config, curves);

    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "result.json", io::result_to_json(result).dump(2) + "\n");

    const auto exits = transfer::collect_exit_transfers(result);
    std::string exit_csv = "year,entry_year,members,exit_value_htm,exit_value_mtm,transfer,pct\n";
    for (std::size_t i = 0; i < exits.size(); ++i) {
        const auto& t = exits[i];
        const auto& ev = result.exits[i];
        exit_csv += std::to_string(t.year) + ',' + std::to_string(t.entry_year) + ',' +
                    std::to_string(t.members) + ',' + format_number(ev.exit_value_htm_pm) + ',' +
                    format_number(ev.exit_value_mtm_pm) + ',' + format_number(t.transfer_pm) + ',' +
                    (t.pct_defined ? format_number(t.pct) : std::string()) + '\n';
    }
    write_file_atomic(out_dir / "transfers_exit.csv", exit_csv);

    const auto stays = transfer::stay_transfers(result);
    std::string stay_csv = "entry_year,members,transfer,pct_of_balance,pct_of_plan\n";
    for (const auto& t : stays)
        stay_csv += std::to_string(t.entry_year) + ',' + std::to_string(t.members) + ',' +
                    format_number(t.transfer_pm) + ',' + format_number(t.pct_of_balance) + ',' +
                    format_number(t.pct_of_plan) + '\n';
    write_file_atomic(out_dir / "transfers_stay.csv", stay_csv);

    const auto& final_rec = result.final_record();
    std::cout << "run name=" << (config.name.empty() ? "-" : config.name) << " seed=" << config.seed
              << " years=" << result.years.size() << " members=" << final_rec.members
              << " insolvent=" << (result.insolvent ? 1 : 0)
              << " quota_mtm=" << format_number(final_rec.quota_mtm)
              << " quota_htm=" << format_number(final_rec.quota_htm)
              << " plan_value_mtm=" << format_number(final_rec.plan_value_mtm)
              << " plan_value_htm=" << format_number(final_rec.plan_value_htm)
              << " out=" << out_dir.string() << '\n';
    return kExitOk;
}

int cmd_grid(const fs::path& spec_path, const fs::path& curves_path, const fs::path& out_dir,
             std::optional<std::uint64_t> seed, unsigned parallelism, std::optional<double> alpha,
             bool flat_extrap) {
    GridSpec spec = io::grid_from_file(spec_path);
    if (seed) spec.master_seed = *seed;
    if (alpha) spec.htm_fraction = *alpha;
    if (flat_extrap) spec.flat_extrapolation = true;
    spec.validate();

    const YieldCurveSet curves = load_curves(curves_path);
    const auto configs = scenario::enumerate_grid(spec);
    std::cerr << "grid: " << configs.size() << " scenarios, parallelism " << parallelism << '\n';

    const GridReport report =
        scenario::run_grid(configs, curves, parallelism, spec.master_seed, spec.histogram_bins);
    io::emit_grid_reports(report, spec, configs, out_dir);

    std::size_t errors = 0;
    for (const auto& o : report.outcomes) {
        if (!o.error.empty()) {
            ++errors;
            std::cerr << "error: " << o.error << '\n';
        }
    }
    std::cout << "grid scenarios=" << report.outcomes.size() << " failures=" << report.failure_count()
              << " errors=" << errors << " out=" << out_dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Defined-contribution plan simulator: quota accounting under "
                 "hold-to-maturity vs mark-to-market bond valuation"};
    app.set_version_flag("--version", QUOTASIM_VERSION);
    app.require_subcommand(1);

    auto* examples = app.add_subcommand("examples", "Run the built-in reference oracles (no data needed)");
    bool negative_control = false;
    examples->add_flag("--negative-control", negative_control,
                       "Also run a deliberately broken check (exercise the failure path)");

    std::string config_path, curves_path, out_dir = "out";
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    double alpha_flag = 0.0;
    bool alpha_given = false;
    bool flat_extrap = false;
    unsigned parallelism = std::thread::hardware_concurrency();
    bool parallelism_given = false;

    auto add_common = [&](CLI::App* cmd, bool needs_parallelism) {
        cmd->add_option("--config", config_path, "Scenario or grid config (JSON)")->required();
        cmd->add_option("--curves", curves_path, "Curve CSV (reference_date,term_days,rate)")->required();
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_option("--seed", seed_flag, "Override the config seed")->each([&](const std::string&) {
            seed_given = true;
        });
        cmd->add_option("--alpha", alpha_flag, "Override the curve-marked fraction (0..1)")
            ->check(CLI::Range(0.0, 1.0))
            ->each([&](const std::string&) { alpha_given = true; });
        cmd->add_flag("--flat-extrapolation", flat_extrap,
                      "Extend curves flat beyond the longest knot instead of failing");
        if (needs_parallelism)
            cmd->add_option("--parallelism", parallelism, "Worker threads (default: hardware)")
                ->each([&](const std::string&) { parallelism_given = true; });
    };

    auto* run = app.add_subcommand("run", "Simulate one scenario and write result files");
    add_common(run, false);
    auto* grid = app.add_subcommand("grid", "Run a scenario grid and write report files");
    add_common(grid, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (examples->parsed()) return cmd_examples(negative_control);

        // Environment overrides (seed and parallelism only), below flags.
        std::optional<std::uint64_t> seed;
        if (seed_given) seed = seed_flag;
        else if (auto env = env_u64("QUOTASIM_SEED")) seed = *env;
        if (!parallelism_given) {
            if (auto env = env_u64("QUOTASIM_PARALLELISM"))
                parallelism = static_cast<unsigned>(*env);
        }
        if (parallelism == 0) parallelism = 1;
        std::optional<double> alpha;
        if (alpha_given) alpha = alpha_flag;

        if (run->parsed())
            return cmd_run(config_path, curves_path, out_dir, seed, alpha, flat_extrap);
        if (grid->parsed())
            return cmd_grid(config_path, curves_path, out_dir, seed, parallelism, alpha, flat_extrap);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const parse_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const coverage_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const extrapolation_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const degeneracy_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitOther;
    }
    return kExitOther;
}
