#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "quotasim/engine.hpp"
#include "quotasim/report.hpp"
#include "quotasim/scenario.hpp"
#include "quotasim/version.hpp"

namespace quotasim {

using json = nlohmann::json;

namespace io {

inline constexpr int kSchemaVersion = 1;

/// Rejects keys outside the allowed set. Configs are reproducibility
/// artifacts; a typo must fail loudly, not silently fall back to defaults.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known) throw config_error(context + ": unknown field '" + key + "'");
    }
}

inline void check_schema(const json& j, const char* expected_kind, const std::string& context) {
    if (!j.is_object()) throw config_error(context + ": expected a JSON object");
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
        j["schema_version"].get<int>() != kSchemaVersion)
        throw config_error(context + ": schema_version must be " + std::to_string(kSchemaVersion));
    if (!j.contains("kind") || j["kind"] != expected_kind)
        throw config_error(context + ": kind must be '" + std::string(expected_kind) + "'");
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open " + path.string());
    try {
        return json::parse(in, nullptr, true, /*ignore_comments=*/false);
    } catch (const json::parse_error& e) {
        throw config_error(path.string() + ": " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(std::string("field '") + key + "' has the wrong type");
    }
}

inline std::vector<Date> parse_maturities(const json& j) {
    if (!j.is_array()) throw config_error("maturities must be an array of ISO dates");
    std::vector<Date> out;
    for (const auto& item : j) out.push_back(parse_date(item.get<std::string>()));
    return out;
}

inline ContributionMode contribution_mode_from_string(const std::string& s) {
    if (s == "every_year") return ContributionMode::EveryYear;
    if (s == "entry_year_only") return ContributionMode::EntryYearOnly;
    throw config_error("unknown contribution_mode '" + s + "' (every_year|entry_year_only)");
}

inline std::string to_string(ContributionMode m) {
    return m == ContributionMode::EveryYear ? "every_year" : "entry_year_only";
}

inline ScenarioConfig scenario_from_json(const json& j) {
    check_schema(j, "scenario", "scenario config");
    check_keys(j, {"schema_version", "kind", "name", "initial_participants", "monthly_salary",
                   "contribution_rate", "payments_per_year", "annual_contribution",
                   "contribution_mode", "exit_rate", "entry_rate", "entrant_contribution",
                   "allocation", "maturities", "sale_strategy", "htm_fraction", "seed", "years",
                   "start_year", "flat_extrapolation", "scripted_entries", "scripted_exits"},
               "scenario config");
    ScenarioConfig c;
    c.name = get_or<std::string>(j, "name", "");
    c.initial_participants = get_or<long long>(j, "initial_participants", 0);
    c.monthly_salary = get_or<double>(j, "monthly_salary", 0.0);
    c.contribution_rate = get_or<double>(j, "contribution_rate", 0.15);
    c.payments_per_year = get_or<int>(j, "payments_per_year", 13);
    if (j.contains("annual_contribution"))
        c.annual_contribution_override = j.at("annual_contribution").get<double>();
    c.contribution_mode =
        contribution_mode_from_string(get_or<std::string>(j, "contribution_mode", "every_year"));
    c.exit_rate = get_or<double>(j, "exit_rate", 0.0);
    c.entry_rate = get_or<double>(j, "entry_rate", 0.0);
    if (j.contains("entrant_contribution"))
        c.entrant_contribution = j.at("entrant_contribution").get<double>();
    if (!j.contains("allocation") || !j.contains("maturities"))
        throw config_error("scenario config requires 'allocation' and 'maturities'");
    c.allocation = j.at("allocation").get<std::vector<double>>();
    c.maturities = parse_maturities(j.at("maturities"));
    c.sale_strategy = sale_strategy_from_string(get_or<std::string>(j, "sale_strategy", "oldest"));
    c.htm_fraction = get_or<double>(j, "htm_fraction", 1.0);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.years = get_or<int>(j, "years", 20);
    c.start_year = get_or<int>(j, "start_year", 2005);
    c.flat_extrapolation = get_or<bool>(j, "flat_extrapolation", false);
    if (j.contains("scripted_entries")) {
        for (const auto& e : j.at("scripted_entries")) {
            check_keys(e, {"year", "members", "contribution"}, "scripted entry");
            c.scripted_entries.push_back(ScriptedEntry{e.at("year").get<int>(),
                                                       e.at("members").get<long long>(),
                                                       e.at("contribution").get<double>()});
        }
    }
    if (j.contains("scripted_exits")) {
        for (const auto& e : j.at("scripted_exits")) {
            check_keys(e, {"year", "entry_year", "members"}, "scripted exit");
            c.scripted_exits.push_back(ScriptedExit{e.at("year").get<int>(),
                                                    e.at("entry_year").get<int>(),
                                                    e.at("members").get<long long>()});
        }
    }
    c.validate();
    return c;
}

inline json scenario_to_json(const ScenarioConfig& c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "scenario";
    if (!c.name.empty()) j["name"] = c.name;
    j["initial_participants"] = c.initial_participants;
    j["monthly_salary"] = c.monthly_salary;
    j["contribution_rate"] = c.contribution_rate;
    j["payments_per_year"] = c.payments_per_year;
    if (c.annual_contribution_override) j["annual_contribution"] = *c.annual_contribution_override;
    j["contribution_mode"] = to_string(c.contribution_mode);
    j["exit_rate"] = c.exit_rate;
    j["entry_rate"] = c.entry_rate;
    if (c.entrant_contribution) j["entrant_contribution"] = *c.entrant_contribution;
    j["allocation"] = c.allocation;
    json mats = json::array();
    for (const auto& m : c.maturities) mats.push_back(m.iso());
    j["maturities"] = mats;
    j["sale_strategy"] = quotasim::to_string(c.sale_strategy);
    j["htm_fraction"] = c.htm_fraction;
    j["seed"] = c.seed;
    j["years"] = c.years;
    j["start_year"] = c.start_year;
    j["flat_extrapolation"] = c.flat_extrapolation;
    if (!c.scripted_entries.empty()) {
        json arr = json::array();
        for (const auto& e : c.scripted_entries)
            arr.push_back({{"year", e.year}, {"members", e.members}, {"contribution", e.contribution}});
        j["scripted_entries"] = arr;
    }
    if (!c.scripted_exits.empty()) {
        json arr = json::array();
        for (const auto& e : c.scripted_exits)
            arr.push_back({{"year", e.year}, {"entry_year", e.entry_year}, {"members", e.members}});
        j["scripted_exits"] = arr;
    }
    return j;
}

inline GridSpec grid_from_json(const json& j) {
    check_schema(j, "grid", "grid spec");
    check_keys(j, {"schema_version", "kind", "participants", "salaries", "exit_rates",
                   "entry_rates", "strategies", "allocation_steps", "maturities",
                   "contribution_rate", "payments_per_year", "htm_fraction", "master_seed",
                   "years", "start_year", "flat_extrapolation", "histogram_bins"},
               "grid spec");
    GridSpec g;
    if (j.contains("participants")) g.participants = j.at("participants").get<std::vector<long long>>();
    if (j.contains("salaries")) g.salaries = j.at("salaries").get<std::vector<double>>();
    if (j.contains("exit_rates")) g.exit_rates = j.at("exit_rates").get<std::vector<double>>();
    if (j.contains("entry_rates")) g.entry_rates = j.at("entry_rates").get<std::vector<double>>();
    if (j.contains("strategies")) {
        g.strategies.clear();
        for (const auto& s : j.at("strategies"))
            g.strategies.push_back(sale_strategy_from_string(s.get<std::string>()));
    }
    if (j.contains("allocation_steps"))
        g.allocation_steps = j.at("allocation_steps").get<std::vector<double>>();
    if (j.contains("maturities")) g.maturities = parse_maturities(j.at("maturities"));
    g.contribution_rate = get_or<double>(j, "contribution_rate", g.contribution_rate);
    g.payments_per_year = get_or<int>(j, "payments_per_year", g.payments_per_year);
    g.htm_fraction = get_or<double>(j, "htm_fraction", g.htm_fraction);
    g.master_seed = get_or<std::uint64_t>(j, "master_seed", g.master_seed);
    g.years = get_or<int>(j, "years", g.years);
    g.start_year = get_or<int>(j, "start_year", g.start_year);
    g.flat_extrapolation = get_or<bool>(j, "flat_extrapolation", g.flat_extrapolation);
    g.histogram_bins = get_or<int>(j, "histogram_bins", g.histogram_bins);
    g.validate();
    return g;
}

inline json grid_to_json(const GridSpec& g) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "grid";
    j["participants"] = g.participants;
    j["salaries"] = g.salaries;
    j["exit_rates"] = g.exit_rates;
    j["entry_rates"] = g.entry_rates;
    json strategies = json::array();
    for (auto s : g.strategies) strategies.push_back(quotasim::to_string(s));
    j["strategies"] = strategies;
    j["allocation_steps"] = g.allocation_steps;
    json mats = json::array();
    for (const auto& m : g.maturities) mats.push_back(m.iso());
    j["maturities"] = mats;
    j["contribution_rate"] = g.contribution_rate;
    j["payments_per_year"] = g.payments_per_year;
    j["htm_fraction"] = g.htm_fraction;
    j["master_seed"] = g.master_seed;
    j["years"] = g.years;
    j["start_year"] = g.start_year;
    j["flat_extrapolation"] = g.flat_extrapolation;
    j["histogram_bins"] = g.histogram_bins;
    return j;
}

inline std::uint64_t config_hash(const ScenarioConfig& c) {
    return fnv1a64(scenario_to_json(c).dump());
}

inline json result_to_json(const SimulationResult& r) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "simulation_result";
    j["engine_version"] = QUOTASIM_VERSION;
    j["config"] = scenario_to_json(r.config);
    j["seed"] = r.config.seed;
    json years = json::array();
    for (const auto& y : r.years)
        years.push_back({{"year", y.year},
                         {"quota_mtm", y.quota_mtm},
                         {"quota_htm", y.quota_htm},
                         {"plan_value_mtm", y.plan_value_mtm},
                         {"plan_value_htm", y.plan_value_htm},
                         {"members", y.members}});
    j["years"] = years;
    json exits = json::array();
    for (const auto& e : r.exits)
        exits.push_back({{"year", e.year},
                         {"entry_year", e.entry_year},
                         {"members", e.members},
                         {"exit_value_mtm", e.exit_value_mtm_pm},
                         {"exit_value_htm", e.exit_value_htm_pm}});
    j["exits"] = exits;
    json entries = json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"year", e.year}, {"members", e.members}, {"contribution", e.contribution_pm}});
    j["entries"] = entries;
    json cohorts = json::array();
    for (const auto& c : r.final_cohorts)
        cohorts.push_back({{"entry_year", c.entry_year},
                           {"members", c.members},
                           {"quotas_mtm", c.quotas_mtm_pm},
                           {"quotas_htm", c.quotas_htm_pm},
                           {"bonds", c.bonds_pm}});
    j["final_cohorts"] = cohorts;
    json lots = json::array();
    for (const auto& lot : r.final_book.lots())
        lots.push_back({{"maturity_id", lot.maturity_id},
                        {"acquisition_year", lot.acquisition_year},
                        {"quantity", lot.quantity},
                        {"purchase_price", lot.purchase_price},
                        {"purchase_yield", lot.purchase_yield}});
    j["final_book"] = lots;
    j["final_mtm_inventory"] = r.final_mtm_inventory;
    j["final_prices"] = r.final_prices;
    j["insolvent"] = r.insolvent;
    j["insolvent_year"] = r.insolvent_year;
    j["halt_exit_cash"] = r.halt_exit_cash;
    j["halt_book_value"] = r.halt_book_value;
    j["halt_shortfall"] = r.halt_shortfall;
    return j;
}

inline json manifest_to_json(const GridReport& report, const GridSpec& spec,
                             const std::vector<ScenarioConfig>& configs) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "manifest";
    j["engine_version"] = QUOTASIM_VERSION;
    j["master_seed"] = report.master_seed;
    j["histogram_bins"] = report.histogram_bins;
    j["grid"] = grid_to_json(spec);
    json rows = json::array();
    for (std::size_t i = 0; i < report.outcomes.size(); ++i) {
        const auto& o = report.outcomes[i];
        json row;
        row["id"] = o.index;
        row["seed"] = o.seed;
        row["config_hash"] = config_hash(configs[i]);
        row["insolvent"] = o.insolvent;
        if (o.insolvent) row["insolvent_year"] = o.insolvent_year;
        if (!o.error.empty()) row["error"] = o.error;
        rows.push_back(row);
    }
    j["scenarios"] = rows;
    return j;
}

/// Grid spec from either a grid file or a previously written manifest
/// (which embeds the spec, so a manifest reproduces its own run).
inline GridSpec grid_from_file(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    if (j.is_object() && j.contains("kind") && j["kind"] == "manifest") {
        check_schema(j, "manifest", path.string());
        if (!j.contains("grid")) throw config_error(path.string() + ": manifest lacks 'grid'");
        return grid_from_json(j.at("grid"));
    }
    return grid_from_json(j);
}

inline ScenarioConfig scenario_from_file(const std::filesystem::path& path) {
    return scenario_from_json(read_json_file(path));
}

/// CSV reports plus the manifest, everything a rerun needs.
inline void emit_grid_reports(const GridReport& report, const GridSpec& spec,
                              const std::vector<ScenarioConfig>& configs,
                              const std::filesystem::path& out_dir) {
    scenario::emit_reports(report, out_dir);
    write_file_atomic(out_dir / "manifest.json", manifest_to_json(report, spec, configs).dump(2) + "\n");
}

}  // namespace io
}  // namespace quotasim
