#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "quotasim/config_io.hpp"
#include "quotasim/engine.hpp"
#include "quotasim/worked_examples.hpp"
#include "test_support.hpp"

using namespace quotasim;
using test_support::bundled_curves;
using test_support::standard_config;
using test_support::synthetic_curves;

TEST(Engine, AnnualContribution) {
    ScenarioConfig c;
    c.monthly_salary = 15000.0;
    EXPECT_DOUBLE_EQ(c.annual_contribution(), 29250.0);
    c.monthly_salary = 5000.0;
    EXPECT_DOUBLE_EQ(c.annual_contribution(), 9750.0);
    c.contribution_rate = 0.0;
    EXPECT_DOUBLE_EQ(c.annual_contribution(), 0.0);
    c.annual_contribution_override = 500.0;
    EXPECT_DOUBLE_EQ(c.annual_contribution(), 500.0);
}

TEST(Engine, ConfigValidation) {
    ScenarioConfig c = standard_config();
    EXPECT_NO_THROW(c.validate());
    ScenarioConfig bad = c;
    bad.allocation = {0.5, 0.5};
    EXPECT_THROW(bad.validate(), config_error);
    bad = c;
    bad.allocation = {0.5, 0.5, 0.2};
    EXPECT_THROW(bad.validate(), config_error);
    bad = c;
    bad.allocation = {-0.25, 0.75, 0.5};
    EXPECT_THROW(bad.validate(), config_error);
    bad = c;
    bad.maturities[0] = Date(2010, 12, 31);  // matures mid-simulation
    EXPECT_THROW(bad.validate(), config_error);
    bad = c;
    bad.htm_fraction = 1.5;
    EXPECT_THROW(bad.validate(), config_error);
}

TEST(Engine, QuotaUpdateMatchesWorkedExamples) {
    const auto one = worked_examples::single_bond_entry_exit_case(0.90);
    EXPECT_DOUBLE_EQ(one.quota_mtm_t2, 0.90);
    EXPECT_DOUBLE_EQ(one.quota_htm_t2, 1.01);
    EXPECT_NEAR(one.plan_value_mtm, 2.90, 1e-12);
    EXPECT_NEAR(one.plan_value_htm, 3.01, 1e-12);

    const auto two = worked_examples::two_bond_entry_case(1.0);
    EXPECT_NEAR(two.quota_t2, 1.0105555555555557, 1e-15);
    EXPECT_NEAR(two.second_new_quotas, 0.9895547003848268, 1e-12);

    const auto partial = worked_examples::two_bond_entry_case(0.30);
    EXPECT_NEAR(partial.quota_t2, 0.9487222222222222, 1e-15);
    EXPECT_NEAR(partial.second_new_quotas, 1.0540493060842069, 1e-12);

    const auto market_only = worked_examples::two_bond_entry_case(0.0);
    EXPECT_NEAR(market_only.quota_t2, 83.0 / 90.0, 1e-15);
}

TEST(Engine, ExitSamplingCountsAndDeterminism) {
    std::vector<Cohort> cohorts(2);
    cohorts[0].entry_year = 2005;
    cohorts[0].members = 6000;
    cohorts[1].entry_year = 2010;
    cohorts[1].members = 4000;

    Xoshiro256 rng_a(7), rng_b(7), rng_c(8);
    const auto a = engine::sample_exit_counts(rng_a, cohorts, 0.0357);
    const auto b = engine::sample_exit_counts(rng_b, cohorts, 0.0357);
    EXPECT_EQ(a, b);  // same seed, same allocation
    EXPECT_EQ(a[0] + a[1], 357);
    const auto c = engine::sample_exit_counts(rng_c, cohorts, 0.0357);
    EXPECT_EQ(c[0] + c[1], 357);

    Xoshiro256 rng_zero(1);
    const auto none = engine::sample_exit_counts(rng_zero, cohorts, 0.0);
    EXPECT_EQ(none[0] + none[1], 0);

    Xoshiro256 rng_all(1);
    const auto all = engine::sample_exit_counts(rng_all, cohorts, 1.0);
    EXPECT_EQ(all[0], 6000);
    EXPECT_EQ(all[1], 4000);
}

TEST(Engine, EntrantCountsUsePriorYearPopulation) {
    ScenarioConfig c = standard_config();
    c.initial_participants = 10000;
    c.entry_rate = 0.0333;
    c.years = 3;
    c.maturities = {Date(2025, 12, 31), Date(2030, 12, 31), Date(2035, 12, 31)};
    const auto curves = synthetic_curves(2005, 3);
    const SimulationResult r = run_scenario(c, curves);
    ASSERT_EQ(r.entries.size(), 3u);
    EXPECT_EQ(r.entries[0].members, 10000);  // initial mass
    EXPECT_EQ(r.entries[1].members, 333);    // round(0.0333 * 10000)
    EXPECT_EQ(r.entries[2].members, 344);    // round(0.0333 * 10333)
}

TEST(Engine, RunIsDeterministic) {
    ScenarioConfig c = standard_config();
    c.exit_rate = 0.0703;
    c.entry_rate = 0.0667;
    const auto curves = synthetic_curves(2005, 20);
    const auto a = io::result_to_json(run_scenario(c, curves)).dump();
    const auto b = io::result_to_json(run_scenario(c, curves)).dump();
    EXPECT_EQ(a, b);
}

TEST(Engine, MarketOnlyBlendReproducesMarketTrackBitForBit) {
    ScenarioConfig c = standard_config();
    c.exit_rate = 0.0703;
    c.entry_rate = 0.0667;
    c.htm_fraction = 0.0;
    const auto curves = synthetic_curves(2005, 20);
    const SimulationResult r = run_scenario(c, curves);
    ASSERT_EQ(r.years.size(), 20u);
    for (const auto& y : r.years) EXPECT_EQ(y.quota_htm, y.quota_mtm) << "year " << y.year;
}

TEST(Engine, QuotaPositivityOnSolventPaths) {
    ScenarioConfig c = standard_config();
    c.exit_rate = 0.105;
    c.entry_rate = 0.10;
    const auto curves = synthetic_curves(2005, 20);
    const SimulationResult r = run_scenario(c, curves);
    EXPECT_FALSE(r.insolvent);
    for (const auto& y : r.years) {
        EXPECT_GT(y.quota_mtm, 0.0);
        EXPECT_GT(y.quota_htm, 0.0);
    }
}

TEST(Engine, SingleBondPlanConvergesAtMaturity) {
    // Two members, fixed contributions, one bond maturing in the final
    // year: both markings meet at face value.
    ScenarioConfig c;
    c.name = "convergence";
    c.initial_participants = 2;
    c.annual_contribution_override = 500.0;
    c.allocation = {1.0};
    c.maturities = {Date(2024, 12, 31)};
    c.years = 20;
    c.start_year = 2005;
    const auto curves = synthetic_curves(2005, 20);
    const SimulationResult r = run_scenario(c, curves);
    ASSERT_EQ(r.years.size(), 20u);
    const auto& last = r.final_record();
    EXPECT_GT(last.plan_value_mtm, 0.0);
    EXPECT_NEAR(last.plan_value_htm / last.plan_value_mtm, 1.0, 1e-12);
    // Away from maturity the two markings genuinely differ.
    bool diverged = false;
    for (const auto& y : r.years)
        if (std::fabs(y.plan_value_htm - y.plan_value_mtm) > 1e-6) diverged = true;
    EXPECT_TRUE(diverged);
}

TEST(Engine, ExitValueUsesPriorYearQuotasAtThisYearsQuota) {
    ScenarioConfig c;
    c.initial_participants = 2;
    c.annual_contribution_override = 100.0;
    c.contribution_mode = ContributionMode::EntryYearOnly;
    c.allocation = {1.0};
    c.maturities = {Date(2035, 12, 31)};
    c.years = 5;
    c.start_year = 2005;
    c.scripted_exits = {ScriptedExit{2008, 2005, 1}};
    const auto curves = synthetic_curves(2005, 5);
    const SimulationResult r = run_scenario(c, curves);
    ASSERT_EQ(r.exits.size(), 1u);
    const auto& ev = r.exits[0];
    EXPECT_EQ(ev.year, 2008);
    EXPECT_EQ(ev.members, 1);
    // One 100-unit contribution at quota 1, so 100 quotas throughout.
    const auto& y2008 = r.years[3];
    EXPECT_NEAR(ev.exit_value_htm_pm, 100.0 * y2008.quota_htm, 1e-9);
    EXPECT_NEAR(ev.exit_value_mtm_pm, 100.0 * y2008.quota_mtm, 1e-9);
    EXPECT_EQ(r.final_record().members, 1);
}

TEST(Engine, InsolvencyHaltsAndFlags) {
    const ScenarioConfig c = io::scenario_from_file(std::string(QUOTASIM_DATA_DIR) +
                                                    "/configs/timed_entry_exit_insolvency.json");
    const SimulationResult r = run_scenario(c, bundled_curves());
    EXPECT_TRUE(r.insolvent);
    EXPECT_EQ(r.insolvent_year, 2015);
    EXPECT_EQ(r.years.back().year, 2015);  // halted, log kept
    EXPECT_GT(r.halt_exit_cash, r.halt_book_value);
    EXPECT_GT(r.halt_shortfall, 0.0);
    for (std::size_t m = 0; m < r.final_mtm_inventory.size(); ++m)
        EXPECT_NEAR(r.final_book.total_quantity(static_cast<int>(m)), 0.0, 1e-9);
    // The timed entrant is credited far more curve-marked quotas than
    // market-marked ones: rates collapsed into 2012.
    ASSERT_EQ(r.entries.size(), 2u);
    const auto& y2012 = r.years[7];
    EXPECT_GT(1000.0 / y2012.quota_htm, 3.0 * (1000.0 / y2012.quota_mtm));
    // On the market track the leaver takes back exactly the bonds their
    // cash bought, restoring the founders' holdings.
    const Price p2005 = market_price(bundled_curves(), 2005, Date(2035, 12, 31));
    const Quantity founders_bonds = 100.0 / p2005;
    EXPECT_NEAR(r.final_mtm_inventory[2], founders_bonds, 1e-9 * founders_bonds);
}

TEST(Engine, CoverageAndContextErrors) {
    ScenarioConfig c = standard_config();
    const auto short_curves = synthetic_curves(2005, 10);
    EXPECT_THROW(run_scenario(c, short_curves), coverage_error);
}

TEST(Engine, ConfigRoundTripsThroughJson) {
    ScenarioConfig c = standard_config();
    c.scripted_entries = {ScriptedEntry{2012, 1, 1000.0}};
    c.scripted_exits = {ScriptedExit{2015, 2012, 1}};
    c.entrant_contribution = 123.0;
    c.annual_contribution_override = 456.0;
    c.contribution_mode = ContributionMode::EntryYearOnly;
    const ScenarioConfig back = io::scenario_from_json(io::scenario_to_json(c));
    EXPECT_EQ(io::scenario_to_json(back).dump(), io::scenario_to_json(c).dump());
}

TEST(Engine, ConfigJsonRejectsUnknownFieldsAndBadSchema) {
    json j = io::scenario_to_json(standard_config());
    j["typo_field"] = 1;
    EXPECT_THROW(io::scenario_from_json(j), config_error);
    j.erase("typo_field");
    j["schema_version"] = 99;
    EXPECT_THROW(io::scenario_from_json(j), config_error);
}
