#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quotasim/curve.hpp"
#include "quotasim/dates.hpp"
#include "quotasim/ledger.hpp"
#include "quotasim/rng.hpp"
#include "quotasim/types.hpp"

namespace quotasim {

/// Whether members keep contributing every year or only once, on entry.
enum class ContributionMode { EveryYear, EntryYearOnly };

/// Deterministic one-off entry: `members` join in `year`, each bringing
/// `contribution`. Used for hand-built case studies.
struct ScriptedEntry {
    Year year = 0;
    long long members = 0;
    Money contribution = 0.0;
};

/// Deterministic one-off exit of `members` from the cohort that entered in
/// `entry_year`.
struct ScriptedExit {
    Year year = 0;
    Year entry_year = 0;
    long long members = 0;
};

/// Full description of one simulated plan. Everything that affects the
/// run is here, so (config, curves) -> result is a pure function.
struct ScenarioConfig {
    std::string name;
    long long initial_participants = 0;
    Money monthly_salary = 0.0;
    double contribution_rate = 0.15;
    int payments_per_year = 13;
    // Overrides salary * rate * payments when set.
    std::optional<Money> annual_contribution_override;
    ContributionMode contribution_mode = ContributionMode::EveryYear;
    double exit_rate = 0.0;
    double entry_rate = 0.0;
    std::optional<Money> entrant_contribution;  // rate-driven entrants; defaults to the annual amount
    std::vector<double> allocation;             // weight per maturity, sums to 1
    std::vector<Date> maturities;
    SaleStrategy sale_strategy = SaleStrategy::Oldest;
    double htm_fraction = 1.0;  // share of the book marked on the curve
    std::uint64_t seed = 0;
    int years = 20;
    Year start_year = 2005;
    bool flat_extrapolation = false;  // allow flat rate extension beyond the longest knot
    std::vector<ScriptedEntry> scripted_entries;
    std::vector<ScriptedExit> scripted_exits;

    Money annual_contribution() const {
        if (annual_contribution_override) return *annual_contribution_override;
        return monthly_salary * contribution_rate * payments_per_year;
    }

    Year final_year() const { return start_year + years - 1; }

    void validate() const {
        if (years < 1) throw config_error("years must be >= 1");
        if (initial_participants < 0) throw config_error("initial_participants must be >= 0");
        if (allocation.empty()) throw config_error("allocation must not be empty");
        if (allocation.size() != maturities.size())
            throw config_error("allocation and maturities must have the same length");
        double sum = 0.0;
        for (double w : allocation) {
            if (w < 0.0) throw config_error("allocation weights must be non-negative");
            sum += w;
        }
        if (std::fabs(sum - 1.0) > 1e-9) throw config_error("allocation weights must sum to 1");
        for (const auto& m : maturities)
            if (m.year() < final_year())
                throw config_error("maturity " + m.iso() + " falls before the final simulation year " +
                                   std::to_string(final_year()));
        if (exit_rate < 0.0 || exit_rate > 1.0) throw config_error("exit_rate must lie in [0,1]");
        if (entry_rate < 0.0 || entry_rate > 1.0) throw config_error("entry_rate must lie in [0,1]");
        if (htm_fraction < 0.0 || htm_fraction > 1.0)
            throw config_error("htm_fraction must lie in [0,1]");
        if (monthly_salary < 0.0) throw config_error("monthly_salary must be >= 0");
        if (contribution_rate < 0.0 || contribution_rate > 1.0)
            throw config_error("contribution_rate must lie in [0,1]");
        if (payments_per_year < 0) throw config_error("payments_per_year must be >= 0");
        if (annual_contribution() < 0.0) throw config_error("annual contribution must be >= 0");
        for (const auto& e : scripted_entries) {
            if (e.year <= start_year || e.year > final_year())
                throw config_error("scripted entry year " + std::to_string(e.year) +
                                   " outside (start_year, final_year]");
            if (e.members <= 0) throw config_error("scripted entry needs positive members");
            if (e.contribution < 0.0) throw config_error("scripted entry contribution must be >= 0");
        }
        for (const auto& e : scripted_exits) {
            if (e.year <= start_year || e.year > final_year())
                throw config_error("scripted exit year " + std::to_string(e.year) +
                                   " outside (start_year, final_year]");
            if (e.members <= 0) throw config_error("scripted exit needs positive members");
        }
    }
};

/// Group of identical participants: same entry year, same contribution
/// stream, hence the same per-member quotas and bond attributions. Keeping
/// one record with a multiplicity makes 50k-member plans cheap.
struct Cohort {
    Year entry_year = 0;
    long long members = 0;
    double quotas_mtm_pm = 0.0;  // quotas per member, market track
    double quotas_htm_pm = 0.0;  // quotas per member, operative track
    std::vector<Quantity> bonds_pm;  // bonds per member, per maturity
};

struct ExitEvent {
    Year year = 0;
    Year entry_year = 0;
    long long members = 0;
    Money exit_value_mtm_pm = 0.0;
    Money exit_value_htm_pm = 0.0;
};

struct EntryEvent {
    Year year = 0;
    Year entry_year = 0;  // == year for entrants; == start_year for the initial mass
    long long members = 0;
    Money contribution_pm = 0.0;
};

/// End-of-year snapshot.
struct YearRecord {
    Year year = 0;
    double quota_mtm = 1.0;
    double quota_htm = 1.0;
    Money plan_value_mtm = 0.0;  // market value of the market-track inventory
    Money plan_value_htm = 0.0;  // curve value of the operative book
    long long members = 0;
};

/// Mutable state of one plan while it is being simulated.
struct PlanState {
    Year year = 0;
    double quota_mtm = 1.0;
    double quota_htm = 1.0;
    BondBook book;  // operative inventory, lot level (the curve-marked side)
    std::vector<Quantity> mtm_inventory;  // counterfactual market-track inventory
    std::vector<Cohort> cohorts;
    bool insolvent = false;
    Year insolvent_year = 0;
    Money halt_exit_cash = 0.0;   // cash demanded in the halting year
    Money halt_book_value = 0.0;  // market value available against it
    Money halt_shortfall = 0.0;

    long long total_members() const {
        long long n = 0;
        for (const auto& c : cohorts) n += c.members;
        return n;
    }

    double total_quotas_htm() const {
        double q = 0.0;
        for (const auto& c : cohorts) q += static_cast<double>(c.members) * c.quotas_htm_pm;
        return q;
    }

    double total_quotas_mtm() const {
        double q = 0.0;
        for (const auto& c : cohorts) q += static_cast<double>(c.members) * c.quotas_mtm_pm;
        return q;
    }

    /// Per-maturity bonds attributed to current members.
    std::vector<Quantity> attributed_bonds() const {
        std::vector<Quantity> total(mtm_inventory.size(), 0.0);
        for (const auto& c : cohorts)
            for (std::size_t m = 0; m < total.size(); ++m)
                total[m] += static_cast<double>(c.members) * c.bonds_pm[m];
        return total;
    }
};

/// Everything a finished run reports. Serializable; deterministic given
/// (config, curves, seed).
struct SimulationResult {
    ScenarioConfig config;
    std::vector<YearRecord> years;
    std::vector<ExitEvent> exits;
    std::vector<EntryEvent> entries;
    std::vector<Cohort> final_cohorts;
    BondBook final_book;
    std::vector<Quantity> final_mtm_inventory;
    std::vector<Price> final_prices;  // market prices in the last simulated year
    bool insolvent = false;
    Year insolvent_year = 0;
    Money halt_exit_cash = 0.0;
    Money halt_book_value = 0.0;
    Money halt_shortfall = 0.0;

    const YearRecord& final_record() const { return years.back(); }
};

namespace engine {

inline Money annual_contribution(const ScenarioConfig& config) {
    return config.annual_contribution();
}

/// Advances both quota tracks by one year.
///
/// The market ratio prices the market-track inventory held at the end of
/// the previous year; the curve ratio accrues the operative book lot by
/// lot along each purchase curve. The operative quota blends the two by
/// the curve-marked fraction alpha; with alpha = 0 it degenerates, bit for
/// bit, into the market track.
inline void quota_update(PlanState& state, std::span<const Price> prices_prev,
                         std::span<const Price> prices_now, Year year_prev, Year year_now,
                         double alpha) {
    double ratio_mtm = 1.0;
    double inventory = 0.0;
    for (Quantity q : state.mtm_inventory) inventory += q;
    if (inventory > 0.0) {
        Money prev = 0.0, now = 0.0;
        for (std::size_t m = 0; m < state.mtm_inventory.size(); ++m) {
            prev += state.mtm_inventory[m] * prices_prev[m];
            now += state.mtm_inventory[m] * prices_now[m];
        }
        if (!(prev > 0.0))
            throw degeneracy_error("year " + std::to_string(year_now) +
                                   ": zero prior market value with nonzero holdings");
        ratio_mtm = now / prev;
    }

    double ratio_htm = 1.0;
    if (!state.book.empty()) {
        const Money prev = state.book.htm_value(year_prev);
        const Money now = state.book.htm_value(year_now);
        if (!(prev > 0.0))
            throw degeneracy_error("year " + std::to_string(year_now) +
                                   ": zero prior book value with nonzero holdings");
        ratio_htm = now / prev;
    }

    state.quota_mtm *= ratio_mtm;
    state.quota_htm *= alpha * ratio_htm + (1.0 - alpha) * ratio_mtm;
    state.year = year_now;
}

/// Draws the year's exits: round(exit_rate * population) members sampled
/// uniformly without replacement from the pooled population, i.e. a
/// multivariate hypergeometric split across cohorts.
inline std::vector<long long> sample_exit_counts(Xoshiro256& rng,
                                                 const std::vector<Cohort>& cohorts,
                                                 double exit_rate) {
    std::vector<long long> counts(cohorts.size(), 0);
    long long population = 0;
    for (const auto& c : cohorts) population += c.members;
    long long draws = std::min(round_half_up(exit_rate * static_cast<double>(population)), population);
    std::vector<long long> left(cohorts.size());
    for (std::size_t i = 0; i < cohorts.size(); ++i) left[i] = cohorts[i].members;
    while (draws-- > 0) {
        std::uint64_t pick = rng.below(static_cast<std::uint64_t>(population));
        for (std::size_t i = 0; i < left.size(); ++i) {
            if (pick < static_cast<std::uint64_t>(left[i])) {
                ++counts[i];
                --left[i];
                break;
            }
            pick -= static_cast<std::uint64_t>(left[i]);
        }
        --population;
    }
    return counts;
}

/// Values and pays this year's exits.
///
/// Each leaver receives last year's quota count at this year's quota value
/// (the exit-year contribution is never applied). The market track gives
/// back exactly the leavers' attributed bonds; the operative book raises
/// the curve-valued cash by selling per the configured strategy. A
/// shortfall marks the plan insolvent.
inline std::vector<ExitEvent> process_exits(PlanState& state, std::span<const long long> counts,
                                            std::span<const Price> prices_now,
                                            std::span<const double> weights,
                                            SaleStrategy strategy) {
    std::vector<ExitEvent> events;
    Money cash_htm = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        Cohort& cohort = state.cohorts[i];
        if (counts[i] > cohort.members)
            throw std::domain_error("exit count exceeds cohort size (entry year " +
                                    std::to_string(cohort.entry_year) + ")");
        ExitEvent ev;
        ev.year = state.year;
        ev.entry_year = cohort.entry_year;
        ev.members = counts[i];
        ev.exit_value_mtm_pm = cohort.quotas_mtm_pm * state.quota_mtm;
        ev.exit_value_htm_pm = cohort.quotas_htm_pm * state.quota_htm;
        events.push_back(ev);

        cash_htm += static_cast<double>(counts[i]) * ev.exit_value_htm_pm;
        for (std::size_t m = 0; m < state.mtm_inventory.size(); ++m) {
            state.mtm_inventory[m] -= static_cast<double>(counts[i]) * cohort.bonds_pm[m];
            // attribution never exceeds inventory; negatives are settlement noise
            if (state.mtm_inventory[m] < 0.0) state.mtm_inventory[m] = 0.0;
        }
        cohort.members -= counts[i];
    }
    if (cash_htm > 0.0) {
        const Money available = state.book.market_value(prices_now);
        SaleResult sale = state.book.sell_for_cash(cash_htm, prices_now, weights, strategy);
        if (sale.shortfall > 0.0) {
            state.insolvent = true;
            state.insolvent_year = state.year;
            state.halt_exit_cash = cash_htm;
            state.halt_book_value = available;
            state.halt_shortfall = sale.shortfall;
        }
    }
    return events;
}

/// Credits one cohort with a per-member contribution: quotas at this
/// year's quota values, bonds at market prices, matching plan-level
/// purchases on both tracks.
inline void contribute_cohort(PlanState& state, Cohort& cohort, Money cash_per_member,
                              std::span<const Price> prices_now, std::span<const double> weights) {
    if (cash_per_member == 0.0 || cohort.members == 0) return;
    if (cash_per_member < 0.0) throw std::domain_error("negative contribution");
    cohort.quotas_htm_pm += cash_per_member / state.quota_htm;
    cohort.quotas_mtm_pm += cash_per_member / state.quota_mtm;
    const double members = static_cast<double>(cohort.members);
    for (std::size_t m = 0; m < weights.size(); ++m) {
        if (weights[m] == 0.0) continue;
        const Quantity per_member = cash_per_member * weights[m] / prices_now[m];
        cohort.bonds_pm[m] += per_member;
        state.mtm_inventory[m] += members * per_member;
    }
    state.book.record_purchase(state.year, weights, members * cash_per_member, prices_now);
}

/// Contributions of everyone already in the plan (exits have been removed).
inline void apply_contributions(PlanState& state, Money cash_per_member,
                                std::span<const Price> prices_now,
                                std::span<const double> weights) {
    for (auto& cohort : state.cohorts) contribute_cohort(state, cohort, cash_per_member, prices_now, weights);
}

/// Creates a new cohort of entrants and applies their first contribution.
inline Cohort& add_entrants(PlanState& state, Year year, long long members, Money cash_per_member,
                            std::span<const Price> prices_now, std::span<const double> weights) {
    Cohort cohort;
    cohort.entry_year = year;
    cohort.members = members;
    cohort.bonds_pm.assign(state.mtm_inventory.size(), 0.0);
    state.cohorts.push_back(std::move(cohort));
    contribute_cohort(state, state.cohorts.back(), cash_per_member, prices_now, weights);
    return state.cohorts.back();
}

/// Relative bookkeeping check: member-attributed bonds must equal the
/// market-track inventory, maturity by maturity.
inline void check_conservation(const PlanState& state) {
    const auto attributed = state.attributed_bonds();
    for (std::size_t m = 0; m < attributed.size(); ++m) {
        const double scale = std::max({std::fabs(attributed[m]), std::fabs(state.mtm_inventory[m]), 1.0});
        if (std::fabs(attributed[m] - state.mtm_inventory[m]) > 1e-9 * scale)
            throw std::logic_error("bookkeeping drift at year " + std::to_string(state.year) +
                                   ", maturity " + std::to_string(m));
    }
}

}  // namespace engine

/// Per-year market prices for every configured maturity, precomputed so
/// that grid workers share one read-only table.
class MarketTable {
public:
    MarketTable() = default;

    MarketTable(const ScenarioConfig& config, const YieldCurveSet& curves) {
        curves.require_coverage(config.start_year, config.final_year());
        const auto extrap =
            config.flat_extrapolation ? Extrapolation::FlatBeyondLast : Extrapolation::Error;
        prices_.resize(static_cast<std::size_t>(config.years));
        for (int t = 0; t < config.years; ++t) {
            const Year year = config.start_year + t;
            auto& row = prices_[static_cast<std::size_t>(t)];
            row.reserve(config.maturities.size());
            for (const auto& maturity : config.maturities) {
                try {
                    row.push_back(market_price(curves, year, maturity, extrap));
                } catch (const extrapolation_error& e) {
                    throw extrapolation_error("year " + std::to_string(year) + ": " + e.what());
                }
            }
        }
    }

    std::span<const Price> at_index(int t) const { return prices_[static_cast<std::size_t>(t)]; }

private:
    std::vector<std::vector<Price>> prices_;
};

/// Runs the complete annual algorithm for one scenario.
///
/// Year 1 sets both quota values to 1 and invests the initial mass's
/// contributions. Every later year: quota update, exits (sampled, then
/// scripted), exit valuation and liquidation, survivors' contributions,
/// entrants. A liquidation shortfall halts the run with the insolvent
/// flag set; everything logged up to then is kept.
inline SimulationResult run_scenario(const ScenarioConfig& config, const MarketTable& market) {
    config.validate();
    const std::size_t n_maturities = config.maturities.size();
    const Money contribution = config.annual_contribution();

    Xoshiro256 rng(config.seed);
    PlanState state;
    state.book = BondBook(config.maturities);
    state.mtm_inventory.assign(n_maturities, 0.0);
    state.year = config.start_year;

    SimulationResult result;
    result.config = config;

    // Year 1: unit quota by fiat, initial purchases at the first curve.
    {
        const auto prices = market.at_index(0);
        if (config.initial_participants > 0) {
            engine::add_entrants(state, config.start_year, config.initial_participants, contribution,
                                 prices, config.allocation);
            result.entries.push_back(
                EntryEvent{config.start_year, config.start_year, config.initial_participants, contribution});
        }
        engine::check_conservation(state);
        result.years.push_back(YearRecord{config.start_year, state.quota_mtm, state.quota_htm,
                                          state.book.market_value(prices),
                                          state.book.htm_value(config.start_year),
                                          state.total_members()});
    }

    for (int t = 1; t < config.years && !state.insolvent; ++t) {
        const Year year = config.start_year + t;
        const auto prices_prev = market.at_index(t - 1);
        const auto prices_now = market.at_index(t);

        engine::quota_update(state, prices_prev, prices_now, year - 1, year, config.htm_fraction);

        const long long population = state.total_members();

        // Exits drawn from last year's population, then scripted ones.
        std::vector<long long> exit_counts(state.cohorts.size(), 0);
        if (config.exit_rate > 0.0 && population > 0)
            exit_counts = engine::sample_exit_counts(rng, state.cohorts, config.exit_rate);
        for (const auto& scripted : config.scripted_exits) {
            if (scripted.year != year) continue;
            bool found = false;
            for (std::size_t i = 0; i < state.cohorts.size(); ++i) {
                if (state.cohorts[i].entry_year == scripted.entry_year) {
                    exit_counts[i] += scripted.members;
                    found = true;
                    break;
                }
            }
            if (!found)
                throw config_error("scripted exit in " + std::to_string(year) +
                                   " references unknown cohort of " + std::to_string(scripted.entry_year));
        }

        auto events = engine::process_exits(state, exit_counts, prices_now, config.allocation,
                                            config.sale_strategy);
        result.exits.insert(result.exits.end(), events.begin(), events.end());

        if (!state.insolvent) {
            if (config.contribution_mode == ContributionMode::EveryYear)
                engine::apply_contributions(state, contribution, prices_now, config.allocation);

            if (config.entry_rate > 0.0) {
                const long long entrants =
                    round_half_up(config.entry_rate * static_cast<double>(population));
                if (entrants > 0) {
                    const Money cash = config.entrant_contribution.value_or(contribution);
                    engine::add_entrants(state, year, entrants, cash, prices_now, config.allocation);
                    result.entries.push_back(EntryEvent{year, year, entrants, cash});
                }
            }
            for (const auto& scripted : config.scripted_entries) {
                if (scripted.year != year) continue;
                engine::add_entrants(state, year, scripted.members, scripted.contribution, prices_now,
                                     config.allocation);
                result.entries.push_back(EntryEvent{year, year, scripted.members, scripted.contribution});
            }
            engine::check_conservation(state);
        }

        Money mv = 0.0;
        for (std::size_t m = 0; m < n_maturities; ++m) mv += state.mtm_inventory[m] * prices_now[m];
        result.years.push_back(YearRecord{year, state.quota_mtm, state.quota_htm, mv,
                                          state.book.htm_value(year), state.total_members()});
    }

    const int last_index = static_cast<int>(result.years.size()) - 1;
    result.final_prices.assign(market.at_index(last_index).begin(), market.at_index(last_index).end());
    result.final_cohorts = state.cohorts;
    result.final_book = state.book;
    result.final_mtm_inventory = state.mtm_inventory;
    result.insolvent = state.insolvent;
    result.insolvent_year = state.insolvent_year;
    result.halt_exit_cash = state.halt_exit_cash;
    result.halt_book_value = state.halt_book_value;
    result.halt_shortfall = state.halt_shortfall;
    return result;
}

inline SimulationResult run_scenario(const ScenarioConfig& config, const YieldCurveSet& curves) {
    config.validate();
    return run_scenario(config, MarketTable(config, curves));
}

}  // namespace quotasim
