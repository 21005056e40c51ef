#pragma once

// Self-contained two-period reference cases exercising the quota, ledger
// and transfer machinery with pinned prices. They need no curve data, so
// they double as zero-setup oracles for CI (`qsim examples`).

#include <array>
#include <vector>

#include "quotasim/engine.hpp"
#include "quotasim/transfer.hpp"
#include "quotasim/types.hpp"

namespace quotasim::worked_examples {

namespace detail {

inline Date far_maturity(int slot) { return Date(2040 + slot, 12, 31); }

/// Horizon transfers straight from cohort state (the engine-independent
/// core of transfer::stay_transfers).
inline std::vector<StayTransfer> stay_from_state(const PlanState& state,
                                                 std::span<const Price> prices) {
    SimulationResult r;
    r.final_cohorts = state.cohorts;
    r.final_prices.assign(prices.begin(), prices.end());
    r.years.push_back(YearRecord{state.year, state.quota_mtm, state.quota_htm, 0.0, 0.0,
                                 state.total_members()});
    return transfer::stay_transfers(r);
}

}  // namespace detail

/// Entry-side case, one bond. Two members: the first contributes 1 in each
/// of two years, the second only in year two. Between the years the bond's
/// market price falls to `market_t2` while its curve value accrues to 1.01.
/// The second contributor is credited too few quotas for the bonds their
/// cash buys; the gap is the transfer.
struct SingleBondCase {
    double quota_mtm_t2 = 0.0;
    double quota_htm_t2 = 0.0;
    double first_quotas_htm = 0.0;   // 1.99
    double second_quotas_htm = 0.0;  // 0.99
    Quantity first_bonds = 0.0;      // 2.11
    Quantity second_bonds = 0.0;     // 1.11
    Money plan_value_mtm = 0.0;      // 2.90
    Money plan_value_htm = 0.0;      // 3.01
    Money first_stay_transfer = 0.0;
    Money second_stay_transfer = 0.0;
    double second_pct_of_contribution = 0.0;
    double first_pct_of_plan = 0.0;
    // Exit leg: the first member redeems everything right after the year-2
    // contribution.
    Money exit_value_htm = 0.0;  // 2.01
    Money exit_value_mtm = 0.0;  // 1.90 at 0.90, 1.98 at 0.98
    Money exit_transfer = 0.0;   // 0.11 / 0.03
    Quantity bonds_sold = 0.0;
    Quantity bonds_remaining = 0.0;
    Quantity second_bond_loss = 0.0;  // attributed minus remaining
    Money congruence = 0.0;            // bond loss at market, equals exit_transfer
};

inline SingleBondCase single_bond_entry_exit_case(Price market_t2 = 0.90) {
    const Year y1 = 2005, y2 = 2006;
    const std::array<double, 1> weights{1.0};
    const std::array<Price, 1> prices_t1{1.0};
    const std::array<Price, 1> prices_t2{market_t2};

    PlanState state;
    state.year = y1;
    state.book = BondBook({detail::far_maturity(0)});
    state.mtm_inventory.assign(1, 0.0);

    // Year 1: the first member's unit contribution buys one bond at par.
    // Its contracted yield is 1%, so the curve value one year on is 1.01.
    Cohort first;
    first.entry_year = y1;
    first.members = 1;
    first.quotas_mtm_pm = first.quotas_htm_pm = 1.0;
    first.bonds_pm = {1.0};
    state.cohorts.push_back(first);
    state.book.add_lot(0, y1, 1.0, 1.0, 0.01);
    state.mtm_inventory[0] = 1.0;

    // Year 2: quota update, then both members contribute 1.
    engine::quota_update(state, prices_t1, prices_t2, y1, y2, 1.0);

    SingleBondCase out;
    out.quota_mtm_t2 = state.quota_mtm;
    out.quota_htm_t2 = state.quota_htm;

    engine::contribute_cohort(state, state.cohorts[0], 1.0, prices_t2, weights);
    engine::add_entrants(state, y2, 1, 1.0, prices_t2, weights);

    const Cohort& ana = state.cohorts[0];
    const Cohort& marcos = state.cohorts[1];
    out.first_quotas_htm = ana.quotas_htm_pm;
    out.second_quotas_htm = marcos.quotas_htm_pm;
    out.first_bonds = ana.bonds_pm[0];
    out.second_bonds = marcos.bonds_pm[0];
    out.plan_value_mtm = state.mtm_inventory[0] * market_t2;
    out.plan_value_htm = state.book.htm_value(y2);

    const auto stays = detail::stay_from_state(state, prices_t2);
    out.first_stay_transfer = stays[0].transfer_pm;
    out.second_stay_transfer = stays[1].transfer_pm;
    out.second_pct_of_contribution = stays[1].transfer_pm / 1.0;
    out.first_pct_of_plan = stays[0].pct_of_plan;

    // Exit leg: full redemption of the first member at the curve-marked
    // quota, liquidated at market.
    out.exit_value_htm = ana.quotas_htm_pm * state.quota_htm;
    out.exit_value_mtm = ana.quotas_mtm_pm * state.quota_mtm;
    out.exit_transfer = out.exit_value_htm - out.exit_value_mtm;

    BondBook book = state.book;
    const SaleResult sale = book.sell_for_cash(out.exit_value_htm, prices_t2, weights,
                                               SaleStrategy::Oldest);
    for (const auto& s : sale.sold) out.bonds_sold += s.quantity;
    out.bonds_remaining = book.total_quantity(0);
    out.second_bond_loss = marcos.bonds_pm[0] - out.bonds_remaining;
    out.congruence = out.second_bond_loss * market_t2;
    return out;
}

/// Entry-side case, two bonds, with a fraction `alpha` of the book marked
/// on the curve. Bond A: 1.00 -> market 0.90, curve 1.01. Bond B: 0.90 ->
/// market 0.85, curve 0.91. Contributions split 50/50.
struct TwoBondCase {
    double quota_t2 = 0.0;  // 1.01056 at alpha=1, 0.94873 at 0.3, 0.92222 at 0
    double second_new_quotas = 0.0;
    Money second_transfer = 0.0;
    Money first_transfer = 0.0;
    std::array<Money, 2> second_transfer_by_bond{};
    double first_pct_of_balance_htm = 0.0;  // vs first member's curve-marked balance
};

inline TwoBondCase two_bond_entry_case(double alpha) {
    const Year y1 = 2005, y2 = 2006;
    const std::array<double, 2> weights{0.5, 0.5};
    const std::array<Price, 2> prices_t1{1.00, 0.90};
    const std::array<Price, 2> prices_t2{0.90, 0.85};

    PlanState state;
    state.year = y1;
    state.book = BondBook({detail::far_maturity(0), detail::far_maturity(1)});
    state.mtm_inventory.assign(2, 0.0);

    Cohort first;
    first.entry_year = y1;
    first.members = 1;
    first.quotas_mtm_pm = first.quotas_htm_pm = 1.0;
    first.bonds_pm = {0.5 / prices_t1[0], 0.5 / prices_t1[1]};
    state.cohorts.push_back(first);
    // Contracted yields chosen so the curve values one year on are 1.01
    // and 0.91.
    state.book.add_lot(0, y1, first.bonds_pm[0], prices_t1[0], 0.01);
    state.book.add_lot(1, y1, first.bonds_pm[1], prices_t1[1], 0.91 / 0.90 - 1.0);
    state.mtm_inventory = {first.bonds_pm[0], first.bonds_pm[1]};

    engine::quota_update(state, prices_t1, prices_t2, y1, y2, alpha);

    TwoBondCase out;
    out.quota_t2 = state.quota_htm;

    engine::contribute_cohort(state, state.cohorts[0], 1.0, prices_t2, weights);
    engine::add_entrants(state, y2, 1, 1.0, prices_t2, weights);
    out.second_new_quotas = state.cohorts[1].quotas_htm_pm;

    const auto stays = detail::stay_from_state(state, prices_t2);
    out.first_transfer = stays[0].transfer_pm;
    out.second_transfer = stays[1].transfer_pm;

    // Per-bond decomposition of the second member's transfer.
    const double total_quotas = state.total_quotas_htm();
    const auto attributed = state.attributed_bonds();
    const double quota_share = state.cohorts[1].quotas_htm_pm / total_quotas;
    for (std::size_t m = 0; m < 2; ++m) {
        const double bond_share = state.cohorts[1].bonds_pm[m] / attributed[m];
        out.second_transfer_by_bond[m] = (quota_share - bond_share) * attributed[m] * prices_t2[m];
    }

    const Money first_balance_htm = state.cohorts[0].quotas_htm_pm * state.quota_htm;
    out.first_pct_of_balance_htm = out.first_transfer / first_balance_htm;
    return out;
}

}  // namespace quotasim::worked_examples
