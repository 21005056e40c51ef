#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "quotasim/engine.hpp"
#include "quotasim/types.hpp"

namespace quotasim {

/// Per-member wealth transfer realized on exit: curve-marked payout minus
/// the market-marked payout. Positive means the leaver gained at the
/// stayers' expense.
struct ExitTransfer {
    Year year = 0;
    Year entry_year = 0;
    long long members = 0;
    Money transfer_pm = 0.0;
    double pct = 0.0;  // transfer / market exit value
    bool pct_defined = true;
};

/// Per-member transfer accrued by a member still in the plan at the
/// horizon: the gap between their quota share and their bond share,
/// valued at final market prices.
struct StayTransfer {
    Year entry_year = 0;
    long long members = 0;
    Money transfer_pm = 0.0;
    double pct_of_balance = 0.0;  // vs the member's own market-track balance
    double pct_of_plan = 0.0;     // vs the plan's total market value
};

namespace transfer {

inline ExitTransfer exit_transfer(const ExitEvent& event) {
    ExitTransfer t;
    t.year = event.year;
    t.entry_year = event.entry_year;
    t.members = event.members;
    t.transfer_pm = event.exit_value_htm_pm - event.exit_value_mtm_pm;
    if (event.exit_value_mtm_pm > 0.0) {
        t.pct = t.transfer_pm / event.exit_value_mtm_pm;
    } else {
        t.pct = 0.0;
        t.pct_defined = false;
    }
    return t;
}

inline std::vector<ExitTransfer> collect_exit_transfers(const SimulationResult& result) {
    std::vector<ExitTransfer> out;
    out.reserve(result.exits.size());
    for (const auto& ev : result.exits) out.push_back(exit_transfer(ev));
    return out;
}

/// Horizon transfers for everyone still in the plan, one entry per cohort.
///
/// A member's transfer is (quota share - bond share) applied to the plan's
/// member-attributed bond totals at final market prices, which collapses
/// to: quota share x total market value - own bonds at market. Quota and
/// bond shares each sum to one across members, so these transfers sum to
/// zero: they redistribute, never create.
inline std::vector<StayTransfer> stay_transfers(const SimulationResult& result) {
    std::vector<StayTransfer> out;
    if (result.insolvent) return out;  // no meaningful terminal state

    const auto& cohorts = result.final_cohorts;
    const std::size_t n_maturities = result.final_prices.size();

    double total_quotas_htm = 0.0;
    std::vector<Quantity> attributed(n_maturities, 0.0);
    for (const auto& c : cohorts) {
        total_quotas_htm += static_cast<double>(c.members) * c.quotas_htm_pm;
        for (std::size_t m = 0; m < n_maturities; ++m)
            attributed[m] += static_cast<double>(c.members) * c.bonds_pm[m];
    }
    if (total_quotas_htm <= 0.0) return out;

    Money plan_value = 0.0;
    for (std::size_t m = 0; m < n_maturities; ++m)
        plan_value += attributed[m] * result.final_prices[m];

    const double quota_mtm = result.final_record().quota_mtm;
    for (const auto& c : cohorts) {
        if (c.members == 0) continue;
        StayTransfer t;
        t.entry_year = c.entry_year;
        t.members = c.members;
        const double quota_share = c.quotas_htm_pm / total_quotas_htm;
        Money own_bonds_value = 0.0;
        for (std::size_t m = 0; m < n_maturities; ++m)
            own_bonds_value += c.bonds_pm[m] * result.final_prices[m];
        t.transfer_pm = quota_share * plan_value - own_bonds_value;
        const Money balance_mtm = c.quotas_mtm_pm * quota_mtm;
        t.pct_of_balance = balance_mtm > 0.0 ? t.transfer_pm / balance_mtm : 0.0;
        t.pct_of_plan = plan_value > 0.0 ? t.transfer_pm / plan_value : 0.0;
        out.push_back(t);
    }
    return out;
}

/// One observation fed into the summary statistics.
struct Observation {
    double pct = 0.0;
    Money money = 0.0;
    long long members = 0;
    Year year = 0;
    bool pct_defined = true;
};

inline std::vector<Observation> observations(const std::vector<ExitTransfer>& transfers) {
    std::vector<Observation> out;
    out.reserve(transfers.size());
    for (const auto& t : transfers)
        out.push_back(Observation{t.pct, t.transfer_pm, t.members, t.year, t.pct_defined});
    return out;
}

inline std::vector<Observation> observations(const std::vector<StayTransfer>& transfers) {
    std::vector<Observation> out;
    out.reserve(transfers.size());
    for (const auto& t : transfers)
        out.push_back(Observation{t.pct_of_balance, t.transfer_pm, t.members, 0, true});
    return out;
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<long long> counts;

    long long total() const {
        long long n = 0;
        for (long long c : counts) n += c;
        return n;
    }
};

/// Member-weighted summary: worst loss and best gain (with the year they
/// happened, for exits), mean, and a fixed-width histogram of the pct
/// distribution.
struct TransferSummary {
    long long population = 0;          // members with a defined pct
    long long undefined_members = 0;   // members whose pct base was zero
    bool has_loss = false;
    double max_loss_pct = 0.0;  // reported positive
    Year max_loss_year = 0;
    bool has_gain = false;
    double max_gain_pct = 0.0;
    Year max_gain_year = 0;
    double mean_pct = 0.0;  // signed, positive = gain to the subject
    Histogram hist;
};

inline TransferSummary aggregate(const std::vector<Observation>& obs, int bins = 50) {
    TransferSummary s;
    double weighted = 0.0;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& o : obs) {
        if (!o.pct_defined) {
            s.undefined_members += o.members;
            continue;
        }
        if (o.members == 0) continue;
        s.population += o.members;
        weighted += static_cast<double>(o.members) * o.pct;
        if (first) {
            lo = hi = o.pct;
            first = false;
        } else {
            lo = std::min(lo, o.pct);
            hi = std::max(hi, o.pct);
        }
        if (o.pct < 0.0 && -o.pct > s.max_loss_pct) {
            s.max_loss_pct = -o.pct;
            s.max_loss_year = o.year;
            s.has_loss = true;
        }
        if (o.pct > 0.0 && o.pct > s.max_gain_pct) {
            s.max_gain_pct = o.pct;
            s.max_gain_year = o.year;
            s.has_gain = true;
        }
    }
    if (s.population == 0) return s;
    s.mean_pct = weighted / static_cast<double>(s.population);

    s.hist.lo = lo;
    s.hist.hi = hi;
    s.hist.counts.assign(static_cast<std::size_t>(bins), 0);
    const double width = hi - lo;
    for (const auto& o : obs) {
        if (!o.pct_defined || o.members == 0) continue;
        std::size_t idx = 0;
        if (width > 0.0) {
            idx = static_cast<std::size_t>((o.pct - lo) / width * bins);
            if (idx >= static_cast<std::size_t>(bins)) idx = static_cast<std::size_t>(bins) - 1;
        }
        s.hist.counts[idx] += o.members;
    }
    return s;
}

}  // namespace transfer
}  // namespace quotasim
