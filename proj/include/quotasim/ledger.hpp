#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "quotasim/curve.hpp"
#include "quotasim/dates.hpp"
#include "quotasim/types.hpp"

namespace quotasim {

/// One lot: the quantity of a single maturity bought in a single year at a
/// single yield. The unit of hold-to-maturity accrual.
struct BondLot {
    int maturity_id = 0;       // index into the book's maturity list
    Year acquisition_year = 0;
    Quantity quantity = 0.0;
    Price purchase_price = 0.0;
    Rate purchase_yield = 0.0;

    /// Curve value per unit face after accruing to obs_year.
    Money curve_value(Year obs_year) const {
        if (obs_year < acquisition_year)
            throw std::domain_error("curve value requested before acquisition year");
        return accrued_value(purchase_price, purchase_yield, obs_year - acquisition_year);
    }
};

/// Sale ordering used to liquidate exits from a hold-to-maturity book.
enum class SaleStrategy { Oldest, Newest, Shortest };

inline std::string to_string(SaleStrategy s) {
    switch (s) {
        case SaleStrategy::Oldest: return "oldest";
        case SaleStrategy::Newest: return "newest";
        case SaleStrategy::Shortest: return "shortest";
    }
    return "?";
}

inline SaleStrategy sale_strategy_from_string(const std::string& s) {
    if (s == "oldest") return SaleStrategy::Oldest;
    if (s == "newest") return SaleStrategy::Newest;
    if (s == "shortest") return SaleStrategy::Shortest;
    throw config_error("unknown sale strategy '" + s + "' (oldest|newest|shortest)");
}

/// Outcome of a liquidation. Insufficient inventory is data, not failure:
/// shortfall > 0 means the book was exhausted before the cash target.
struct SaleResult {
    struct SoldLot {
        int maturity_id;
        Year acquisition_year;
        Quantity quantity;
    };
    std::vector<SoldLot> sold;
    Money proceeds = 0.0;
    Money shortfall = 0.0;
};

/// Plan-level bond inventory, one lot per (maturity, acquisition year).
/// Purchases in the same year merge: they share price and yield, so they
/// are indistinguishable.
class BondBook {
public:
    BondBook() = default;
    explicit BondBook(std::vector<Date> maturities) : maturities_(std::move(maturities)) {}

    const std::vector<Date>& maturities() const { return maturities_; }
    const std::vector<BondLot>& lots() const { return lots_; }
    bool empty() const { return lots_.empty(); }

    Quantity total_quantity(int maturity_id) const {
        Quantity q = 0.0;
        for (const auto& lot : lots_)
            if (lot.maturity_id == maturity_id) q += lot.quantity;
        return q;
    }

    /// Invests cash across maturities at the given market prices, splitting
    /// by allocation weight. Yields are implied by price and remaining
    /// integer years to maturity.
    void record_purchase(Year year, std::span<const double> weights, Money cash,
                         std::span<const Price> prices) {
        if (cash < 0.0) throw std::domain_error("record_purchase: negative cash");
        check_dims(weights.size());
        check_dims(prices.size());
        if (cash == 0.0) return;
        for (std::size_t m = 0; m < weights.size(); ++m) {
            if (weights[m] == 0.0) continue;
            if (!(prices[m] > 0.0))
                throw std::domain_error("record_purchase: price must be positive");
            const Quantity qty = cash * weights[m] / prices[m];
            const int tau = maturities_[m].year() - year;
            if (tau < 0)
                throw std::domain_error("record_purchase: maturity " + maturities_[m].iso() +
                                        " lies before purchase year " + std::to_string(year));
            add_lot(static_cast<int>(m), year, qty, prices[m],
                    purchase_yield(prices[m], static_cast<double>(tau)));
        }
    }

    /// Adds quantity to the (maturity, year) lot, creating it if absent.
    /// Exposed for fixtures that posit price and yield directly.
    void add_lot(int maturity_id, Year year, Quantity qty, Price price, Rate yield) {
        for (auto& lot : lots_) {
            if (lot.maturity_id == maturity_id && lot.acquisition_year == year) {
                lot.quantity += qty;
                return;
            }
        }
        lots_.push_back(BondLot{maturity_id, year, qty, price, yield});
    }

    /// Market value of the whole book at the given per-maturity prices.
    Money market_value(std::span<const Price> prices) const {
        Money total = 0.0;
        for (const auto& lot : lots_) {
            if (static_cast<std::size_t>(lot.maturity_id) >= prices.size())
                throw std::domain_error("market_value: missing price for maturity " +
                                        std::to_string(lot.maturity_id));
            total += lot.quantity * prices[static_cast<std::size_t>(lot.maturity_id)];
        }
        return total;
    }

    /// Book (curve) value: every lot accrued along its own purchase curve.
    Money htm_value(Year obs_year) const {
        Money total = 0.0;
        for (const auto& lot : lots_) {
            if (obs_year > maturities_[static_cast<std::size_t>(lot.maturity_id)].year())
                throw std::domain_error("curve value requested past maturity " +
                                        maturities_[static_cast<std::size_t>(lot.maturity_id)].iso());
            total += lot.quantity * lot.curve_value(obs_year);
        }
        return total;
    }

    /// Liquidates bonds to raise cash_needed at the given market prices.
    ///
    /// Oldest/Newest split the cash target across maturities by allocation
    /// weight, then deplete that maturity's lots in ascending (oldest) or
    /// descending (newest) acquisition year. If a maturity runs dry the
    /// unmet remainder spills over to whatever lots are left, in strategy
    /// order, so a shortfall is reported only once the whole book is empty.
    ///
    /// Shortest ignores the weights: lots go strictly by ascending maturity
    /// date and, within a maturity, newest acquisition first.
    SaleResult sell_for_cash(Money cash_needed, std::span<const Price> prices,
                             std::span<const double> weights, SaleStrategy strategy) {
        if (cash_needed < 0.0) throw std::domain_error("sell_for_cash: negative cash target");
        check_dims(prices.size());
        SaleResult result;
        if (cash_needed == 0.0) return result;

        // Residuals below this are settlement noise, not insolvency.
        const Money tol = 1e-9 * std::max(1.0, cash_needed);

        Money remaining = cash_needed;
        if (strategy == SaleStrategy::Shortest) {
            deplete(ordered_lots(strategy), remaining, prices, result);
        } else {
            check_dims(weights.size());
            for (std::size_t m = 0; m < weights.size(); ++m) {
                if (weights[m] == 0.0) continue;
                Money target = cash_needed * weights[m];
                auto in_maturity = ordered_lots(strategy, static_cast<int>(m));
                deplete(in_maturity, target, prices, result);
                remaining = remaining - (cash_needed * weights[m] - target);
            }
            if (remaining > tol && !lots_.empty())
                deplete(ordered_lots(strategy), remaining, prices, result);
        }
        result.proceeds = cash_needed - std::max(remaining, 0.0);
        if (remaining > tol) result.shortfall = remaining;
        prune();
        return result;
    }

private:
    void check_dims(std::size_t n) const {
        if (n != maturities_.size())
            throw std::domain_error("book expects " + std::to_string(maturities_.size()) +
                                    " maturities, got " + std::to_string(n));
    }

    /// Indices of live lots in liquidation order.
    std::vector<std::size_t> ordered_lots(SaleStrategy strategy, int only_maturity = -1) const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < lots_.size(); ++i)
            if (only_maturity < 0 || lots_[i].maturity_id == only_maturity) idx.push_back(i);
        auto date_of = [&](std::size_t i) { return maturities_[lots_[i].maturity_id]; };
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            switch (strategy) {
                case SaleStrategy::Oldest:
                    if (lots_[a].acquisition_year != lots_[b].acquisition_year)
                        return lots_[a].acquisition_year < lots_[b].acquisition_year;
                    return date_of(a) < date_of(b);
                case SaleStrategy::Newest:
                    if (lots_[a].acquisition_year != lots_[b].acquisition_year)
                        return lots_[a].acquisition_year > lots_[b].acquisition_year;
                    return date_of(a) < date_of(b);
                case SaleStrategy::Shortest:
                    if (date_of(a) != date_of(b)) return date_of(a) < date_of(b);
                    return lots_[a].acquisition_year > lots_[b].acquisition_year;
            }
            return false;
        });
        return idx;
    }

    /// Sells from the given lots until `cash` is raised or they run out.
    void deplete(const std::vector<std::size_t>& order, Money& cash,
                 std::span<const Price> prices, SaleResult& result) {
        for (std::size_t i : order) {
            if (cash <= 0.0) break;
            BondLot& lot = lots_[i];
            if (lot.quantity <= 0.0) continue;
            const Price p = prices[static_cast<std::size_t>(lot.maturity_id)];
            if (!(p > 0.0)) throw std::domain_error("sell_for_cash: price must be positive");
            const Quantity take = std::min(lot.quantity, cash / p);
            lot.quantity -= take;
            cash -= take * p;
            result.sold.push_back({lot.maturity_id, lot.acquisition_year, take});
        }
    }

    void prune() {
        std::erase_if(lots_, [](const BondLot& lot) { return lot.quantity <= 0.0; });
    }

    std::vector<Date> maturities_;
    std::vector<BondLot> lots_;
};

}  // namespace quotasim
