#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "quotasim/cubic_spline.hpp"
#include "quotasim/dates.hpp"
#include "quotasim/types.hpp"

namespace quotasim {

/// One vertex of a term structure: term in calendar days, annual real rate.
struct TermPoint {
    long term_days = 0;
    Rate rate = 0.0;
};

/// How to treat rate queries beyond the longest knot. Queries below the
/// shortest knot always fail.
enum class Extrapolation { Error, FlatBeyondLast };

/// Term structure of annual real rates observed on one date (the last
/// published date of a year). Immutable; rate lookups interpolate with a
/// natural cubic spline over (term_days, rate).
class YieldCurve {
public:
    YieldCurve(Date observation_date, std::vector<TermPoint> points)
        : observation_date_(observation_date), points_(std::move(points)) {
        if (points_.size() < 4)
            throw std::invalid_argument("curve " + observation_date_.iso() +
                                        ": need at least 4 points for a cubic spline");
        std::sort(points_.begin(), points_.end(),
                  [](const TermPoint& a, const TermPoint& b) { return a.term_days < b.term_days; });
        std::vector<double> xs, ys;
        xs.reserve(points_.size());
        ys.reserve(points_.size());
        for (const auto& p : points_) {
            if (p.term_days <= 0)
                throw std::invalid_argument("curve " + observation_date_.iso() +
                                            ": term_days must be positive");
            if (!(p.rate > -1.0))
                throw std::invalid_argument("curve " + observation_date_.iso() +
                                            ": rate must exceed -100%");
            if (!xs.empty() && static_cast<double>(p.term_days) == xs.back())
                throw std::invalid_argument("curve " + observation_date_.iso() +
                                            ": duplicate term " + std::to_string(p.term_days));
            xs.push_back(static_cast<double>(p.term_days));
            ys.push_back(p.rate);
        }
        spline_ = std::make_shared<const NaturalCubicSpline>(std::move(xs), std::move(ys));
    }

    const Date& observation_date() const { return observation_date_; }
    const std::vector<TermPoint>& points() const { return points_; }
    long min_term() const { return points_.front().term_days; }
    long max_term() const { return points_.back().term_days; }

    /// Annual rate at an arbitrary term. Knots reproduce exactly.
    Rate rate_at(long term_days, Extrapolation extrap = Extrapolation::Error) const {
        if (term_days < min_term())
            throw extrapolation_error("curve " + observation_date_.iso() + ": term " +
                                      std::to_string(term_days) + "d below shortest knot " +
                                      std::to_string(min_term()) + "d");
        if (term_days > max_term()) {
            if (extrap == Extrapolation::FlatBeyondLast) return points_.back().rate;
            throw extrapolation_error("curve " + observation_date_.iso() + ": term " +
                                      std::to_string(term_days) + "d beyond longest knot " +
                                      std::to_string(max_term()) + "d (flat extrapolation not enabled)");
        }
        return (*spline_)(static_cast<double>(term_days));
    }

private:
    Date observation_date_;
    std::vector<TermPoint> points_;
    std::shared_ptr<const NaturalCubicSpline> spline_;
};

/// Year-indexed family of curves covering a simulation window.
class YieldCurveSet {
public:
    YieldCurveSet() = default;

    void add(YieldCurve curve) {
        const Year y = curve.observation_date().year();
        if (curves_.count(y))
            throw std::invalid_argument("duplicate curve for year " + std::to_string(y));
        curves_.emplace(y, std::move(curve));
    }

    bool has(Year year) const { return curves_.count(year) != 0; }
    std::size_t size() const { return curves_.size(); }

    const YieldCurve& at(Year year) const {
        auto it = curves_.find(year);
        if (it == curves_.end())
            throw coverage_error("no curve for observation year " + std::to_string(year));
        return it->second;
    }

    /// Verifies one curve per year over [first, last]; throws coverage_error
    /// listing every missing year.
    void require_coverage(Year first, Year last) const {
        std::string missing;
        for (Year y = first; y <= last; ++y)
            if (!curves_.count(y)) missing += (missing.empty() ? "" : ", ") + std::to_string(y);
        if (!missing.empty())
            throw coverage_error("curve data missing observation years: " + missing);
    }

    const std::map<Year, YieldCurve>& curves() const { return curves_; }

private:
    std::map<Year, YieldCurve> curves_;
};

namespace detail {

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

inline std::vector<std::string> split_csv_row(const std::string& row) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(row);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!row.empty() && row.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// Reads the normalized curve CSV: header `reference_date,term_days,rate`,
/// ISO dates, rates as decimal fractions, `#` comment lines ignored,
/// LF or CRLF line endings.
inline YieldCurveSet parse_curve_csv(std::istream& in) {
    std::string row;
    std::size_t line = 0;
    bool header_seen = false;
    // date -> points, plus first line of appearance for error reporting
    std::map<Date, std::vector<TermPoint>> by_date;

    while (std::getline(in, row)) {
        ++line;
        row = detail::strip_cr(row);
        if (row.empty() || row[0] == '#') continue;
        if (!header_seen) {
            if (row != "reference_date,term_days,rate")
                throw parse_error("expected header 'reference_date,term_days,rate', got '" + row + "'",
                                  line);
            header_seen = true;
            continue;
        }
        const auto fields = detail::split_csv_row(row);
        if (fields.size() != 3)
            throw parse_error("expected 3 fields, got " + std::to_string(fields.size()), line);

        const Date date = parse_date(fields[0], line);

        std::size_t pos = 0;
        long term = 0;
        try {
            term = std::stol(fields[1], &pos);
        } catch (const std::exception&) {
            throw parse_error("bad term_days '" + fields[1] + "'", line);
        }
        if (pos != fields[1].size())
            throw parse_error("bad term_days '" + fields[1] + "'", line);
        if (term <= 0) throw parse_error("term_days must be positive", line);

        double rate = 0.0;
        try {
            rate = std::stod(fields[2], &pos);
        } catch (const std::exception&) {
            throw parse_error("bad rate '" + fields[2] + "'", line);
        }
        if (pos != fields[2].size())
            throw parse_error("bad rate '" + fields[2] + "'", line);
        if (!(rate > -1.0)) throw parse_error("rate must exceed -1", line);

        auto& pts = by_date[date];
        for (const auto& p : pts)
            if (p.term_days == term)
                throw parse_error("duplicate (date, term) row: " + fields[0] + ", " +
                                      std::to_string(term) + "d",
                                  line);
        pts.push_back(TermPoint{term, rate});
    }
    if (!header_seen) throw parse_error("empty curve file", line);

    YieldCurveSet set;
    Year last_year = 0;
    bool first_curve = true;
    for (auto& [date, pts] : by_date) {
        if (pts.size() < 4)
            throw parse_error("curve " + date.iso() + " has " + std::to_string(pts.size()) +
                                  " points; a cubic spline needs at least 4",
                              line);
        if (!first_curve && date.year() == last_year)
            throw parse_error("two observation dates fall in year " + std::to_string(last_year),
                              line);
        last_year = date.year();
        first_curve = false;
        set.add(YieldCurve(date, std::move(pts)));
    }
    return set;
}

/// Market price of a zero-coupon bond (unit face at maturity_date) under
/// the curve observed in obs_year: (1 + r)^(-d/365), d in calendar days.
inline Price market_price(const YieldCurveSet& curves, Year obs_year, const Date& maturity_date,
                          Extrapolation extrap = Extrapolation::Error) {
    const YieldCurve& curve = curves.at(obs_year);
    const long d = days_between(curve.observation_date(), maturity_date);
    if (d < 0)
        throw std::domain_error("bond maturing " + maturity_date.iso() +
                                " already expired at observation " +
                                curve.observation_date().iso());
    if (d == 0) return 1.0;
    const Rate r = curve.rate_at(d, extrap);
    return std::pow(1.0 + r, -static_cast<double>(d) / 365.0);
}

/// Annual yield implied by buying at `price` and redeeming unit face after
/// `years_to_maturity` years: price^(-1/T) - 1.
inline Rate purchase_yield(Price price, double years_to_maturity) {
    if (!(price > 0.0)) throw std::domain_error("purchase_yield: price must be positive");
    if (years_to_maturity == 0.0) {
        // Only a bond already at face can be bought with zero life.
        return 0.0;
    }
    if (years_to_maturity < 0.0)
        throw std::domain_error("purchase_yield: years_to_maturity must be non-negative");
    return std::pow(price, -1.0 / years_to_maturity) - 1.0;
}

/// Hold-to-maturity ("curve") value after an integer number of years of
/// accrual at the contracted yield.
inline Money accrued_value(Price purchase_price, Rate yield, int years_held) {
    if (years_held < 0) throw std::domain_error("accrued_value: negative holding period");
    return purchase_price * std::pow(1.0 + yield, years_held);
}

}  // namespace quotasim
