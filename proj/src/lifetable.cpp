#include "idmfit/lifetable.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "csv.hpp"

namespace idmfit {

LifeTableColumn::LifeTableColumn(std::vector<LifeTableEntry> entries)
    : entries_(std::move(entries)) {
    for (std::size_t k = 0; k < entries_.size(); ++k) {
        if (!(entries_[k].value > 0.0) || !std::isfinite(entries_[k].value))
            throw std::invalid_argument("non-positive life-table value");
        if (k > 0 && entries_[k - 1].interval.hi > entries_[k].interval.lo)
            throw std::invalid_argument("life-table intervals must be sorted and non-overlapping");
    }
}

std::vector<AgeInterval> LifeTableColumn::intervals() const {
    std::vector<AgeInterval> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.interval);
    return out;
}

LifeTable::LifeTable(LifeTableColumn general_, LifeTableColumn diseased_)
    : general(std::move(general_)), diseased(std::move(diseased_)) {
    if (general.intervals() != diseased.intervals())
        throw ParseError(ParseError::Kind::grid_mismatch, 0,
                         "life-table columns are on different age grids (" +
                             std::to_string(general.size()) + " vs " +
                             std::to_string(diseased.size()) + " rows)");
}

LifeTable parse_lifetable_csv(std::istream& in) {
    const auto doc = csv::read(in, {"age_lo", "age_hi", "general", "diseased"});
    if (doc.rows.empty()) throw ParseError(ParseError::Kind::empty_table, 0, "empty table");

    std::vector<LifeTableEntry> general;
    std::vector<LifeTableEntry> diseased;
    double previous_hi = -INFINITY;
    for (const auto& row : doc.rows) {
        const auto r = row.number;
        const double lo = csv::to_double(row.fields[0], r, "age_lo");
        const double hi = csv::to_double(row.fields[1], r, "age_hi");
        if (!(lo >= 0.0) || !(lo < hi) || !std::isfinite(hi))
            throw ParseError(ParseError::Kind::invalid_interval, r,
                             "invalid age interval at row " + std::to_string(r));
        if (lo < previous_hi)
            throw ParseError(ParseError::Kind::overlapping_intervals, r,
                             "life-table rows must be ascending and non-overlapping (row " +
                                 std::to_string(r) + ")");
        previous_hi = hi;
        const double g = csv::to_double(row.fields[2], r, "general");
        const double d = csv::to_double(row.fields[3], r, "diseased");
        if (!(g > 0.0) || !(d > 0.0))
            throw ParseError(ParseError::Kind::negative_value, r,
                             "non-positive life-table value at row " + std::to_string(r));
        general.push_back({AgeInterval{lo, hi}, g});
        diseased.push_back({AgeInterval{lo, hi}, d});
    }
    return LifeTable(LifeTableColumn(std::move(general)), LifeTableColumn(std::move(diseased)));
}

LifeTable parse_lifetable_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_lifetable_csv(in);
}

LifeTable read_lifetable_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_lifetable_csv(in);
}

PiecewiseConstantRate lifetable_to_rate(const LifeTableColumn& column, Diagnostics* diag) {
    const auto& e = column.entries();
    if (e.size() < 2) throw std::invalid_argument("life-table conversion needs at least 2 entries");

    const double width = e.front().interval.width();
    for (std::size_t k = 0; k < e.size(); ++k) {
        if (std::abs(e[k].interval.width() - width) > 1e-9 * width)
            throw std::invalid_argument("life-table conversion needs equal-width intervals");
        if (k > 0 && e[k].interval.lo != e[k - 1].interval.hi)
            throw std::invalid_argument("life-table grid has a gap at age " +
                                        std::to_string(e[k - 1].interval.hi));
    }

    std::vector<double> rates(e.size());
    for (std::size_t k = 0; k + 1 < e.size(); ++k) {
        double r = std::log(e[k].value / e[k + 1].value) / width;
        if (r < 0.0) {
            warn(diag, "lifetable.clamp",
                 "negative rate on [" + std::to_string(e[k].interval.lo) + ", " +
                     std::to_string(e[k].interval.hi) + ") clamped to 0");
            r = 0.0;
        }
        rates[k] = r;
    }

    const auto n = e.size();
    double last = rates[n - 2];
    if (n >= 3 && rates[n - 3] > 0.0) {
        last = rates[n - 2] * (rates[n - 2] / rates[n - 3]);
    } else if (n >= 3) {
        warn(diag, "lifetable.extrapolation",
             "previous rate is zero; last rate carried forward instead of extrapolated");
    }
    rates[n - 1] = std::max(last, 0.0);
    warn(diag, "lifetable.extrapolation",
         "rate on final interval [" + std::to_string(e[n - 1].interval.lo) + ", " +
             std::to_string(e[n - 1].interval.hi) + ") extrapolated log-linearly");

    return PiecewiseConstantRate::on_intervals(column.intervals(), std::move(rates));
}

} // namespace idmfit
