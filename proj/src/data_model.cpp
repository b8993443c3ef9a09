#include "idmfit/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "csv.hpp"
#include "idmfit/diagnostics.hpp"

namespace idmfit {

AgeInterval::AgeInterval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo < 0.0 || !(lo < hi))
        throw std::invalid_argument("age interval requires 0 <= lo < hi, got [" +
                                    std::to_string(lo) + ", " + std::to_string(hi) + ")");
}

AggregatedCounts::AggregatedCounts(AgeInterval interval_, std::int64_t n_, std::int64_t c_)
    : interval(interval_), n(n_), c(c_) {
    if (n < 0 || c < 0) throw std::invalid_argument("counts must be non-negative");
    if (c > n) throw std::invalid_argument("c exceeds n");
}

namespace {

bool by_age(const AggregatedCounts& a, const AggregatedCounts& b) {
    return a.interval.lo < b.interval.lo;
}

} // namespace

CurrentStatusTable::CurrentStatusTable(std::vector<AggregatedCounts> groups,
                                       std::optional<double> period)
    : groups_(std::move(groups)), period_(period) {
    if (groups_.empty()) throw std::invalid_argument("empty table");
    std::stable_sort(groups_.begin(), groups_.end(), by_age);
    for (std::size_t k = 0; k < groups_.size(); ++k) {
        const auto& g = groups_[k];
        if (g.n < 0 || g.c < 0 || g.c > g.n)
            throw std::invalid_argument("invalid counts in group " + std::to_string(k + 1));
        if (k > 0 && groups_[k - 1].interval.hi > g.interval.lo)
            throw std::invalid_argument("overlapping age intervals");
    }
}

std::vector<double> CurrentStatusTable::midpoints() const {
    std::vector<double> out;
    out.reserve(groups_.size());
    for (const auto& g : groups_) out.push_back(g.interval.midpoint());
    return out;
}

std::vector<AgeInterval> CurrentStatusTable::intervals() const {
    std::vector<AgeInterval> out;
    out.reserve(groups_.size());
    for (const auto& g : groups_) out.push_back(g.interval);
    return out;
}

std::int64_t CurrentStatusTable::total_n() const {
    return std::accumulate(groups_.begin(), groups_.end(), std::int64_t{0},
                           [](std::int64_t s, const AggregatedCounts& g) { return s + g.n; });
}

std::int64_t CurrentStatusTable::total_c() const {
    return std::accumulate(groups_.begin(), groups_.end(), std::int64_t{0},
                           [](std::int64_t s, const AggregatedCounts& g) { return s + g.c; });
}

CurrentStatusTable parse_current_status_csv(std::istream& in) {
    const auto doc = csv::read(in, {"age_lo", "age_hi", "n", "c"});

    std::optional<double> period;
    for (const auto& comment : doc.comments) {
        const std::string_view key = "period=";
        if (comment.rfind(key, 0) != 0) continue;
        const auto value = csv::trim(std::string_view(comment).substr(key.size()));
        period = csv::to_double(value, 0, "period");
    }

    if (doc.rows.empty()) throw ParseError(ParseError::Kind::empty_table, 0, "empty table");

    struct Parsed {
        AggregatedCounts counts;
        std::size_t row;
    };
    std::vector<Parsed> parsed;
    parsed.reserve(doc.rows.size());
    for (const auto& row : doc.rows) {
        const auto r = row.number;
        const double lo = csv::to_double(row.fields[0], r, "age_lo");
        const double hi = csv::to_double(row.fields[1], r, "age_hi");
        const auto n = csv::to_count(row.fields[2], r, "n");
        const auto c = csv::to_count(row.fields[3], r, "c");
        if (!(lo >= 0.0) || !(lo < hi) || !std::isfinite(hi))
            throw ParseError(ParseError::Kind::invalid_interval, r,
                             "invalid age interval at row " + std::to_string(r));
        if (c > n)
            throw ParseError(ParseError::Kind::count_exceeds_total, r,
                             "c exceeds n at row " + std::to_string(r));
        parsed.push_back({AggregatedCounts{AgeInterval{lo, hi}, n, c}, r});
    }

    std::stable_sort(parsed.begin(), parsed.end(), [](const Parsed& a, const Parsed& b) {
        return by_age(a.counts, b.counts);
    });
    for (std::size_t k = 1; k < parsed.size(); ++k) {
        if (parsed[k - 1].counts.interval.hi > parsed[k].counts.interval.lo) {
            const auto r = std::max(parsed[k - 1].row, parsed[k].row);
            throw ParseError(ParseError::Kind::overlapping_intervals, r,
                             "overlapping age intervals at row " + std::to_string(r));
        }
    }

    std::vector<AggregatedCounts> groups;
    groups.reserve(parsed.size());
    for (auto& p : parsed) groups.push_back(p.counts);
    return CurrentStatusTable(std::move(groups), period);
}

CurrentStatusTable parse_current_status_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_current_status_csv(in);
}

CurrentStatusTable read_current_status_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_current_status_csv(in);
}

std::string to_csv(const CurrentStatusTable& table) {
    std::ostringstream out;
    out.precision(17);
    if (table.period()) out << "# period=" << *table.period() << '\n';
    out << "age_lo,age_hi,n,c\n";
    for (const auto& g : table.groups())
        out << g.interval.lo << ',' << g.interval.hi << ',' << g.n << ',' << g.c << '\n';
    return out.str();
}

double empirical_prevalence(const AggregatedCounts& group) {
    if (group.n == 0) throw DomainError("prevalence undefined for an empty group (n = 0)");
    return static_cast<double>(group.c) / static_cast<double>(group.n);
}

} // namespace idmfit
