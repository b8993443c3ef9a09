#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace idmfit {

/// Half-open age range [lo, hi) in years. The label "20-24" maps to [20, 25).
struct AgeInterval {
    double lo = 0.0;
    double hi = 0.0;

    AgeInterval() = default;
    AgeInterval(double lo, double hi);

    double midpoint() const noexcept { return (lo + hi) / 2.0; }
    double width() const noexcept { return hi - lo; }

    friend bool operator==(const AgeInterval&, const AgeInterval&) = default;
};

/// Counts for one age group: n subjects observed, c of them with the condition.
struct AggregatedCounts {
    AgeInterval interval;
    std::int64_t n = 0;
    std::int64_t c = 0;

    AggregatedCounts() = default;
    AggregatedCounts(AgeInterval interval, std::int64_t n, std::int64_t c);

    friend bool operator==(const AggregatedCounts&, const AggregatedCounts&) = default;
};

/// Aggregated current-status data for one calendar period. Groups are stored
/// sorted by age, so tables built from permuted rows compare equal.
class CurrentStatusTable {
public:
    explicit CurrentStatusTable(std::vector<AggregatedCounts> groups,
                                std::optional<double> period = std::nullopt);

    const std::vector<AggregatedCounts>& groups() const noexcept { return groups_; }
    std::optional<double> period() const noexcept { return period_; }
    std::size_t size() const noexcept { return groups_.size(); }

    std::vector<double> midpoints() const;
    std::vector<AgeInterval> intervals() const;
    std::int64_t total_n() const;
    std::int64_t total_c() const;

    friend bool operator==(const CurrentStatusTable&, const CurrentStatusTable&) = default;

private:
    std::vector<AggregatedCounts> groups_;
    std::optional<double> period_;
};

/// Reads `age_lo,age_hi,n,c` rows. Lines starting with '#' are comments;
/// `# period=<year>` sets the calendar period. Throws ParseError.
CurrentStatusTable parse_current_status_csv(std::istream& in);
CurrentStatusTable parse_current_status_csv(std::string_view text);
CurrentStatusTable read_current_status_csv(const std::string& path);

std::string to_csv(const CurrentStatusTable& table);

/// c / n. Throws DomainError when n == 0.
double empirical_prevalence(const AggregatedCounts& group);

} // namespace idmfit
