#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "idmfit/data_model.hpp"
#include "idmfit/diagnostics.hpp"
#include "idmfit/rate.hpp"

namespace idmfit {

struct LifeTableEntry {
    AgeInterval interval;
    double value = 0.0; // survivors or person-years; only ratios are used
};

/// One life-table column on an ascending, non-overlapping grid of strictly
/// positive values.
class LifeTableColumn {
public:
    explicit LifeTableColumn(std::vector<LifeTableEntry> entries);

    const std::vector<LifeTableEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::vector<AgeInterval> intervals() const;

private:
    std::vector<LifeTableEntry> entries_;
};

/// General-population and diseased columns on an identical grid.
struct LifeTable {
    LifeTableColumn general;
    LifeTableColumn diseased;

    /// Throws ParseError(grid_mismatch) if the two grids differ.
    LifeTable(LifeTableColumn general, LifeTableColumn diseased);
};

/// Reads `age_lo,age_hi,general,diseased`. Throws ParseError.
LifeTable parse_lifetable_csv(std::istream& in);
LifeTable parse_lifetable_csv(std::string_view text);
LifeTable read_lifetable_csv(const std::string& path);

/// Constant-hazard conversion of a column on equal-width intervals of width w:
/// the rate over interval k is ln(value_k / value_{k+1}) / w. The last
/// interval has no successor and gets the previous rate times the ratio of
/// the last two computed rates (log-linear extrapolation). Negative rates
/// from a non-monotone column are clamped to 0; clamping and extrapolation
/// are reported on `diag`.
PiecewiseConstantRate lifetable_to_rate(const LifeTableColumn& column,
                                        Diagnostics* diag = nullptr);

} // namespace idmfit
