#pragma once

#include <functional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

namespace idmfit {

struct AgeInterval;

/// Age-indexed hazard as a right-continuous step function. Value j applies
/// on [breakpoints[j], breakpoints[j+1]); the first value extends below the
/// first breakpoint and the last value above the last one.
class PiecewiseConstantRate {
public:
    PiecewiseConstantRate(std::vector<double> breakpoints, std::vector<double> values);

    /// Step function on the lower edges of an interval grid.
    static PiecewiseConstantRate on_intervals(std::span<const AgeInterval> grid,
                                              std::vector<double> values);
    static PiecewiseConstantRate constant(double value);

    double operator()(double age) const;
    /// Limit from the left; differs from operator() only at a breakpoint.
    double left_limit(double age) const;

    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> breakpoints_;
    std::vector<double> values_;
};

/// A rate as a function of age, plus the ages where it may jump. The
/// integrators align their grids to those ages.
class AgeRate {
public:
    using Fn = std::function<double(double)>;

    AgeRate(Fn fn, std::vector<double> breakpoints = {});
    AgeRate(const PiecewiseConstantRate& rate); // NOLINT(google-explicit-constructor)

    template <class F>
        requires(std::is_invocable_r_v<double, const F&, double> &&
                 !std::is_same_v<std::remove_cvref_t<F>, AgeRate> &&
                 !std::is_same_v<std::remove_cvref_t<F>, PiecewiseConstantRate> &&
                 !std::is_same_v<std::remove_cvref_t<F>, Fn>)
    AgeRate(F f) // NOLINT(google-explicit-constructor)
        : AgeRate(Fn(std::move(f))) {}

    static AgeRate constant(double value);
    static AgeRate zero() { return constant(0.0); }

    double operator()(double age) const { return fn_(age); }
    double left_limit(double age) const { return left_(age); }

    /// Value seen by an integrator working on a segment ending at `segment_end`:
    /// the right endpoint takes the left limit.
    double on_segment(double age, double segment_end) const {
        return age < segment_end ? fn_(age) : left_(segment_end);
    }

    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }

private:
    Fn fn_;
    Fn left_;
    std::vector<double> breakpoints_;
};

} // namespace idmfit
