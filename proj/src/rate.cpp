#include "idmfit/rate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "idmfit/data_model.hpp"

namespace idmfit {

PiecewiseConstantRate::PiecewiseConstantRate(std::vector<double> breakpoints,
                                             std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.empty() || breakpoints_.size() != values_.size())
        throw std::invalid_argument("piecewise rate needs one value per breakpoint");
    for (std::size_t j = 0; j < values_.size(); ++j) {
        if (!std::isfinite(values_[j]) || values_[j] < 0.0)
            throw std::invalid_argument("rate values must be finite and non-negative");
        if (!std::isfinite(breakpoints_[j]) || (j > 0 && !(breakpoints_[j - 1] < breakpoints_[j])))
            throw std::invalid_argument("rate breakpoints must be finite and strictly ascending");
    }
}

PiecewiseConstantRate PiecewiseConstantRate::on_intervals(std::span<const AgeInterval> grid,
                                                          std::vector<double> values) {
    std::vector<double> edges;
    edges.reserve(grid.size());
    for (const auto& iv : grid) edges.push_back(iv.lo);
    return PiecewiseConstantRate(std::move(edges), std::move(values));
}

PiecewiseConstantRate PiecewiseConstantRate::constant(double value) {
    return PiecewiseConstantRate({0.0}, {value});
}

double PiecewiseConstantRate::operator()(double age) const {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), age);
    const auto j = it == breakpoints_.begin() ? 0 : (it - breakpoints_.begin()) - 1;
    return values_[static_cast<std::size_t>(j)];
}

double PiecewiseConstantRate::left_limit(double age) const {
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), age);
    const auto j = it == breakpoints_.begin() ? 0 : (it - breakpoints_.begin()) - 1;
    return values_[static_cast<std::size_t>(j)];
}

AgeRate::AgeRate(Fn fn, std::vector<double> breakpoints)
    : fn_(std::move(fn)), breakpoints_(std::move(breakpoints)) {
    if (!fn_) throw std::invalid_argument("empty rate function");
    if (breakpoints_.empty()) {
        left_ = fn_;
    } else {
        // Generic jumps: approach from one ulp below.
        left_ = [f = fn_](double a) { return f(std::nextafter(a, -INFINITY)); };
    }
}

AgeRate::AgeRate(const PiecewiseConstantRate& rate)
    : fn_([rate](double a) { return rate(a); }),
      left_([rate](double a) { return rate.left_limit(a); }),
      breakpoints_(rate.breakpoints()) {}

AgeRate AgeRate::constant(double value) {
    return AgeRate([value](double) { return value; });
}

} // namespace idmfit
