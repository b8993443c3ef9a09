#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idmfit/data_model.hpp"
#include "idmfit/idm_core.hpp"
#include "idmfit/rate.hpp"

namespace idmfit {

/// Forward illness-death model run on an age-group grid.
struct Scenario {
    GompertzIncidence incidence;
    PiecewiseConstantRate m0 = PiecewiseConstantRate::constant(0.0);
    PiecewiseConstantRate m1 = PiecewiseConstantRate::constant(0.0);
    InitialCondition ic;
    std::vector<AgeInterval> groups;
    std::vector<std::int64_t> group_sizes;
    std::uint64_t seed = 0;
    std::optional<double> period;
    SolverOptions solver;

    /// Group midpoints, where prevalence is evaluated.
    std::vector<double> age_grid() const;
    /// Throws std::invalid_argument when sizes/grid are inconsistent.
    void validate() const;
};

/// Scenario as JSON:
/// {"incidence":{"beta0":..,"beta1":..},"a0":20,"p0":0,
///  "groups":[[20,25],...],"group_sizes":[...],"seed":1,
///  "m0":{"breakpoints":[...],"values":[...]},"m1":{...},"period":2009}
/// m0, m1 and period are optional.
Scenario scenario_from_json(const std::string& text);
std::string to_json(const Scenario& scenario);

/// Prevalence at the age grid by forward ODE integration.
std::vector<double> exact_prevalence(const Scenario& scenario);
std::vector<double> exact_prevalence(const Scenario& scenario, std::span<const double> ages);

/// Counter-based generator: the uniform for (seed, stream, index) does not
/// depend on any other draw.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}
    /// Uniform on (0, 1).
    double uniform(std::uint64_t stream, std::uint64_t index) const;

private:
    std::uint64_t seed_;
};

/// Binomial(n, p) by inversion of the CDF at u.
std::int64_t binomial_inverse(std::int64_t n, double p, double u);

/// c_k ~ Binomial(n_k, p_k), one counter stream per group.
CurrentStatusTable sample_current_status(std::span<const double> prevalence,
                                         std::span<const AgeInterval> groups,
                                         std::span<const std::int64_t> sizes, std::uint64_t seed,
                                         std::optional<double> period = std::nullopt);

/// Noise-free table with c_k = round(n_k p_k).
CurrentStatusTable expected_current_status(std::span<const double> prevalence,
                                           std::span<const AgeInterval> groups,
                                           std::span<const std::int64_t> sizes,
                                           std::optional<double> period = std::nullopt);

/// exact_prevalence followed by sample_current_status with the scenario seed.
CurrentStatusTable simulate(const Scenario& scenario);

} // namespace idmfit
