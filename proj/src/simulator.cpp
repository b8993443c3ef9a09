#include "idmfit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace idmfit {

std::vector<double> Scenario::age_grid() const {
    std::vector<double> ages;
    ages.reserve(groups.size());
    for (const auto& g : groups) ages.push_back(g.midpoint());
    return ages;
}

void Scenario::validate() const {
    if (groups.empty()) throw std::invalid_argument("scenario has no age groups");
    if (groups.size() != group_sizes.size())
        throw std::invalid_argument("scenario needs one group size per age group");
    for (auto n : group_sizes)
        if (n <= 0) throw std::invalid_argument("scenario group sizes must be positive");
    for (std::size_t k = 0; k < groups.size(); ++k) {
        if (k > 0 && groups[k - 1].hi > groups[k].lo)
            throw std::invalid_argument("scenario age groups must be ascending and non-overlapping");
        if (groups[k].midpoint() < ic.a0)
            throw std::invalid_argument("scenario age grid starts before the initial age");
    }
}

namespace {

using nlohmann::json;

PiecewiseConstantRate rate_from_json(const json& j) {
    return PiecewiseConstantRate(j.at("breakpoints").get<std::vector<double>>(),
                                 j.at("values").get<std::vector<double>>());
}

json rate_to_json(const PiecewiseConstantRate& r) {
    return {{"breakpoints", r.breakpoints()}, {"values", r.values()}};
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

Scenario scenario_from_json(const std::string& text) {
    const auto j = json::parse(text);
    Scenario s;
    s.incidence = {j.at("incidence").at("beta0").get<double>(),
                   j.at("incidence").at("beta1").get<double>()};
    s.ic = InitialCondition(j.value("a0", 20.0), j.value("p0", 0.0));
    for (const auto& g : j.at("groups")) s.groups.emplace_back(g.at(0).get<double>(), g.at(1).get<double>());
    s.group_sizes = j.at("group_sizes").get<std::vector<std::int64_t>>();
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("m0")) s.m0 = rate_from_json(j.at("m0"));
    if (j.contains("m1")) s.m1 = rate_from_json(j.at("m1"));
    if (j.contains("period") && !j.at("period").is_null()) s.period = j.at("period").get<double>();
    if (j.contains("step")) s.solver.step = j.at("step").get<double>();
    s.validate();
    return s;
}

std::string to_json(const Scenario& s) {
    json groups = json::array();
    for (const auto& g : s.groups) groups.push_back({g.lo, g.hi});
    json j{{"incidence", {{"beta0", s.incidence.beta0}, {"beta1", s.incidence.beta1}}},
           {"a0", s.ic.a0},
           {"p0", s.ic.p0},
           {"groups", groups},
           {"group_sizes", s.group_sizes},
           {"seed", s.seed},
           {"m0", rate_to_json(s.m0)},
           {"m1", rate_to_json(s.m1)},
           {"step", s.solver.step}};
    if (s.period) j["period"] = *s.period;
    return j.dump(2);
}

std::vector<double> exact_prevalence(const Scenario& scenario, std::span<const double> ages) {
    return prevalence_ode(scenario.incidence, scenario.m0, scenario.m1, scenario.ic, ages,
                          scenario.solver);
}

std::vector<double> exact_prevalence(const Scenario& scenario) {
    scenario.validate();
    const auto ages = scenario.age_grid();
    return exact_prevalence(scenario, ages);
}

double CounterRng::uniform(std::uint64_t stream, std::uint64_t index) const {
    const std::uint64_t z =
        mix64(mix64(seed_ ^ 0x243F6A8885A308D3ULL) ^ mix64(stream * 0xD1B54A32D192ED03ULL + index));
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

std::int64_t binomial_inverse(std::int64_t n, double p, double u) {
    if (n < 0) throw std::invalid_argument("binomial size must be non-negative");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial probability outside [0, 1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;

    // Unnormalized pmf around the mode; mass beyond 40 sd is below double resolution.
    const auto mode = std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor((n + 1) * p)));
    const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
    const auto half_width = static_cast<std::int64_t>(std::ceil(40.0 * sd + 40.0));
    const auto lo = std::max<std::int64_t>(0, mode - half_width);
    const auto hi = std::min<std::int64_t>(n, mode + half_width);
    const double odds = p / (1.0 - p);

    std::vector<double> pmf(static_cast<std::size_t>(hi - lo + 1));
    pmf[static_cast<std::size_t>(mode - lo)] = 1.0;
    for (auto k = mode; k < hi; ++k) {
        const auto idx = static_cast<std::size_t>(k - lo);
        pmf[idx + 1] = pmf[idx] * static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
    }
    for (auto k = mode; k > lo; --k) {
        const auto idx = static_cast<std::size_t>(k - lo);
        pmf[idx - 1] = pmf[idx] * static_cast<double>(k) / static_cast<double>(n - k + 1) / odds;
    }

    double total = 0.0;
    for (double v : pmf) total += v;
    const double target = u * total;
    double cumulative = 0.0;
    for (std::size_t idx = 0; idx < pmf.size(); ++idx) {
        cumulative += pmf[idx];
        if (cumulative >= target) return lo + static_cast<std::int64_t>(idx);
    }
    return hi;
}

namespace {

void check_inputs(std::span<const double> prevalence, std::span<const AgeInterval> groups,
                  std::span<const std::int64_t> sizes) {
    if (prevalence.size() != groups.size() || sizes.size() != groups.size())
        throw std::invalid_argument("prevalence, groups and sizes must have equal length");
    for (double p : prevalence)
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("prevalence outside [0, 1]");
    for (auto n : sizes)
        if (n < 0) throw std::invalid_argument("group sizes must be non-negative");
}

} // namespace

CurrentStatusTable sample_current_status(std::span<const double> prevalence,
                                         std::span<const AgeInterval> groups,
                                         std::span<const std::int64_t> sizes, std::uint64_t seed,
                                         std::optional<double> period) {
    check_inputs(prevalence, groups, sizes);
    const CounterRng rng(seed);
    std::vector<AggregatedCounts> rows;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const auto c = binomial_inverse(sizes[k], prevalence[k], rng.uniform(k, 0));
        rows.emplace_back(groups[k], sizes[k], c);
    }
    return CurrentStatusTable(std::move(rows), period);
}

CurrentStatusTable expected_current_status(std::span<const double> prevalence,
                                           std::span<const AgeInterval> groups,
                                           std::span<const std::int64_t> sizes,
                                           std::optional<double> period) {
    check_inputs(prevalence, groups, sizes);
    std::vector<AggregatedCounts> rows;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const auto c = static_cast<std::int64_t>(std::llround(static_cast<double>(sizes[k]) * prevalence[k]));
        rows.emplace_back(groups[k], sizes[k], std::clamp<std::int64_t>(c, 0, sizes[k]));
    }
    return CurrentStatusTable(std::move(rows), period);
}

CurrentStatusTable simulate(const Scenario& scenario) {
    const auto p = exact_prevalence(scenario);
    return sample_current_status(p, scenario.groups, scenario.group_sizes, scenario.seed,
                                 scenario.period);
}

} // namespace idmfit
