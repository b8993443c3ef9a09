#include "idmfit/idm_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace idmfit {

double expit(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("logit requires 0 < p < 1, got " + std::to_string(p));
    return std::log(p / (1.0 - p));
}

double GompertzIncidence::operator()(double age) const { return std::exp(beta0 + beta1 * age); }

double GompertzIncidence::cumulative(double from, double to) const {
    // (exp(b0 + b1 to) - exp(b0 + b1 from)) / b1, written to stay exact as b1 -> 0.
    const double span = to - from;
    if (beta1 == 0.0) return std::exp(beta0) * span;
    return std::exp(beta0 + beta1 * from) * std::expm1(beta1 * span) / beta1;
}

InitialCondition::InitialCondition(double a0_, double p0_) : a0(a0_), p0(p0_) {
    if (!std::isfinite(a0)) throw DomainError("initial age must be finite");
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw DomainError("initial prevalence must lie in [0, 1]");
}

double settle_prevalence(double p, double age, Diagnostics* diag) {
    const double clamped = std::clamp(p, 0.0, 1.0);
    if (clamped == p) return p;
    if (std::abs(p - clamped) < 1e-12) return clamped;
    warn(diag, "prevalence.range",
         "prevalence " + std::to_string(p) + " outside [0, 1] at age " + std::to_string(age));
    return p;
}

double prevalence_closed_form(const GompertzIncidence& incidence, const InitialCondition& ic,
                              double age) {
    if (age < ic.a0)
        throw DomainError("age " + std::to_string(age) + " precedes initial age " +
                          std::to_string(ic.a0));
    const double hazard = incidence.cumulative(ic.a0, age);
    return settle_prevalence(ic.p0 - (1.0 - ic.p0) * std::expm1(-hazard), age, nullptr);
}

namespace {

struct Segment {
    double lo;
    double hi;
    std::size_t panels;
};

/// Splits [from, to] at every rate breakpoint and requested age, then cuts each
/// piece into equal panels no wider than `step`.
std::vector<Segment> build_grid(double from, double to, std::span<const AgeRate* const> rates,
                                std::span<const double> ages, double step) {
    std::vector<double> cuts{from, to};
    for (const auto* r : rates)
        for (double b : r->breakpoints())
            if (b > from && b < to) cuts.push_back(b);
    for (double a : ages)
        if (a > from && a < to) cuts.push_back(a);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Segment> grid;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
        const double len = cuts[j + 1] - cuts[j];
        const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(len / step - 1e-9)));
        grid.push_back({cuts[j], cuts[j + 1], panels});
    }
    return grid;
}

void check_options(const SolverOptions& options) {
    if (!(options.step > 0.0) || !std::isfinite(options.step))
        throw DomainError("solver step must be positive");
}

void check_ages(std::span<const double> ages, double a0) {
    for (double a : ages)
        if (!(a >= a0))
            throw DomainError("age " + std::to_string(a) + " precedes initial age " +
                              std::to_string(a0));
}

/// Records values at the requested ages while sweeping a grid. Ages equal to a0
/// are filled up front.
class AgeRecorder {
public:
    explicit AgeRecorder(std::span<const double> ages) : ages_(ages), values_(ages.size()) {
        order_.resize(ages.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::sort(order_.begin(), order_.end(),
                  [&](std::size_t x, std::size_t y) { return ages_[x] < ages_[y]; });
    }

    void record(double age, double value) {
        while (next_ < order_.size() && ages_[order_[next_]] <= age) {
            values_[order_[next_]] = value;
            ++next_;
        }
    }

    std::vector<double> take() { return std::move(values_); }

private:
    std::span<const double> ages_;
    std::vector<double> values_;
    std::vector<std::size_t> order_;
    std::size_t next_ = 0;
};

double simpson(double h, double f0, double fm, double f1) { return h / 6.0 * (f0 + 4.0 * fm + f1); }

struct QuadratureSweep {
    std::vector<double> G;          // at requested ages
    std::vector<double> prevalence; // at requested ages
};

QuadratureSweep sweep_differential(const AgeRate& incidence, const AgeRate& m1, const AgeRate& m,
                                   const InitialCondition& ic, std::span<const double> ages,
                                   double step) {
    const double end = ages.empty() ? ic.a0 : *std::max_element(ages.begin(), ages.end());
    const AgeRate* rates[] = {&incidence, &m1, &m};
    const auto grid = build_grid(ic.a0, end, rates, ages, step);

    AgeRecorder g_rec(ages);
    AgeRecorder p_rec(ages);
    double G = 0.0;
    double I = 0.0; // integral of i(t) exp(G(t))
    g_rec.record(ic.a0, 0.0);
    p_rec.record(ic.a0, ic.p0);

    for (const auto& seg : grid) {
        const double e = seg.hi;
        const double h = (seg.hi - seg.lo) / static_cast<double>(seg.panels);
        auto g = [&](double t) {
            return m1.on_segment(t, e) - m.on_segment(t, e) + incidence.on_segment(t, e);
        };
        double x = seg.lo;
        double g0 = g(x);
        double i0 = incidence.on_segment(x, e);
        for (std::size_t j = 0; j < seg.panels; ++j) {
            const double x1 = j + 1 == seg.panels ? e : seg.lo + static_cast<double>(j + 1) * h;
            const double hp = x1 - x;
            const double xm = x + hp / 2.0;
            const double gq1 = g(x + hp / 4.0);
            const double gm = g(xm);
            const double gq3 = g(x + 3.0 * hp / 4.0);
            const double g1 = g(x1);
            const double G_mid = G + simpson(hp / 2.0, g0, gq1, gm);
            const double G_end = G_mid + simpson(hp / 2.0, gm, gq3, g1);
            const double i_mid = incidence.on_segment(xm, e);
            const double i1 = incidence.on_segment(x1, e);
            I += simpson(hp, i0 * std::exp(G), i_mid * std::exp(G_mid), i1 * std::exp(G_end));
            G = G_end;
            x = x1;
            g0 = g1;
            i0 = i1;
        }
        g_rec.record(e, G);
        p_rec.record(e, std::exp(-G) * (ic.p0 + I));
    }
    return {g_rec.take(), p_rec.take()};
}

std::vector<double> sweep_ode(const AgeRate& incidence, const AgeRate& m0, const AgeRate& m1,
                              const InitialCondition& ic, std::span<const double> ages,
                              double step) {
    const double end = ages.empty() ? ic.a0 : *std::max_element(ages.begin(), ages.end());
    const AgeRate* rates[] = {&incidence, &m0, &m1};
    const auto grid = build_grid(ic.a0, end, rates, ages, step);

    AgeRecorder rec(ages);
    double p = ic.p0;
    rec.record(ic.a0, p);
    for (const auto& seg : grid) {
        const double e = seg.hi;
        const double h = (seg.hi - seg.lo) / static_cast<double>(seg.panels);
        auto rhs = [&](double t, double y) {
            const double excess = m1.on_segment(t, e) - m0.on_segment(t, e);
            return (1.0 - y) * (incidence.on_segment(t, e) - y * excess);
        };
        double x = seg.lo;
        for (std::size_t j = 0; j < seg.panels; ++j) {
            const double x1 = j + 1 == seg.panels ? e : seg.lo + static_cast<double>(j + 1) * h;
            const double hp = x1 - x;
            const double k1 = rhs(x, p);
            const double k2 = rhs(x + hp / 2.0, p + hp / 2.0 * k1);
            const double k3 = rhs(x + hp / 2.0, p + hp / 2.0 * k2);
            const double k4 = rhs(x1, p + hp * k3);
            p += hp / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            x = x1;
        }
        rec.record(e, p);
    }
    return rec.take();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

void require_converged(double disagreement, const SolverOptions& options, const char* what) {
    if (!(disagreement <= options.tolerance))
        throw NumericalError(std::string(what) + ": step-halving disagreement " +
                             std::to_string(disagreement) + " exceeds tolerance " +
                             std::to_string(options.tolerance));
}

} // namespace

double integral_G(const AgeRate& incidence, const AgeRate& m1, const AgeRate& m, double a0,
                  double a, const SolverOptions& options) {
    check_options(options);
    const InitialCondition ic{a0, 0.0};
    const double ages[] = {a};
    check_ages(ages, a0);
    const auto coarse = sweep_differential(incidence, m1, m, ic, ages, options.step);
    const auto fine = sweep_differential(incidence, m1, m, ic, ages, options.step / 2.0);
    require_converged(max_abs_diff(coarse.G, fine.G), options, "integral_G");
    return fine.G.front();
}

std::vector<double> prevalence_differential(const AgeRate& incidence, const AgeRate& m1,
                                            const AgeRate& m, const InitialCondition& ic,
                                            std::span<const double> ages,
                                            const SolverOptions& options, Diagnostics* diag) {
    check_options(options);
    check_ages(ages, ic.a0);
    const auto coarse = sweep_differential(incidence, m1, m, ic, ages, options.step);
    auto fine = sweep_differential(incidence, m1, m, ic, ages, options.step / 2.0);
    require_converged(max_abs_diff(coarse.prevalence, fine.prevalence), options,
                      "prevalence quadrature");
    for (std::size_t k = 0; k < ages.size(); ++k)
        fine.prevalence[k] = settle_prevalence(fine.prevalence[k], ages[k], diag);
    return std::move(fine.prevalence);
}

double prevalence_differential(const AgeRate& incidence, const AgeRate& m1, const AgeRate& m,
                               const InitialCondition& ic, double age,
                               const SolverOptions& options, Diagnostics* diag) {
    const double ages[] = {age};
    return prevalence_differential(incidence, m1, m, ic, ages, options, diag).front();
}

std::vector<double> prevalence_ode(const AgeRate& incidence, const AgeRate& m0,
                                   const AgeRate& m1, const InitialCondition& ic,
                                   std::span<const double> ages, const SolverOptions& options,
                                   Diagnostics* diag) {
    check_options(options);
    check_ages(ages, ic.a0);
    const auto coarse = sweep_ode(incidence, m0, m1, ic, ages, options.step);
    auto fine = sweep_ode(incidence, m0, m1, ic, ages, options.step / 2.0);
    require_converged(max_abs_diff(coarse, fine), options, "prevalence ODE");
    for (std::size_t k = 0; k < ages.size(); ++k)
        fine[k] = settle_prevalence(fine[k], ages[k], diag);
    return fine;
}

double prevalence_ode(const AgeRate& incidence, const AgeRate& m0, const AgeRate& m1,
                      const InitialCondition& ic, double age, const SolverOptions& options,
                      Diagnostics* diag) {
    const double ages[] = {age};
    return prevalence_ode(incidence, m0, m1, ic, ages, options, diag).front();
}

} // namespace idmfit
