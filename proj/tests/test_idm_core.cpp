#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "idmfit/idm_core.hpp"
#include "idmfit/lifetable.hpp"
#include "support.hpp"

using namespace idmfit;

namespace {

const GompertzIncidence nondiff_fit{-7.8237, 0.07559};
const GompertzIncidence diff_fit{-8.4706, 0.10107};

struct Rates {
    PiecewiseConstantRate m;
    PiecewiseConstantRate m1;
};

Rates england_wales_rates() {
    const auto t = test::england_wales();
    return {lifetable_to_rate(t.general), lifetable_to_rate(t.diseased)};
}

// 1 - (1 - p0) exp(-integral of i), integral by adaptive Gauss-Kronrod.
double quadrature_prevalence(const GompertzIncidence& inc, double a0, double p0, double a) {
    const double H = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double t) { return inc(t); }, a0, a, 15, 1e-15);
    return 1.0 - (1.0 - p0) * std::exp(-H);
}

// dp/da = i - p (i + m1 - m), integrated by adaptive Dormand-Prince between
// rate breakpoints so the step control never straddles a jump.
double dopri_prevalence(const GompertzIncidence& inc, const PiecewiseConstantRate& m1,
                        const PiecewiseConstantRate& m, double a0, double p0, double a) {
    namespace ode = boost::numeric::odeint;
    std::vector<double> cuts{a0};
    for (double b : m1.breakpoints())
        if (b > a0 && b < a) cuts.push_back(b);
    for (double b : m.breakpoints())
        if (b > a0 && b < a) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    cuts.push_back(a);

    double p = p0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double lo = cuts[s], hi = cuts[s + 1];
        const double excess = m1(lo) - m(lo);
        auto rhs = [&](const double& x, double& dxdt, double t) {
            dxdt = inc(t) - x * (inc(t) + excess);
        };
        ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<double>>(1e-14, 1e-14),
                                rhs, p, lo, hi, 0.01);
    }
    return p;
}

} // namespace

TEST_CASE("expit and logit") {
    CHECK(expit(0.0) == 0.5);
    CHECK(logit(0.5) == 0.0);
    CHECK(expit(logit(0.3)) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS(logit(0.0), DomainError);
    CHECK_THROWS_AS(logit(1.0), DomainError);
    CHECK(expit(-800.0) >= 0.0);
    CHECK(expit(800.0) == 1.0);
    double last = 0.0;
    for (double x = -30; x <= 30; x += 0.5) {
        CHECK(expit(x) > last);
        last = expit(x);
    }
}

TEST_CASE("initial condition validation") {
    CHECK_THROWS_AS(InitialCondition(20, -0.1), DomainError);
    CHECK_THROWS_AS(InitialCondition(20, 1.1), DomainError);
    CHECK_NOTHROW(InitialCondition(20, 1.0));
}

TEST_CASE("closed form") {
    const InitialCondition ic{20, 0.1};
    CHECK(prevalence_closed_form(nondiff_fit, ic, 20.0) == 0.1);
    CHECK_THROWS_AS(prevalence_closed_form(nondiff_fit, ic, 19.0), DomainError);

    SUBCASE("constant incidence limit") {
        const GompertzIncidence flat{std::log(0.02), 0.0};
        for (double a : {20.0, 30.0, 62.5})
            CHECK(prevalence_closed_form(flat, ic, a) ==
                  doctest::Approx(1.0 - 0.9 * std::exp(-0.02 * (a - 20.0))).epsilon(1e-14));
        // continuity through beta1 = 0
        const GompertzIncidence tiny{std::log(0.02), 1e-12};
        CHECK(prevalence_closed_form(tiny, ic, 50.0) ==
              doctest::Approx(prevalence_closed_form(flat, ic, 50.0)).epsilon(1e-10));
    }

    SUBCASE("adaptive quadrature oracle") {
        const InitialCondition zero{20, 0};
        CHECK(std::abs(prevalence_closed_form(nondiff_fit, zero, 62.5) -
                       quadrature_prevalence(nondiff_fit, 20, 0, 62.5)) < 1e-10);
        for (double a = 20.0; a <= 100.0; a += 2.5)
            CHECK(std::abs(prevalence_closed_form(diff_fit, ic, a) -
                           quadrature_prevalence(diff_fit, 20, 0.1, a)) < 1e-10);
    }
}

TEST_CASE("integral of the exponent") {
    const auto zero = AgeRate::zero();
    const auto m = PiecewiseConstantRate::constant(0.01);
    CHECK(integral_G(zero, m, m, 20, 57.3) == 0.0);
    CHECK(integral_G(AgeRate::constant(0.25), zero, zero, 20, 57.3) ==
          doctest::Approx(0.25 * 37.3).epsilon(1e-14));
    CHECK(integral_G(AgeRate::constant(0.25), zero, zero, 20, 20) == 0.0);

    const auto r = england_wales_rates();
    const double coarse = integral_G(diff_fit, r.m1, r.m, 20, 62.5, {0.1, 1e-9});
    const double fine = integral_G(diff_fit, r.m1, r.m, 20, 62.5, {0.05, 1e-9});
    CHECK(std::abs(coarse - fine) < 1e-9);

    // against the exact integral of piecewise rates plus Gompertz
    double exact = diff_fit.cumulative(20, 62.5);
    for (double lo = 20; lo < 62.5; lo += 5) {
        const double hi = std::min(lo + 5.0, 62.5);
        exact += (r.m1(lo) - r.m(lo)) * (hi - lo);
    }
    CHECK(std::abs(coarse - exact) < 1e-10);
}

TEST_CASE("differential prevalence") {
    const auto r = england_wales_rates();
    const InitialCondition ic{20, 0};
    CHECK(prevalence_differential(diff_fit, r.m1, r.m, InitialCondition(20, 0.2), 20.0) == 0.2);

    SUBCASE("reduces to the closed form when m1 equals m") {
        for (double a = 22.5; a <= 62.5; a += 5.0)
            CHECK(std::abs(prevalence_differential(nondiff_fit, r.m, r.m, ic, a) -
                           prevalence_closed_form(nondiff_fit, ic, a)) < 1e-8);
    }

    SUBCASE("adaptive ODE oracle") {
        const double ours = prevalence_differential(diff_fit, r.m1, r.m, ic, 62.5);
        const double oracle = dopri_prevalence(diff_fit, r.m1, r.m, 20, 0, 62.5);
        CHECK(std::abs(ours - oracle) < 1e-6);
        for (double a : {21.0, 25.0, 33.3, 47.5, 60.0}) {
            CHECK(std::abs(prevalence_differential(diff_fit, r.m1, r.m, ic, a) -
                           dopri_prevalence(diff_fit, r.m1, r.m, 20, 0, a)) < 1e-6);
        }
    }

    SUBCASE("vector overload agrees with scalar calls") {
        const std::vector<double> ages{62.5, 22.5, 40.0, 22.5};
        const auto many = prevalence_differential(diff_fit, r.m1, r.m, ic, ages);
        REQUIRE(many.size() == ages.size());
        for (std::size_t k = 0; k < ages.size(); ++k)
            CHECK(many[k] == doctest::Approx(prevalence_differential(diff_fit, r.m1, r.m, ic, ages[k]))
                                 .epsilon(1e-12));
    }

    SUBCASE("unresolvable tolerance is a numerical error") {
        CHECK_THROWS_AS(prevalence_differential(diff_fit, r.m1, r.m, ic, 62.5, {5.0, 1e-15}),
                        NumericalError);
    }
}

TEST_CASE("generic ODE") {
    const InitialCondition ic{20, 0};
    const auto m = PiecewiseConstantRate::constant(0.02);

    CHECK(prevalence_ode(AgeRate::zero(), m, PiecewiseConstantRate::constant(0.07), ic, 80.0) == 0.0);
    for (double a : {25.0, 40.0, 90.0})
        CHECK(std::abs(prevalence_ode(AgeRate::constant(0.03), m, m, ic, a) -
                       (1.0 - std::exp(-0.03 * (a - 20.0)))) < 1e-9);
    for (double a = 22.5; a <= 62.5; a += 5.0)
        CHECK(std::abs(prevalence_ode(nondiff_fit, m, m, ic, a) - prevalence_closed_form(nondiff_fit, ic, a)) <
              1e-8);
    CHECK_THROWS_AS(prevalence_ode(nondiff_fit, m, m, ic, 19.0), DomainError);
}

TEST_CASE("property: agreement chain and invariants on random inputs") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> b0(-10.0, -6.0), b1(0.0, 0.08), p0(0.0, 0.3),
        rate(0.0, 0.05);
    for (int trial = 0; trial < 30; ++trial) {
        const GompertzIncidence inc{b0(gen), b1(gen)};
        const InitialCondition ic{20, p0(gen)};
        const auto m = PiecewiseConstantRate({20, 35, 50}, {rate(gen), rate(gen), rate(gen)});
        const auto m1 = PiecewiseConstantRate({20, 35, 50}, {rate(gen), rate(gen), rate(gen)});

        std::vector<double> ages;
        for (double a = 20.0; a <= 65.0; a += 1.5) ages.push_back(a);
        const auto quad = prevalence_differential(inc, m, m, ic, ages);
        const auto ode = prevalence_ode(inc, m, m, ic, ages);
        double last = -1.0;
        for (std::size_t k = 0; k < ages.size(); ++k) {
            const double closed = prevalence_closed_form(inc, ic, ages[k]);
            CHECK(std::abs(closed - quad[k]) < 1e-8);
            CHECK(std::abs(closed - ode[k]) < 1e-8);
            CHECK(std::abs(quad[k] - ode[k]) < 1e-8);
            CHECK(quad[k] >= last); // non-differential: non-decreasing
            last = quad[k];
        }

        Diagnostics diag;
        const auto diff = prevalence_differential(inc, m1, m, ic, ages, {}, &diag);
        const auto half = prevalence_differential(inc, m1, m, ic, ages, {0.05, 1e-9});
        for (std::size_t k = 0; k < ages.size(); ++k) {
            CHECK(std::abs(diff[k] - half[k]) < 1e-9);
        }
        // m1 >= m0 everywhere keeps the differential model in [0, 1]
        const auto ratio_m1 = PiecewiseConstantRate({20, 35, 50}, {m(20) * 2, m(40) * 2, m(60) * 2});
        const auto mixed = prevalence_ode(inc, m, ratio_m1, ic, ages);
        for (double p : mixed) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("settling roundoff excursions") {
    Diagnostics diag;
    CHECK(settle_prevalence(-1e-14, 30, &diag) == 0.0);
    CHECK(settle_prevalence(1.0 + 1e-14, 30, &diag) == 1.0);
    CHECK(diag.empty());
    CHECK(settle_prevalence(-1e-6, 30, &diag) == -1e-6);
    CHECK_FALSE(diag.empty());
}
