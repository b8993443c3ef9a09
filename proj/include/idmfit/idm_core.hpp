#pragma once

#include <span>
#include <vector>

#include "idmfit/diagnostics.hpp"
#include "idmfit/rate.hpp"

namespace idmfit {

double expit(double x);
/// Throws DomainError unless 0 < p < 1.
double logit(double p);

/// Incidence growing exponentially with age: i(a) = exp(beta0 + beta1 * a).
struct GompertzIncidence {
    double beta0 = 0.0;
    double beta1 = 0.0;

    double operator()(double age) const;
    /// Integral of the incidence over [from, to].
    double cumulative(double from, double to) const;
};

struct InitialCondition {
    double a0 = 20.0;
    double p0 = 0.0;

    InitialCondition() = default;
    InitialCondition(double a0, double p0);
};

/// Grid control shared by the quadrature and ODE paths. Each run is repeated
/// with half the step; a disagreement above `tolerance` is an error.
struct SolverOptions {
    double step = 0.1;
    double tolerance = 1e-9;
};

/// Prevalence under non-differential mortality with Gompertz incidence:
/// 1 - (1 - p0) exp(-(h(a) - h(a0))), h(z) = exp(beta0 + beta1 z) / beta1.
/// beta1 = 0 is the constant-incidence limit. Throws DomainError for a < a0.
double prevalence_closed_form(const GompertzIncidence& incidence,
                              const InitialCondition& ic, double age);

/// Composite Simpson value of the integral of (m1 - m + i) over [a0, a].
double integral_G(const AgeRate& incidence, const AgeRate& m1, const AgeRate& m,
                  double a0, double a, const SolverOptions& options = {});

/// Prevalence with the diseased mortality m1 and general mortality m known:
/// exp(-G(a)) * (p0 + integral of i(t) exp(G(t)) over [a0, a]).
double prevalence_differential(const AgeRate& incidence, const AgeRate& m1, const AgeRate& m,
                               const InitialCondition& ic, double age,
                               const SolverOptions& options = {},
                               Diagnostics* diag = nullptr);

/// Same, evaluated at every age in `ages` in one sweep.
std::vector<double> prevalence_differential(const AgeRate& incidence, const AgeRate& m1,
                                            const AgeRate& m, const InitialCondition& ic,
                                            std::span<const double> ages,
                                            const SolverOptions& options = {},
                                            Diagnostics* diag = nullptr);

/// Classical fourth-order Runge-Kutta on dp/da = (1 - p)(i - p (m1 - m0)).
double prevalence_ode(const AgeRate& incidence, const AgeRate& m0, const AgeRate& m1,
                      const InitialCondition& ic, double age,
                      const SolverOptions& options = {}, Diagnostics* diag = nullptr);

std::vector<double> prevalence_ode(const AgeRate& incidence, const AgeRate& m0,
                                   const AgeRate& m1, const InitialCondition& ic,
                                   std::span<const double> ages,
                                   const SolverOptions& options = {},
                                   Diagnostics* diag = nullptr);

/// Clamps roundoff-sized excursions (< 1e-12) into [0, 1] silently. Larger
/// ones are returned unchanged and reported.
double settle_prevalence(double p, double age, Diagnostics* diag);

} // namespace idmfit
