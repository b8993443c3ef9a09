#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idmfit/data_model.hpp"
#include "idmfit/diagnostics.hpp"
#include "idmfit/estimation.hpp"
#include "idmfit/rate.hpp"

namespace idmfit {

/// Prevalence surface p(t, a) = expit(b0 + b1 (t - t_origin) + b2 a + b3 a^2).
struct LogitPolyPrevalence {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double beta3 = 0.0;
    double t_origin = 2009.0;

    static LogitPolyPrevalence from_coefficients(std::span<const double> beta,
                                                 double t_origin = 2009.0);

    double linear_predictor(double t, double age) const;
    double operator()(double t, double age) const;
    /// (d/dt + d/da) of the linear predictor.
    double predictor_derivative(double age) const { return beta1 + beta2 + 2.0 * beta3 * age; }
};

/// General mortality m and mortality rate ratio R = m1 / m0, both by age.
struct MortalityContext {
    PiecewiseConstantRate m;
    PiecewiseConstantRate ratio;
};

/// Reads `age_lo,age_hi,m,R`. Throws ParseError.
MortalityContext parse_mortality_csv(std::istream& in);
MortalityContext parse_mortality_csv(std::string_view text);
MortalityContext read_mortality_csv(const std::string& path);

struct IncidenceEstimate {
    double age = 0.0;
    double point = 0.0;
    Interval ci; // at the requested level
    bool negative = false; // point estimate below zero: the surface strains the model
};

/// Joint ML fit of the surface to two periods sharing an age grid. Periods are
/// coded relative to `t_origin`. The simplex runs on centred and scaled age
/// terms; estimates and covariance are mapped back to the raw coefficients.
FitResult fit_prevalence_surface(const CurrentStatusTable& first, const CurrentStatusTable& second,
                                 double t_origin = 2009.0, const FitOptions& options = {},
                                 Diagnostics* diag = nullptr);

/// (d/dt + d/da) p = p (1 - p) (b1 + b2 + 2 b3 a).
double directional_derivative(const LogitPolyPrevalence& surface, double t, double age);

/// Incidence from prevalence p, its directional derivative dp, general
/// mortality m and rate ratio R:
///     dp / (1 - p) + m p (R - 1) / (1 + p (R - 1)).
/// Negative results are returned unchanged and reported on `diag`.
double plugin_incidence(double p, double dp, double m, double ratio,
                        Diagnostics* diag = nullptr);

/// p (df + m1 - m0) for p = expit(f), with df the directional derivative of f.
double plugin_incidence_general(const LogitPolyPrevalence& surface, double t, double age,
                                double m0, double m1);

/// Plug-in incidence at the fitted surface with a delta-method interval.
/// Requires a covariance in `fit`.
IncidenceEstimate incidence_with_ci(const FitResult& fit, double t_origin, double t, double age,
                                    const MortalityContext& context, double level = 0.95,
                                    Diagnostics* diag = nullptr);

} // namespace idmfit
