#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "idmfit/data_model.hpp"
#include "idmfit/diagnostics.hpp"
#include "idmfit/idm_core.hpp"
#include "idmfit/optimizer.hpp"
#include "idmfit/rate.hpp"

namespace idmfit {

/// Two-sided 95% standard normal quantile.
inline constexpr double z95 = 1.959964;

/// Standard normal quantile for a two-sided confidence level; returns z95
/// exactly for 0.95.
double normal_quantile_two_sided(double level);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Estimates with Wald intervals from the inverse Fisher information.
/// `covariance` is empty when the Hessian was not positive definite; the
/// standard errors and intervals are then empty as well.
struct FitResult {
    std::vector<double> estimates;
    std::optional<Eigen::MatrixXd> covariance;
    std::vector<double> std_errors;
    std::vector<Interval> ci95;
    double max_loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> notes;

    bool has_covariance() const noexcept { return covariance.has_value(); }
    /// Wald interval at an arbitrary two-sided level.
    std::vector<Interval> confidence_intervals(double level) const;
};

/// JSON in the form
/// {"estimates":[...],"std_errors":[...],"ci95":[[lo,hi],...],"max_loglik":...,
///  "converged":true,"iterations":N}
/// plus "covariance" and "notes". Missing covariance serializes as nulls.
std::string to_json(const FitResult& fit, int indent = 2);

/// Binomial log-likelihood over a table, with the log binomial coefficients
/// summed once at construction.
class BinomialLikelihood {
public:
    explicit BinomialLikelihood(CurrentStatusTable data);

    const CurrentStatusTable& data() const noexcept { return data_; }
    double log_binomial_coefficients() const noexcept { return log_choose_; }

    /// -sum_k [log C(n_k, c_k) + c_k log p_k + (n_k - c_k) log(1 - p_k)].
    /// +inf when a prevalence is impossible for its counts or outside [0, 1].
    double negative(std::span<const double> prevalence) const;

private:
    CurrentStatusTable data_;
    std::vector<double> observed_; // c / n per group
    double log_choose_ = 0.0;
    double saturated_ = 0.0;       // log-likelihood at p = c / n
};

double neg_log_likelihood(std::span<const double> prevalence, const CurrentStatusTable& data);

struct FitOptions {
    SimplexOptions simplex;
    SolverOptions solver;
    int threads = 1; // multistart runs in parallel when > 1
};

/// Minimizes `nll` from each start, keeps the best, then attaches the
/// covariance. Ties resolve to the earliest start.
FitResult fit_by_likelihood(const Objective& nll, std::span<const std::vector<double>> starts,
                            const FitOptions& options = {}, Diagnostics* diag = nullptr);

/// Deterministic multistart for Gompertz coefficients: slope s in {0.02, 0.05,
/// 0.1} with intercept logit(pooled prevalence) - s * mean midpoint.
std::vector<std::vector<double>> gompertz_starts(const CurrentStatusTable& data);

/// Gompertz incidence fitted to prevalence from the closed-form solution.
FitResult fit_nondifferential(const CurrentStatusTable& data, const InitialCondition& ic = {},
                              const FitOptions& options = {}, Diagnostics* diag = nullptr);

/// Gompertz incidence fitted to prevalence from the differential-mortality
/// quadrature with diseased mortality m1 and general mortality m.
FitResult fit_differential(const CurrentStatusTable& data, const PiecewiseConstantRate& m1,
                           const PiecewiseConstantRate& m, const InitialCondition& ic = {},
                           const FitOptions& options = {}, Diagnostics* diag = nullptr);

struct LogitLine {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double residual_sum_of_squares = 0.0;
};

/// Unweighted least squares of logit(c/n) on group midpoints. Throws
/// DomainError naming the first group with c = 0 or c = n.
LogitLine fit_logit_linear(const CurrentStatusTable& data);

/// beta1 * expit(beta0 + beta1 * a), i.e. (dp/da) / (1 - p) for the logit line.
double incidence_from_logit_fit(double beta0, double beta1, double age);

struct DeltaMethodResult {
    double value = 0.0;
    double variance = 0.0;
    std::vector<double> gradient;
};

/// First-order variance g' Sigma g of a smooth functional, gradient by central
/// differences. Negative round-off variance is floored at 0 and reported.
DeltaMethodResult delta_method(const Objective& functional, std::span<const double> estimates,
                               const Eigen::MatrixXd& covariance, Diagnostics* diag = nullptr);

struct IncidencePoint {
    double age = 0.0;
    double incidence = 0.0;
    Interval ci;
};

/// Fitted Gompertz incidence on an age grid with delta-method intervals.
std::vector<IncidencePoint> gompertz_incidence_curve(const FitResult& fit,
                                                     std::span<const double> ages,
                                                     double level = 0.95,
                                                     Diagnostics* diag = nullptr);

} // namespace idmfit
