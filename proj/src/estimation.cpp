#include "idmfit/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

namespace idmfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

double normal_quantile_two_sided(double level) {
    if (!(level > 0.0 && level < 1.0))
        throw DomainError("confidence level must lie in (0, 1)");
    if (level == 0.95) return z95;
    return boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
}

std::vector<Interval> FitResult::confidence_intervals(double level) const {
    const double z = normal_quantile_two_sided(level);
    std::vector<Interval> out;
    for (std::size_t j = 0; j < std_errors.size(); ++j)
        out.push_back({estimates[j] - z * std_errors[j], estimates[j] + z * std_errors[j]});
    return out;
}

std::string to_json(const FitResult& fit, int indent) {
    using nlohmann::json;
    json j;
    j["estimates"] = fit.estimates;
    if (fit.has_covariance()) {
        j["std_errors"] = fit.std_errors;
        json ci = json::array();
        for (const auto& iv : fit.ci95) ci.push_back({iv.lo, iv.hi});
        j["ci95"] = ci;
        json cov = json::array();
        for (Eigen::Index r = 0; r < fit.covariance->rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < fit.covariance->cols(); ++c)
                row.push_back((*fit.covariance)(r, c));
            cov.push_back(row);
        }
        j["covariance"] = cov;
    } else {
        j["std_errors"] = nullptr;
        j["ci95"] = nullptr;
        j["covariance"] = nullptr;
    }
    j["max_loglik"] = fit.max_loglik;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["notes"] = fit.notes;
    return j.dump(indent);
}

BinomialLikelihood::BinomialLikelihood(CurrentStatusTable data) : data_(std::move(data)) {
    for (const auto& g : data_.groups()) {
        const auto n = static_cast<double>(g.n);
        const auto c = static_cast<double>(g.c);
        log_choose_ += std::lgamma(n + 1.0) - std::lgamma(c + 1.0) - std::lgamma(n - c + 1.0);
        const double phat = g.n > 0 ? c / n : 0.0;
        observed_.push_back(phat);
        if (c > 0.0) saturated_ += c * std::log(phat);
        if (n - c > 0.0) saturated_ += (n - c) * std::log1p(-phat);
    }
    saturated_ += log_choose_;
}

// Evaluated as the saturated log-likelihood minus per-group deviations
// c log(phat/p) + (n-c) log((1-phat)/(1-p)). Same value as the direct sum, but
// the deviations are small near the optimum, so large groups do not bury the
// differences the simplex needs under cancellation noise.
double BinomialLikelihood::negative(std::span<const double> prevalence) const {
    const auto& groups = data_.groups();
    if (prevalence.size() != groups.size())
        throw std::invalid_argument("one prevalence per age group required");
    double deviation = 0.0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const double p = prevalence[k];
        if (!(p >= 0.0 && p <= 1.0)) return kInf;
        const double phat = observed_[k];
        const auto cases = static_cast<double>(groups[k].c);
        const auto rest = static_cast<double>(groups[k].n - groups[k].c);
        if (cases > 0.0) {
            if (p == 0.0) return kInf;
            deviation += cases * std::log1p((phat - p) / p);
        }
        if (rest > 0.0) {
            if (p == 1.0) return kInf;
            deviation += rest * std::log1p((p - phat) / (1.0 - p));
        }
    }
    return deviation - saturated_;
}

double neg_log_likelihood(std::span<const double> prevalence, const CurrentStatusTable& data) {
    return BinomialLikelihood(data).negative(prevalence);
}

FitResult fit_by_likelihood(const Objective& nll, std::span<const std::vector<double>> starts,
                            const FitOptions& options, Diagnostics* diag) {
    if (starts.empty()) throw std::invalid_argument("no starting points");

    std::vector<std::optional<MinimizeResult>> runs(starts.size());
    std::vector<std::string> failures(starts.size());
    auto run = [&](std::size_t k) {
        try {
            runs[k] = minimize_simplex(nll, starts[k], options.simplex);
        } catch (const DomainError& e) {
            failures[k] = e.what();
        }
    };
    if (options.threads > 1 && starts.size() > 1) {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < starts.size(); ++k) pool.emplace_back(run, k);
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t k = 0; k < starts.size(); ++k) run(k);
    }

    const MinimizeResult* best = nullptr;
    for (const auto& r : runs)
        if (r && (!best || r->value < best->value)) best = &*r;
    if (!best) throw DomainError("objective is not finite at any starting point: " + failures[0]);

    FitResult fit;
    fit.estimates = best->argmin;
    fit.max_loglik = -best->value;
    fit.converged = best->converged;
    fit.iterations = best->iterations;
    if (!best->converged) {
        fit.notes.emplace_back("iteration cap reached before the simplex converged");
        warn(diag, "fit.nonconvergence", fit.notes.back());
    }

    try {
        Eigen::MatrixXd cov = fisher_covariance(nll, fit.estimates);
        for (Eigen::Index j = 0; j < cov.rows(); ++j) {
            const double se = std::sqrt(cov(j, j));
            fit.std_errors.push_back(se);
            fit.ci95.push_back({fit.estimates[static_cast<std::size_t>(j)] - z95 * se,
                                fit.estimates[static_cast<std::size_t>(j)] + z95 * se});
        }
        fit.covariance = std::move(cov);
    } catch (const CovarianceError& e) {
        fit.notes.emplace_back(std::string("covariance unavailable: ") + e.what());
        warn(diag, "fit.covariance", fit.notes.back());
    }
    return fit;
}

std::vector<std::vector<double>> gompertz_starts(const CurrentStatusTable& data) {
    const auto n = static_cast<double>(data.total_n());
    const auto c = static_cast<double>(data.total_c());
    const double pooled = (c + 0.5) / (n + 1.0);
    const auto mids = data.midpoints();
    const double mean_age = std::accumulate(mids.begin(), mids.end(), 0.0) /
                            static_cast<double>(mids.size());
    std::vector<std::vector<double>> starts;
    for (double slope : {0.05, 0.02, 0.1})
        starts.push_back({logit(pooled) - slope * mean_age, slope});
    return starts;
}

namespace {

void check_midpoints(const CurrentStatusTable& data, const InitialCondition& ic) {
    for (double a : data.midpoints())
        if (a < ic.a0)
            throw DomainError("age group midpoint " + std::to_string(a) +
                              " precedes the initial age " + std::to_string(ic.a0));
}

void flag_degenerate(const CurrentStatusTable& data, FitResult& fit, Diagnostics* diag) {
    const bool none = data.total_c() == 0;
    const bool all = data.total_c() == data.total_n();
    if (!none && !all) return;
    fit.converged = false;
    fit.notes.emplace_back(none ? "no cases observed: the likelihood has no interior maximum"
                                : "all subjects are cases: the likelihood has no interior maximum");
    warn(diag, "fit.boundary", fit.notes.back());
}

} // namespace

FitResult fit_nondifferential(const CurrentStatusTable& data, const InitialCondition& ic,
                              const FitOptions& options, Diagnostics* diag) {
    check_midpoints(data, ic);
    const BinomialLikelihood lik(data);
    const auto mids = data.midpoints();
    const Objective nll = [&](std::span<const double> beta) {
        const GompertzIncidence inc{beta[0], beta[1]};
        std::vector<double> p(mids.size());
        for (std::size_t k = 0; k < mids.size(); ++k)
            p[k] = prevalence_closed_form(inc, ic, mids[k]);
        return lik.negative(p);
    };
    const auto starts = gompertz_starts(data);
    auto fit = fit_by_likelihood(nll, starts, options, diag);
    flag_degenerate(data, fit, diag);
    return fit;
}

FitResult fit_differential(const CurrentStatusTable& data, const PiecewiseConstantRate& m1,
                           const PiecewiseConstantRate& m, const InitialCondition& ic,
                           const FitOptions& options, Diagnostics* diag) {
    check_midpoints(data, ic);
    const BinomialLikelihood lik(data);
    const auto mids = data.midpoints();
    const AgeRate diseased(m1);
    const AgeRate general(m);
    const Objective nll = [&](std::span<const double> beta) {
        const GompertzIncidence inc{beta[0], beta[1]};
        try {
            const auto p = prevalence_differential(inc, diseased, general, ic, mids, options.solver);
            return lik.negative(p);
        } catch (const NumericalError&) {
            return kInf;
        }
    };
    const auto starts = gompertz_starts(data);
    auto fit = fit_by_likelihood(nll, starts, options, diag);
    flag_degenerate(data, fit, diag);

    // The optimum itself must pass the step-halving check.
    prevalence_differential(GompertzIncidence{fit.estimates[0], fit.estimates[1]}, diseased,
                            general, ic, mids, options.solver, diag);
    return fit;
}

LogitLine fit_logit_linear(const CurrentStatusTable& data) {
    const auto& groups = data.groups();
    if (groups.size() < 2) throw DomainError("logit regression needs at least two age groups");
    std::vector<double> x;
    std::vector<double> y;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        const auto& g = groups[k];
        if (g.c == 0 || g.c == g.n)
            throw DomainError("logit undefined for age group " + std::to_string(k + 1) + " [" +
                              std::to_string(g.interval.lo) + ", " +
                              std::to_string(g.interval.hi) + "): c = " + std::to_string(g.c) +
                              ", n = " + std::to_string(g.n));
        x.push_back(g.interval.midpoint());
        y.push_back(logit(empirical_prevalence(g)));
    }
    const auto m = static_cast<double>(x.size());
    const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / m;
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - xbar) * (x[k] - xbar);
        sxy += (x[k] - xbar) * (y[k] - ybar);
    }
    LogitLine line;
    line.beta1 = sxy / sxx;
    line.beta0 = ybar - line.beta1 * xbar;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double r = y[k] - (line.beta0 + line.beta1 * x[k]);
        line.residual_sum_of_squares += r * r;
    }
    return line;
}

double incidence_from_logit_fit(double beta0, double beta1, double age) {
    return beta1 * expit(beta0 + beta1 * age);
}

DeltaMethodResult delta_method(const Objective& functional, std::span<const double> estimates,
                               const Eigen::MatrixXd& covariance, Diagnostics* diag) {
    const auto n = estimates.size();
    if (covariance.rows() != static_cast<Eigen::Index>(n) ||
        covariance.cols() != static_cast<Eigen::Index>(n))
        throw std::invalid_argument("covariance dimension does not match the estimates");
    DeltaMethodResult out;
    out.value = functional(estimates);
    out.gradient = numerical_gradient(functional, estimates);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            var += out.gradient[i] * covariance(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(j)) *
                   out.gradient[j];
    if (var < 0.0) {
        warn(diag, "delta.negative_variance",
             "delta-method variance " + std::to_string(var) + " floored at 0");
        var = 0.0;
    }
    out.variance = var;
    return out;
}

std::vector<IncidencePoint> gompertz_incidence_curve(const FitResult& fit,
                                                     std::span<const double> ages, double level,
                                                     Diagnostics* diag) {
    const double z = normal_quantile_two_sided(level);
    std::vector<IncidencePoint> curve;
    for (double a : ages) {
        const Objective incidence = [a](std::span<const double> b) {
            return GompertzIncidence{b[0], b[1]}(a);
        };
        IncidencePoint pt{a, incidence(fit.estimates), {NAN, NAN}};
        if (fit.covariance) {
            const auto d = delta_method(incidence, fit.estimates, *fit.covariance, diag);
            const double half = z * std::sqrt(d.variance);
            pt.ci = {pt.incidence - half, pt.incidence + half};
        }
        curve.push_back(pt);
    }
    return curve;
}

} // namespace idmfit
