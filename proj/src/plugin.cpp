#include "idmfit/plugin.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "csv.hpp"
#include "idmfit/idm_core.hpp"

namespace idmfit {

LogitPolyPrevalence LogitPolyPrevalence::from_coefficients(std::span<const double> beta,
                                                           double t_origin) {
    if (beta.size() != 4) throw std::invalid_argument("surface needs four coefficients");
    return {beta[0], beta[1], beta[2], beta[3], t_origin};
}

double LogitPolyPrevalence::linear_predictor(double t, double age) const {
    return beta0 + beta1 * (t - t_origin) + beta2 * age + beta3 * age * age;
}

double LogitPolyPrevalence::operator()(double t, double age) const {
    return expit(linear_predictor(t, age));
}

MortalityContext parse_mortality_csv(std::istream& in) {
    const auto doc = csv::read(in, {"age_lo", "age_hi", "m", "R"});
    if (doc.rows.empty()) throw ParseError(ParseError::Kind::empty_table, 0, "empty table");
    std::vector<AgeInterval> grid;
    std::vector<double> m;
    std::vector<double> ratio;
    for (const auto& row : doc.rows) {
        const auto r = row.number;
        const double lo = csv::to_double(row.fields[0], r, "age_lo");
        const double hi = csv::to_double(row.fields[1], r, "age_hi");
        if (!(lo >= 0.0) || !(lo < hi) || !std::isfinite(hi))
            throw ParseError(ParseError::Kind::invalid_interval, r,
                             "invalid age interval at row " + std::to_string(r));
        if (!grid.empty() && lo < grid.back().hi)
            throw ParseError(ParseError::Kind::overlapping_intervals, r,
                             "mortality rows must be ascending and non-overlapping (row " +
                                 std::to_string(r) + ")");
        const double mv = csv::to_double(row.fields[2], r, "m");
        const double rv = csv::to_double(row.fields[3], r, "R");
        if (!(mv >= 0.0) || !(rv >= 0.0))
            throw ParseError(ParseError::Kind::negative_value, r,
                             "m and R must be non-negative at row " + std::to_string(r));
        grid.emplace_back(lo, hi);
        m.push_back(mv);
        ratio.push_back(rv);
    }
    return {PiecewiseConstantRate::on_intervals(grid, std::move(m)),
            PiecewiseConstantRate::on_intervals(grid, std::move(ratio))};
}

MortalityContext parse_mortality_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_mortality_csv(in);
}

MortalityContext read_mortality_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return parse_mortality_csv(in);
}

double directional_derivative(const LogitPolyPrevalence& surface, double t, double age) {
    const double p = surface(t, age);
    return p * (1.0 - p) * surface.predictor_derivative(age);
}

double plugin_incidence(double p, double dp, double m, double ratio, Diagnostics* diag) {
    if (p == 1.0) throw DomainError("plug-in incidence undefined at prevalence 1");
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("prevalence must lie in [0, 1)");
    if (!(m >= 0.0)) throw DomainError("general mortality must be non-negative");
    if (!(ratio >= 0.0)) throw DomainError("mortality rate ratio must be non-negative");
    const double excess = p * (ratio - 1.0);
    if (!(1.0 + excess > 0.0)) throw DomainError("1 + p (R - 1) must be positive");
    const double i = dp / (1.0 - p) + m * excess / (1.0 + excess);
    if (i < 0.0)
        warn(diag, "plugin.negative",
             "negative plug-in incidence " + std::to_string(i) + " (p = " + std::to_string(p) + ")");
    return i;
}

double plugin_incidence_general(const LogitPolyPrevalence& surface, double t, double age,
                                double m0, double m1) {
    const double p = surface(t, age);
    return p * (surface.predictor_derivative(age) + m1 - m0);
}

namespace {

/// Raw coefficients from the centred/scaled ones:
/// eta = g0 + g1 tau + g2 u + g3 u^2 with u = (a - centre) / scale.
Eigen::Matrix4d scaling_jacobian(double centre, double scale) {
    const double c = centre;
    const double s = scale;
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J(0, 0) = 1.0;
    J(0, 2) = -c / s;
    J(0, 3) = c * c / (s * s);
    J(1, 1) = 1.0;
    J(2, 2) = 1.0 / s;
    J(2, 3) = -2.0 * c / (s * s);
    J(3, 3) = 1.0 / (s * s);
    return J;
}

std::vector<double> least_squares_start(const CurrentStatusTable& first,
                                        const CurrentStatusTable& second, double t_origin,
                                        double centre, double scale) {
    Eigen::MatrixXd X(0, 4);
    Eigen::VectorXd y(0);
    Eigen::VectorXd w(0);
    std::int64_t cases = 0;
    std::int64_t total = 0;
    for (const auto* table : {&first, &second}) {
        const double tau = *table->period() - t_origin;
        for (const auto& g : table->groups()) {
            cases += g.c;
            total += g.n;
            if (g.c == 0 || g.c == g.n) continue;
            const double p = empirical_prevalence(g);
            const double u = (g.interval.midpoint() - centre) / scale;
            X.conservativeResize(X.rows() + 1, Eigen::NoChange);
            y.conservativeResize(y.size() + 1);
            w.conservativeResize(w.size() + 1);
            X.row(X.rows() - 1) << 1.0, tau, u, u * u;
            y(y.size() - 1) = logit(p);
            w(w.size() - 1) = static_cast<double>(g.n) * p * (1.0 - p);
        }
    }
    const double pooled = (static_cast<double>(cases) + 0.5) / (static_cast<double>(total) + 1.0);
    std::vector<double> start{logit(pooled), 0.0, 0.0, 0.0};
    if (X.rows() < 4) return start;
    const Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
    const Eigen::Vector4d gamma = (XtW * X).ldlt().solve(XtW * y);
    if (!gamma.allFinite()) return start;
    return {gamma(0), gamma(1), gamma(2), gamma(3)};
}

} // namespace

FitResult fit_prevalence_surface(const CurrentStatusTable& first, const CurrentStatusTable& second,
                                 double t_origin, const FitOptions& options, Diagnostics* diag) {
    if (!first.period() || !second.period())
        throw DomainError("both tables need a period (use a '# period=<year>' line)");
    if (*first.period() == *second.period())
        throw DomainError("the two tables must belong to different periods");
    if (first.intervals() != second.intervals())
        throw DomainError("the two tables must share an age grid");

    const auto mids = first.midpoints();
    const double lo = *std::min_element(mids.begin(), mids.end());
    const double hi = *std::max_element(mids.begin(), mids.end());
    const double centre = std::accumulate(mids.begin(), mids.end(), 0.0) /
                          static_cast<double>(mids.size());
    const double scale = hi > lo ? (hi - lo) / 2.0 : 1.0;

    const BinomialLikelihood lik_first(first);
    const BinomialLikelihood lik_second(second);
    const double tau_first = *first.period() - t_origin;
    const double tau_second = *second.period() - t_origin;
    std::vector<double> u(mids.size());
    for (std::size_t k = 0; k < mids.size(); ++k) u[k] = (mids[k] - centre) / scale;

    const Objective nll = [&](std::span<const double> g) {
        std::vector<double> p1(u.size());
        std::vector<double> p2(u.size());
        for (std::size_t k = 0; k < u.size(); ++k) {
            const double age_part = g[2] * u[k] + g[3] * u[k] * u[k];
            p1[k] = expit(g[0] + g[1] * tau_first + age_part);
            p2[k] = expit(g[0] + g[1] * tau_second + age_part);
        }
        return lik_first.negative(p1) + lik_second.negative(p2);
    };

    const std::vector<std::vector<double>> starts{
        least_squares_start(first, second, t_origin, centre, scale)};
    FitResult scaled = fit_by_likelihood(nll, starts, options, diag);

    const Eigen::Matrix4d J = scaling_jacobian(centre, scale);
    const Eigen::Vector4d gamma(scaled.estimates.data());
    const Eigen::Vector4d beta = J * gamma;

    FitResult fit = std::move(scaled);
    fit.estimates.assign(beta.data(), beta.data() + 4);
    fit.std_errors.clear();
    fit.ci95.clear();
    if (fit.covariance) {
        Eigen::MatrixXd cov = J * *fit.covariance * J.transpose();
        cov = (cov + cov.transpose()) / 2.0;
        for (Eigen::Index j = 0; j < 4; ++j) {
            const double se = std::sqrt(cov(j, j));
            fit.std_errors.push_back(se);
            fit.ci95.push_back({beta(j) - z95 * se, beta(j) + z95 * se});
        }
        fit.covariance = std::move(cov);
    }
    return fit;
}

IncidenceEstimate incidence_with_ci(const FitResult& fit, double t_origin, double t, double age,
                                    const MortalityContext& context, double level,
                                    Diagnostics* diag) {
    if (!fit.covariance)
        throw DomainError("incidence intervals need a fit with a valid covariance");
    const double m = context.m(age);
    const double ratio = context.ratio(age);
    const Objective incidence = [&](std::span<const double> beta) {
        const auto surface = LogitPolyPrevalence::from_coefficients(beta, t_origin);
        const double p = surface(t, age);
        return plugin_incidence(p, directional_derivative(surface, t, age), m, ratio);
    };

    IncidenceEstimate out;
    out.age = age;
    const auto d = delta_method(incidence, fit.estimates, *fit.covariance, diag);
    out.point = d.value;
    const double half = normal_quantile_two_sided(level) * std::sqrt(d.variance);
    out.ci = {out.point - half, out.point + half};
    out.negative = out.point < 0.0;
    if (out.negative)
        warn(diag, "plugin.negative",
             "negative plug-in incidence " + std::to_string(out.point) + " at age " +
                 std::to_string(age));
    return out;
}

} // namespace idmfit
