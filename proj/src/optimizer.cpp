#include "idmfit/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "idmfit/diagnostics.hpp"

namespace idmfit {

namespace {

using Point = std::vector<double>;

struct Simplex {
    std::vector<Point> vertices;
    std::vector<double> values;

    void sort() {
        std::vector<std::size_t> idx(values.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<Point> v;
        std::vector<double> f;
        v.reserve(idx.size());
        f.reserve(idx.size());
        for (auto k : idx) {
            v.push_back(std::move(vertices[k]));
            f.push_back(values[k]);
        }
        vertices = std::move(v);
        values = std::move(f);
    }

    double value_spread() const {
        const double best = values.front();
        const double worst = values.back();
        if (worst == best) return 0.0; // also covers two infinities
        return worst - best;
    }

    double coordinate_spread() const {
        double spread = 0.0;
        for (std::size_t j = 1; j < vertices.size(); ++j)
            for (std::size_t i = 0; i < vertices[j].size(); ++i)
                spread = std::max(spread, std::abs(vertices[j][i] - vertices[0][i]));
        return spread;
    }
};

class CountingObjective {
public:
    explicit CountingObjective(const Objective& f) : f_(f) {}

    double operator()(const Point& x) {
        ++evaluations;
        const double v = f_(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    }

    int evaluations = 0;

private:
    const Objective& f_;
};

// Standard coefficients: reflection 1, expansion 2, contraction 1/2, shrink 1/2.
MinimizeResult run_simplex(CountingObjective& f, const Point& start, int max_iterations,
                           const SimplexOptions& options) {
    const std::size_t n = start.size();
    Simplex s;
    s.vertices.push_back(start);
    for (std::size_t i = 0; i < n; ++i) {
        Point v = start;
        v[i] = v[i] != 0.0 ? 1.05 * v[i] : 0.00025;
        s.vertices.push_back(std::move(v));
    }
    for (const auto& v : s.vertices) s.values.push_back(f(v));

    auto along = [&](const Point& from, const Point& to, double t) {
        Point p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = from[i] + t * (to[i] - from[i]);
        return p;
    };

    int iter = 0;
    bool converged = false;
    for (; iter < max_iterations; ++iter) {
        s.sort();
        if (s.value_spread() < options.f_tolerance &&
            s.coordinate_spread() < options.x_tolerance) {
            converged = true;
            break;
        }

        Point centroid(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += s.vertices[j][i];
        for (auto& c : centroid) c /= static_cast<double>(n);

        const Point& worst = s.vertices[n];
        Point reflected = along(centroid, worst, -1.0);
        const double fr = f(reflected);

        if (fr < s.values[0]) {
            Point expanded = along(centroid, worst, -2.0);
            const double fe = f(expanded);
            if (fe < fr) {
                s.vertices[n] = std::move(expanded);
                s.values[n] = fe;
            } else {
                s.vertices[n] = std::move(reflected);
                s.values[n] = fr;
            }
            continue;
        }
        if (fr < s.values[n - 1]) {
            s.vertices[n] = std::move(reflected);
            s.values[n] = fr;
            continue;
        }

        const bool outside = fr < s.values[n];
        Point contracted = outside ? along(centroid, reflected, 0.5) : along(centroid, worst, 0.5);
        const double fc = f(contracted);
        if (fc < (outside ? fr : s.values[n])) {
            s.vertices[n] = std::move(contracted);
            s.values[n] = fc;
            continue;
        }

        for (std::size_t j = 1; j <= n; ++j) {
            s.vertices[j] = along(s.vertices[0], s.vertices[j], 0.5);
            s.values[j] = f(s.vertices[j]);
        }
    }
    s.sort();
    return {s.vertices.front(), s.values.front(), converged, iter, 0};
}

double fd_step(double x) {
    static const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    return std::max(std::abs(x), 1.0) * cbrt_eps;
}

} // namespace

MinimizeResult minimize_simplex(const Objective& objective, std::vector<double> init,
                                const SimplexOptions& options) {
    if (init.empty()) throw std::invalid_argument("minimize_simplex needs at least one parameter");
    CountingObjective f(objective);
    if (!std::isfinite(f(init)))
        throw DomainError("objective is not finite at the initial point");

    auto result = run_simplex(f, init, options.max_iterations, options);
    if (options.polish && result.converged) {
        auto polished =
            run_simplex(f, result.argmin, options.max_iterations - result.iterations, options);
        polished.iterations += result.iterations;
        if (polished.value <= result.value) {
            result = std::move(polished);
        } else {
            result.iterations = polished.iterations;
            result.converged = polished.converged;
        }
    }
    result.evaluations = f.evaluations;
    return result;
}

Eigen::MatrixXd numerical_hessian(const Objective& objective, std::span<const double> point) {
    const auto n = point.size();
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> up(n);
    std::vector<double> down(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h = fd_step(x[i]);
        up[i] = x[i] + h;
        down[i] = x[i] - h;
    }

    auto eval = [&](std::size_t i, double xi, std::size_t j, double xj) {
        std::vector<double> y = x;
        y[i] = xi;
        y[j] = xj;
        return objective(y);
    };

    const double f0 = objective(x);
    Eigen::MatrixXd H(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hi_up = up[i] - x[i];
        const double hi_dn = x[i] - down[i];
        const double fp = eval(i, up[i], i, up[i]);
        const double fm = eval(i, down[i], i, down[i]);
        // Non-uniform three-point second derivative (steps are realized values).
        H(i, i) = 2.0 * (hi_dn * fp - (hi_up + hi_dn) * f0 + hi_up * fm) /
                  (hi_up * hi_dn * (hi_up + hi_dn));
        for (std::size_t j = 0; j < i; ++j) {
            const double fpp = eval(i, up[i], j, up[j]);
            const double fpm = eval(i, up[i], j, down[j]);
            const double fmp = eval(i, down[i], j, up[j]);
            const double fmm = eval(i, down[i], j, down[j]);
            H(i, j) = (fpp - fpm - fmp + fmm) / ((up[i] - down[i]) * (up[j] - down[j]));
            H(j, i) = H(i, j);
        }
    }
    return (H + H.transpose()) / 2.0;
}

Eigen::MatrixXd fisher_covariance(const Objective& objective, std::span<const double> point) {
    const Eigen::MatrixXd H = numerical_hessian(objective, point);
    if (!H.allFinite()) throw CovarianceError("Hessian has non-finite entries");
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success)
        throw CovarianceError("Hessian of the negative log-likelihood is not positive definite");
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
    return (cov + cov.transpose()) / 2.0;
}

std::vector<double> numerical_gradient(const Objective& f, std::span<const double> point) {
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = fd_step(x[i]);
        const double xi = x[i];
        const double up = xi + h;
        const double down = xi - h;
        x[i] = up;
        const double fu = f(x);
        x[i] = down;
        const double fd = f(x);
        x[i] = xi;
        g[i] = (fu - fd) / (up - down);
    }
    return g;
}

} // namespace idmfit
