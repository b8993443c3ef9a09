#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace idmfit {

using Objective = std::function<double(std::span<const double>)>;

struct SimplexOptions {
    double f_tolerance = 1e-10; // spread of function values across the simplex
    double x_tolerance = 1e-8;  // max coordinate distance from the best vertex
    int max_iterations = 20000;
    bool polish = true;         // restart once at the incumbent
};

struct MinimizeResult {
    std::vector<double> argmin;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
};

/// Nelder-Mead downhill simplex. Non-finite objective values rank as +inf.
/// The initial simplex displaces each coordinate by 5% (0.00025 for zeros).
MinimizeResult minimize_simplex(const Objective& objective, std::vector<double> init,
                                const SimplexOptions& options = {});

/// Central finite-difference Hessian, step max(|x_j|, 1) * cbrt(eps) per
/// coordinate, symmetrized.
Eigen::MatrixXd numerical_hessian(const Objective& objective, std::span<const double> point);

/// Inverse of the numerical Hessian of a negative log-likelihood at its
/// minimum. Throws CovarianceError unless the Hessian is positive definite.
Eigen::MatrixXd fisher_covariance(const Objective& objective, std::span<const double> point);

/// Central finite-difference gradient with the same step rule as the Hessian.
/// Differences are divided by the realized step, so linear maps are exact.
std::vector<double> numerical_gradient(const Objective& f, std::span<const double> point);

} // namespace idmfit
