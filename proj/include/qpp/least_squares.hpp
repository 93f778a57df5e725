#pragma once

#include <Eigen/Dense>

#include <functional>

namespace qpp {

struct LeastSquaresOptions {
    int max_iterations = 200;
    double initial_lambda = 1e-3;
    double step_tolerance = 1e-15;  // relative parameter change
    double cost_tolerance = 1e-30;  // absolute RSS below which we stop
};

struct LeastSquaresResult {
    Eigen::VectorXd params;
    double rss = 0.0;
    Eigen::MatrixXd jtj;  // J^T J at the solution
    int iterations = 0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling).
LeastSquaresResult levenberg_marquardt(const ResidualFn& residuals, const JacobianFn& jacobian, Eigen::VectorXd start,
                                       const LeastSquaresOptions& options = {});

// sigma^2 (J^T J)^+ with sigma^2 = rss / (m - p). Returns false when J^T J
// is rank-deficient (condition number above 1e12), in which case the
// returned covariance uses the pseudo-inverse.
bool parameter_covariance(const LeastSquaresResult& fit, int observations, Eigen::MatrixXd& covariance);

}  // namespace qpp
