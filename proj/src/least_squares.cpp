#include "qpp/least_squares.hpp"

#include <cmath>
#include <limits>

namespace qpp {

LeastSquaresResult levenberg_marquardt(const ResidualFn& residuals, const JacobianFn& jacobian, Eigen::VectorXd x,
                                       const LeastSquaresOptions& options) {
    Eigen::VectorXd r = residuals(x);
    double cost = r.squaredNorm();
    double lambda = options.initial_lambda;
    int it = 0;
    for (; it < options.max_iterations && cost > options.cost_tolerance; ++it) {
        const Eigen::MatrixXd j = jacobian(x);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        bool improved = false;
        bool tiny_step = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index k = 0; k < a.rows(); ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Eigen::VectorXd step = a.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd candidate = x + step;
            const Eigen::VectorXd rc = residuals(candidate);
            const double cc = rc.squaredNorm();
            tiny_step = step.norm() <= options.step_tolerance * (x.norm() + options.step_tolerance);
            if (std::isfinite(cc) && cc < cost) {
                x = candidate;
                r = rc;
                cost = cc;
                lambda = std::max(lambda / 10.0, 1e-15);
                improved = true;
                break;
            }
            if (tiny_step) break;
            lambda *= 10.0;
        }
        if (!improved || tiny_step) break;
    }
    const Eigen::MatrixXd j = jacobian(x);
    return {x, cost, j.transpose() * j, it};
}

bool parameter_covariance(const LeastSquaresResult& fit, int observations, Eigen::MatrixXd& covariance) {
    const auto p = fit.params.size();
    const double dof = static_cast<double>(observations) - static_cast<double>(p);
    const double sigma2 = dof > 0.0 ? fit.rss / dof : std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.jtj);
    const Eigen::VectorXd values = eig.eigenvalues();
    const double top = values.cwiseAbs().maxCoeff();
    bool full_rank = top > 0.0;
    Eigen::VectorXd inv(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        if (top > 0.0 && values(k) > top * 1e-12) {
            inv(k) = 1.0 / values(k);
        } else {
            inv(k) = 0.0;
            full_rank = false;
        }
    }
    covariance = sigma2 * eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    return full_rank;
}

}  // namespace qpp
