#pragma once
// Linear least squares on arbitrary basis functions, with R^2.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "feberi/core.hpp"

namespace feberi {

struct FitResult {
    std::vector<double> coefficients;
    double r_squared = 0.0;
    double max_abs_residual = 0.0;
    double rms_residual = 0.0;
};

// Each row of X holds the basis functions evaluated at one sample.
inline FitResult least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size() || X.rows() < X.cols()) throw DomainError("fit needs at least as many samples as terms");
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd res = y - X * beta;
    FitResult f;
    f.coefficients.assign(beta.data(), beta.data() + beta.size());
    const double mean = y.mean();
    const double ss_tot = (y.array() - mean).square().sum();
    const double ss_res = res.squaredNorm();
    f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    f.max_abs_residual = res.cwiseAbs().maxCoeff();
    f.rms_residual = std::sqrt(ss_res / double(y.size()));
    return f;
}

inline FitResult fit_basis(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<std::function<double(double)>>& basis) {
    Eigen::MatrixXd X(x.size(), basis.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < basis.size(); ++j) X(i, j) = basis[j](x[i]);
    return least_squares(X, Eigen::Map<const Eigen::VectorXd>(y.data(), y.size()));
}

// y = b x
inline FitResult fit_proportional(const std::vector<double>& x, const std::vector<double>& y) {
    return fit_basis(x, y, {[](double v) { return v; }});
}

// y = c x^2
inline FitResult fit_pure_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
    return fit_basis(x, y, {[](double v) { return v * v; }});
}

// y = a + b x
inline FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    return fit_basis(x, y, {[](double) { return 1.0; }, [](double v) { return v; }});
}

// y = a + b x + c x^2
inline FitResult fit_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
    return fit_basis(x, y, {[](double) { return 1.0; }, [](double v) { return v; }, [](double v) { return v * v; }});
}

// y = a + b sin x + c cos x
inline FitResult fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y) {
    return fit_basis(x, y, {[](double) { return 1.0; }, [](double v) { return std::sin(v); },
                            [](double v) { return std::cos(v); }});
}

}  // namespace feberi
