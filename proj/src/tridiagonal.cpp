#include "obstacle_ldp/tridiagonal.hpp"

#include <cmath>

#include "obstacle_ldp/errors.hpp"

namespace obstacle_ldp {

Eigen::VectorXd Tridiagonal::multiply(const Eigen::VectorXd& x) const {
    const Eigen::Index n = size();
    Eigen::VectorXd y = diag.cwiseProduct(x);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        y(i) += upper(i) * x(i + 1);
        y(i + 1) += lower(i) * x(i);
    }
    return y;
}

Eigen::VectorXd solve(const Tridiagonal& m, const Eigen::VectorXd& rhs) {
    const Eigen::Index n = m.size();
    if (rhs.size() != n) throw DimensionError("tridiagonal solve: rhs size mismatch");
    Eigen::VectorXd c(n), d(n);
    double pivot = m.diag(0);
    if (pivot == 0.0 || !std::isfinite(pivot)) throw NumericError("tridiagonal solve: zero pivot");
    c(0) = n > 1 ? m.upper(0) / pivot : 0.0;
    d(0) = rhs(0) / pivot;
    for (Eigen::Index i = 1; i < n; ++i) {
        pivot = m.diag(i) - m.lower(i - 1) * c(i - 1);
        if (pivot == 0.0 || !std::isfinite(pivot)) throw NumericError("tridiagonal solve: zero pivot");
        c(i) = i + 1 < n ? m.upper(i) / pivot : 0.0;
        d(i) = (rhs(i) - m.lower(i - 1) * d(i - 1)) / pivot;
    }
    Eigen::VectorXd x(n);
    x(n - 1) = d(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
    return x;
}

}  // namespace obstacle_ldp
