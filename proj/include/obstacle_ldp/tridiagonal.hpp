#pragma once

#include <Eigen/Core>

namespace obstacle_ldp {

/// Tridiagonal matrix in band storage: lower(i) couples row i+1 to column i,
/// upper(i) couples row i to column i+1.
struct Tridiagonal {
    Eigen::VectorXd lower;
    Eigen::VectorXd diag;
    Eigen::VectorXd upper;

    explicit Tridiagonal(Eigen::Index n = 0)
        : lower(Eigen::VectorXd::Zero(n > 0 ? n - 1 : 0)),
          diag(Eigen::VectorXd::Zero(n)),
          upper(Eigen::VectorXd::Zero(n > 0 ? n - 1 : 0)) {}

    Eigen::Index size() const { return diag.size(); }

    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
};

/// Thomas algorithm. Throws NumericError on a vanishing pivot.
Eigen::VectorXd solve(const Tridiagonal& m, const Eigen::VectorXd& rhs);

}  // namespace obstacle_ldp
