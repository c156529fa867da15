#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "obstacle_ldp/errors.hpp"

namespace obstacle_ldp {

/// Nodal values on the interior nodes of the mesh. Boundary values are
/// implicit homogeneous Dirichlet data and are never stored.
using Field = Eigen::VectorXd;

/// Uniform mesh of D = (0, 1) with interior nodes x_i = i h, i = 1..n_cells-1.
class Mesh {
public:
    explicit Mesh(int n_cells);

    int n_cells() const { return n_cells_; }
    int size() const { return n_cells_ - 1; }
    double h() const { return h_; }

    /// Coordinate of the interior node stored at index i (0-based).
    double x(int i) const { return (i + 1) * h_; }

    Field nodes() const;

    bool operator==(const Mesh& other) const { return n_cells_ == other.n_cells_; }

private:
    int n_cells_;
    double h_;
};

/// Time-indexed nodal fields t_n = n dt, n = 0..N_t.
struct Trajectory {
    std::vector<double> times;
    std::vector<Field> fields;

    int n_steps() const { return static_cast<int>(fields.size()) - 1; }
    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    const Field& terminal() const { return fields.back(); }
};

/// Uniform time grid with n_steps + 1 points on [0, horizon].
std::vector<double> time_grid(double horizon, int n_steps);

namespace detail {

template <typename Derived>
void require_size(const Eigen::MatrixBase<Derived>& f, const Mesh& mesh) {
    if (f.size() != mesh.size()) {
        throw DimensionError("field has " + std::to_string(f.size()) + " entries, mesh has " +
                             std::to_string(mesh.size()) + " interior nodes");
    }
}

}  // namespace detail

/// Forward differences on the n_cells edges with ghost zeros at both ends.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> edge_gradient(
    const Eigen::MatrixBase<Derived>& f, const Mesh& mesh) {
    detail::require_size(f, mesh);
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = f.size();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g(n + 1);
    const Scalar inv_h = Scalar(1) / Scalar(mesh.h());
    g(0) = f(0) * inv_h;
    for (Eigen::Index j = 1; j < n; ++j) g(j) = (f(j) - f(j - 1)) * inv_h;
    g(n) = -f(n - 1) * inv_h;
    return g;
}

/// Mass-lumped L2 inner product h * sum f_i g_i.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar inner_h(const Eigen::MatrixBase<DerivedA>& f,
                                  const Eigen::MatrixBase<DerivedB>& g, const Mesh& mesh) {
    detail::require_size(f, mesh);
    detail::require_size(g, mesh);
    return typename DerivedA::Scalar(mesh.h()) * f.dot(g);
}

/// Mass-lumped L2 norm. Constants integrate to 1 - h (zero boundary half cells).
template <typename Derived>
typename Derived::Scalar norm_h(const Eigen::MatrixBase<Derived>& f, const Mesh& mesh) {
    detail::require_size(f, mesh);
    using std::sqrt;
    return sqrt(typename Derived::Scalar(mesh.h()) * f.squaredNorm());
}

/// Discrete ||grad f||_{L^p}: (h sum_edges |(f_{i+1}-f_i)/h|^p)^{1/p}.
template <typename Derived>
typename Derived::Scalar norm_v(const Eigen::MatrixBase<Derived>& f, double p, const Mesh& mesh) {
    if (!(p > 1.0)) throw ParameterError("norm_v requires p > 1");
    using Scalar = typename Derived::Scalar;
    const auto g = edge_gradient(f, mesh);
    const Scalar sum = g.array().abs().pow(Scalar(p)).sum();
    return std::pow(Scalar(mesh.h()) * sum, Scalar(1.0 / p));
}

/// Discrete L^q norm (h sum |f_i|^q)^{1/q}.
template <typename Derived>
typename Derived::Scalar norm_lq(const Eigen::MatrixBase<Derived>& f, double q, const Mesh& mesh) {
    if (!(q >= 1.0)) throw ParameterError("norm_lq requires q >= 1");
    detail::require_size(f, mesh);
    using Scalar = typename Derived::Scalar;
    const Scalar sum = f.array().abs().pow(Scalar(q)).sum();
    return std::pow(Scalar(mesh.h()) * sum, Scalar(1.0 / q));
}

/// Solves the discrete Dirichlet problem -w'' = g with the three-point stencil.
Field solve_dirichlet_laplacian(const Field& g, const Mesh& mesh);

/// Discrete H^{-1} norm of g: norm_v(w, 2) where -w'' = g. Only defined for p = 2.
double dual_norm_p2(const Field& g, const Mesh& mesh);

/// Integral of f over D with the lumped rule.
inline double integral_h(const Field& f, const Mesh& mesh) {
    detail::require_size(f, mesh);
    return mesh.h() * f.sum();
}

/// Samples a callable x -> value at the interior nodes.
template <typename Fn>
Field sample(const Mesh& mesh, Fn&& fn) {
    Field f(mesh.size());
    for (int i = 0; i < mesh.size(); ++i) f(i) = fn(mesh.x(i));
    return f;
}

}  // namespace obstacle_ldp
