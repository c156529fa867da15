#include "obstacle_ldp/mesh.hpp"

#include "obstacle_ldp/tridiagonal.hpp"

namespace obstacle_ldp {

Mesh::Mesh(int n_cells) : n_cells_(n_cells), h_(0.0) {
    if (n_cells < 4) throw ParameterError("mesh needs n_cells >= 4, got " + std::to_string(n_cells));
    h_ = 1.0 / n_cells;
}

Field Mesh::nodes() const {
    Field x(size());
    for (int i = 0; i < size(); ++i) x(i) = this->x(i);
    return x;
}

std::vector<double> time_grid(double horizon, int n_steps) {
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    if (n_steps < 1) throw ParameterError("need at least one time step");
    std::vector<double> t(n_steps + 1);
    const double dt = horizon / n_steps;
    for (int n = 0; n <= n_steps; ++n) t[n] = n * dt;
    t[n_steps] = horizon;
    return t;
}

Field solve_dirichlet_laplacian(const Field& g, const Mesh& mesh) {
    detail::require_size(g, mesh);
    const Eigen::Index n = g.size();
    const double inv_h2 = 1.0 / (mesh.h() * mesh.h());
    Tridiagonal m(n);
    m.diag.setConstant(2.0 * inv_h2);
    m.lower.setConstant(-inv_h2);
    m.upper.setConstant(-inv_h2);
    return solve(m, g);
}

double dual_norm_p2(const Field& g, const Mesh& mesh) {
    return norm_v(solve_dirichlet_laplacian(g, mesh), 2.0, mesh);
}

}  // namespace obstacle_ldp
