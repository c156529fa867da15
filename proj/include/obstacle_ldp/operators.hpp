#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obstacle_ldp/mesh.hpp"
#include "obstacle_ldp/random.hpp"
#include "obstacle_ldp/tridiagonal.hpp"

namespace obstacle_ldp {

enum class OperatorKind { PLaplace, Custom };

/// Constants a user certifies for the structural assumptions on A:
///   <A v, v> + lambda |v|_H^2 + l1 >= alpha |v|_V^p              (coercivity)
///   lambda_T ((v1-v2), (v1-v2)^+)_H + <A v1 - A v2, (v1-v2)^+> >= 0 (T-monotone)
///   |A v|_{V'} <= K_bar |v|_V^{p-1} + g                          (growth)
///   <A v1 - A v2, v1 - v2> >= alpha_bar |v1-v2|_V^p - lambda_T |v1-v2|_H^2
struct CertifiedConstants {
    double alpha = 1.0;
    double lambda = 0.0;
    double lambda_T = 0.0;
    std::optional<double> alpha_bar;
    double K_bar = 1.0;
    double l1_bound = 0.0;
    double g_bound = 0.0;
};

using OperatorFn = std::function<Field(const Field&, const Mesh&)>;

struct OperatorSpec {
    OperatorKind kind = OperatorKind::PLaplace;
    double p = 2.0;
    /// Flux regularization (|g|^2 + mu^2)^{(p-2)/2} g, applied only for p < 2.
    double mu = 1e-8;
    CertifiedConstants constants;
    OperatorFn custom;

    /// -div(|grad u|^{p-2} grad u) with its certified constants
    /// (alpha = K_bar = 1, lambda = lambda_T = 0, alpha_bar = 2^{2-p} for p >= 2).
    static OperatorSpec p_laplace(double p);

    /// User-supplied operator with user-certified constants.
    static OperatorSpec custom_operator(double p, CertifiedConstants constants, OperatorFn fn);
};

/// Edge flux of the p-Laplacian and its derivative in the gradient.
double p_laplace_flux(double grad, const OperatorSpec& spec);
double p_laplace_flux_derivative(double grad, const OperatorSpec& spec);

/// Nodal load vector (A u)_i = -(q_{i+1/2} - q_{i-1/2}) / h. For the p-Laplacian this is
/// 1/h times the gradient of the discrete energy (1/p) h sum_edges |grad u|^p.
Field apply_operator(const OperatorSpec& spec, const Field& u, const Mesh& mesh);

/// Jacobian of apply_operator at u. Exact for the p-Laplacian.
Tridiagonal p_laplace_jacobian(const OperatorSpec& spec, const Field& u, const Mesh& mesh);

/// Dense forward-difference Jacobian; used for custom operators.
Eigen::MatrixXd finite_difference_jacobian(const OperatorSpec& spec, const Field& u,
                                           const Mesh& mesh);

/// Outcome of a randomized property check.
struct PropertyReport {
    std::string property;
    int trials = 0;
    int failures = 0;
    /// Smallest margin witnessed; below -slack counts as a violation.
    double min_margin = 0.0;
    bool skipped = false;
    std::string reason;
    /// Trial index and fields of the worst violation, if any.
    std::optional<int> witness_trial;
    std::vector<Field> witness_fields;
    /// Extra named quantities a check wants to expose (worst location, pairing, ...).
    std::map<std::string, double> metrics;

    bool passed() const { return skipped || failures == 0; }
};

/// Random trial field: i.i.d. uniform[-1, 1] nodal values, or (smooth) a random
/// combination of the first five sine modes.
Field random_trial_field(const Mesh& mesh, Rng& rng, bool smooth);

/// Every fifth trial is smooth (20 %); trial streams are derived from (seed, trial).
Rng trial_rng(std::uint64_t seed, int trial);
bool trial_is_smooth(int trial);

PropertyReport check_t_monotonicity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                    std::uint64_t seed);
PropertyReport check_monotonicity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                  std::uint64_t seed);
PropertyReport check_coercivity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                std::uint64_t seed);
PropertyReport check_growth(const OperatorSpec& spec, const Mesh& mesh, int trials,
                            std::uint64_t seed);
PropertyReport check_strong_monotonicity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                         std::uint64_t seed);
PropertyReport check_hemicontinuity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                    std::uint64_t seed);

/// <A u, u>_h == |u|_V^p to 1e-10 relative (p-Laplacian only).
PropertyReport check_potential_identity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                        std::uint64_t seed);

/// h = f - d_t psi - A(psi) with its nodal positive and negative parts.
struct DualOrderData {
    std::vector<Field> h;
    std::vector<Field> h_plus;
    std::vector<Field> h_minus;
};

/// h_n = f_n - (psi_{n+1} - psi_n)/dt - A(psi_n), n = 0..N_t.
/// `psi` carries N_t + 2 samples (one past the horizon); `f` carries N_t + 1.
DualOrderData dual_order_decomposition(const OperatorSpec& spec, const Mesh& mesh,
                                       const std::vector<Field>& psi, const std::vector<Field>& f,
                                       double dt);

}  // namespace obstacle_ldp
