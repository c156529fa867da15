#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "obstacle_ldp/mesh.hpp"
#include "obstacle_ldp/operators.hpp"

namespace obstacle_ldp {

/// Trace-class covariance Q restricted to K modes: Q e_k = lambda_k e_k with the
/// sine eigenfields e_k(x) = sqrt(2) sin(k pi x), orthonormal in L2(0, 1).
struct QSpec {
    int K = 0;
    Eigen::VectorXd eigenvalues;
    /// Column k holds e_{k+1} at the interior nodes.
    Eigen::MatrixXd basis;
    double trace = 0.0;

    /// lambda_k = scale * k^{-decay}. The default scale 6/pi^2 makes the full trace 1.
    static QSpec sine_basis(const Mesh& mesh, int K, double decay = 2.0,
                            double scale = 6.0 / (std::numbers::pi * std::numbers::pi));

    /// Largest |<e_j, e_k>_h - delta_jk|.
    double orthonormality_defect(const Mesh& mesh) const;
};

/// Element of L2(0, T; H0) stored as coefficients a[n][k] in the H0-orthonormal
/// basis {sqrt(lambda_k) e_k}: phi(t_n) = sum_k a[n][k] sqrt(lambda_k) e_k.
struct Control {
    Eigen::MatrixXd coefficients;  // n_steps x K
    /// Radius N of the ball S_N this control was built for, if any.
    std::optional<double> radius;

    static Control zero(int n_steps, int K);

    /// Builds a control inside S_N = {int |phi|_{H0}^2 <= N}; coefficients
    /// outside the ball are rescaled radially onto its boundary.
    static Control in_ball(Eigen::MatrixXd coefficients, double radius, double dt);

    int n_steps() const { return static_cast<int>(coefficients.rows()); }
    int modes() const { return static_cast<int>(coefficients.cols()); }
};

/// sum_n dt sum_k a[n][k]^2
double h0_norm_sq(const Control& c, double dt);

/// G(u) h0 = gamma (u - psi) h0 pointwise; G(psi) = 0 holds structurally.
struct DiffusionSpec {
    double gamma = 1.0;
    /// Lipschitz constant: |G(a) - G(b)|_{L2(H0,H)}^2 <= M |a - b|_H^2.
    double M = 0.0;
    /// Growth constant: |G(u)|_{L2(H0,H)}^2 <= L (1 + |u|_H^2).
    double L = 0.0;

    /// Certifies M = 2 gamma^2 tr Q and L = 4 gamma^2 tr Q max(1, sup_t |psi(t)|_H^2),
    /// using sup |e_k| = sqrt(2).
    static DiffusionSpec nemytskii(double gamma, const QSpec& q, double psi_sup_h_norm);
};

/// sum_k a_k sqrt(lambda_k) e_k: the H-valued image of mode coefficients.
Field mode_field(const QSpec& q, const Eigen::Ref<const Eigen::VectorXd>& coefficients);

/// G(u) phi(t_n) = gamma (u - psi_t) sum_k a_k sqrt(lambda_k) e_k.
Field apply_diffusion_control(const DiffusionSpec& d, const QSpec& q, const Field& u,
                              const Field& psi_t, const Eigen::Ref<const Eigen::VectorXd>& c_n);

/// G(max(u, psi)) phi = gamma (u - psi)^+ phi, the form used inside the penalized schemes.
Field apply_truncated_diffusion(const DiffusionSpec& d, const QSpec& q, const Field& u,
                                const Field& psi_t, const Eigen::Ref<const Eigen::VectorXd>& c_n);

/// |G(u)|_{L2(H0,H)}^2 = sum_k lambda_k |gamma (u - psi_t) e_k|_H^2.
double hs_norm_sq(const DiffusionSpec& d, const QSpec& q, const Field& u, const Field& psi_t,
                  const Mesh& mesh);

/// Mode increments dW[n][k] ~ N(0, dt), stored before lambda scaling.
struct WienerPath {
    Eigen::MatrixXd increments;  // n_steps x K
    std::uint64_t seed = 0;
    double dt = 0.0;

    int n_steps() const { return static_cast<int>(increments.rows()); }
    int modes() const { return static_cast<int>(increments.cols()); }
};

WienerPath sample_wiener(const QSpec& q, int n_steps, double dt, std::uint64_t seed);

/// H-valued increment sum_k sqrt(lambda_k) e_k dW[n][k].
Field noise_increment(const QSpec& q, const WienerPath& w, int n);

/// dW'[n][k] = dW[n][k] + a[n][k] dt / delta.
WienerPath girsanov_shift(const WienerPath& w, const Control& c, double delta);

/// -(1/delta) sum a dW - (1/(2 delta^2)) h0_norm_sq(c, dt).
double girsanov_log_density(const WienerPath& w, const Control& c, double delta, double dt);

/// Randomized checks of the Lipschitz and growth bounds with the certified M and L.
PropertyReport check_diffusion_lipschitz(const DiffusionSpec& d, const QSpec& q, const Field& psi,
                                         const Mesh& mesh, int trials, std::uint64_t seed);
PropertyReport check_diffusion_growth(const DiffusionSpec& d, const QSpec& q, const Field& psi,
                                      const Mesh& mesh, int trials, std::uint64_t seed);

}  // namespace obstacle_ldp
