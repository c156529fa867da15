#include "obstacle_ldp/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace obstacle_ldp {

QSpec QSpec::sine_basis(const Mesh& mesh, int K, double decay, double scale) {
    if (K < 1) throw ParameterError("Q needs at least one mode");
    if (!(decay > 1.0)) throw ParameterError("eigenvalue decay must exceed 1 for a finite trace");
    if (!(scale > 0.0)) throw ParameterError("eigenvalue scale must be positive");
    if (K > mesh.size()) throw ParameterError("more noise modes than interior nodes");
    QSpec q;
    q.K = K;
    q.eigenvalues.resize(K);
    q.basis.resize(mesh.size(), K);
    for (int k = 0; k < K; ++k) {
        q.eigenvalues(k) = scale * std::pow(k + 1.0, -decay);
        for (int i = 0; i < mesh.size(); ++i) {
            q.basis(i, k) = std::numbers::sqrt2 * std::sin((k + 1) * std::numbers::pi * mesh.x(i));
        }
    }
    q.trace = q.eigenvalues.sum();
    return q;
}

double QSpec::orthonormality_defect(const Mesh& mesh) const {
    const Eigen::MatrixXd gram = mesh.h() * basis.transpose() * basis;
    return (gram - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff();
}

Control Control::zero(int n_steps, int K) {
    return Control{Eigen::MatrixXd::Zero(n_steps, K), std::nullopt};
}

Control Control::in_ball(Eigen::MatrixXd coefficients, double radius, double dt) {
    if (!(radius >= 0.0)) throw ParameterError("control radius must be nonnegative");
    Control c{std::move(coefficients), radius};
    const double norm = h0_norm_sq(c, dt);
    if (norm > radius) c.coefficients *= std::sqrt(radius / norm);
    // Radial rescaling can overshoot by rounding; shrink until the bound holds exactly.
    while (h0_norm_sq(c, dt) > radius) c.coefficients *= (1.0 - 1e-15);
    return c;
}

double h0_norm_sq(const Control& c, double dt) { return dt * c.coefficients.squaredNorm(); }

DiffusionSpec DiffusionSpec::nemytskii(double gamma, const QSpec& q, double psi_sup_h_norm) {
    if (!(gamma >= 0.0)) throw ParameterError("noise intensity gamma must be nonnegative");
    DiffusionSpec d;
    d.gamma = gamma;
    d.M = 2.0 * gamma * gamma * q.trace;
    d.L = 4.0 * gamma * gamma * q.trace * std::max(1.0, psi_sup_h_norm * psi_sup_h_norm);
    return d;
}

Field mode_field(const QSpec& q, const Eigen::Ref<const Eigen::VectorXd>& coefficients) {
    if (coefficients.size() != q.K) throw DimensionError("mode coefficient count differs from K");
    return q.basis * coefficients.cwiseProduct(q.eigenvalues.cwiseSqrt());
}

Field apply_diffusion_control(const DiffusionSpec& d, const QSpec& q, const Field& u,
                              const Field& psi_t, const Eigen::Ref<const Eigen::VectorXd>& c_n) {
    if (u.size() != psi_t.size() || u.size() != q.basis.rows()) {
        throw DimensionError("diffusion: field sizes disagree");
    }
    return d.gamma * (u - psi_t).cwiseProduct(mode_field(q, c_n));
}

Field apply_truncated_diffusion(const DiffusionSpec& d, const QSpec& q, const Field& u,
                                const Field& psi_t, const Eigen::Ref<const Eigen::VectorXd>& c_n) {
    if (u.size() != psi_t.size() || u.size() != q.basis.rows()) {
        throw DimensionError("diffusion: field sizes disagree");
    }
    return d.gamma * (u - psi_t).cwiseMax(0.0).cwiseProduct(mode_field(q, c_n));
}

double hs_norm_sq(const DiffusionSpec& d, const QSpec& q, const Field& u, const Field& psi_t,
                  const Mesh& mesh) {
    const Field amp = d.gamma * (u - psi_t);
    double total = 0.0;
    for (int k = 0; k < q.K; ++k) {
        const double n = norm_h(amp.cwiseProduct(q.basis.col(k)), mesh);
        total += q.eigenvalues(k) * n * n;
    }
    return total;
}

WienerPath sample_wiener(const QSpec& q, int n_steps, double dt, std::uint64_t seed) {
    if (n_steps < 1) throw ParameterError("Wiener path needs at least one step");
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    WienerPath w;
    w.seed = seed;
    w.dt = dt;
    w.increments.resize(n_steps, q.K);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    for (int n = 0; n < n_steps; ++n) {
        for (int k = 0; k < q.K; ++k) w.increments(n, k) = normal(rng);
    }
    return w;
}

Field noise_increment(const QSpec& q, const WienerPath& w, int n) {
    return mode_field(q, w.increments.row(n).transpose());
}

namespace {

void require_same_shape(const WienerPath& w, const Control& c) {
    if (w.n_steps() != c.n_steps() || w.modes() != c.modes()) {
        throw DimensionError("Wiener path and control shapes differ");
    }
}

}  // namespace

WienerPath girsanov_shift(const WienerPath& w, const Control& c, double delta) {
    if (!(delta > 0.0)) throw ParameterError("Girsanov shift needs delta > 0");
    require_same_shape(w, c);
    WienerPath out = w;
    out.increments += c.coefficients * (w.dt / delta);
    return out;
}

double girsanov_log_density(const WienerPath& w, const Control& c, double delta, double dt) {
    if (!(delta > 0.0)) throw ParameterError("Girsanov density needs delta > 0");
    require_same_shape(w, c);
    const double pairing = (c.coefficients.array() * w.increments.array()).sum();
    return -pairing / delta - h0_norm_sq(c, dt) / (2.0 * delta * delta);
}

PropertyReport check_diffusion_lipschitz(const DiffusionSpec& d, const QSpec& q, const Field& psi,
                                         const Mesh& mesh, int trials, std::uint64_t seed) {
    if (trials < 1) throw ParameterError("property checks need trials >= 1");
    PropertyReport report;
    report.property = "diffusion Lipschitz";
    report.trials = trials;
    report.min_margin = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        Rng rng = trial_rng(seed, t);
        Field a = psi + random_trial_field(mesh, rng, trial_is_smooth(t));
        Field b = psi + random_trial_field(mesh, rng, trial_is_smooth(t));
        // G(a) - G(b) = gamma (a - b) h0, so the Hilbert-Schmidt norm is hs_norm_sq(a, b).
        const double lhs = hs_norm_sq(d, q, a, b, mesh);
        const double hd = norm_h(a - b, mesh);
        const double rhs = d.M * hd * hd;
        const double margin = rhs - lhs;
        report.min_margin = std::min(report.min_margin, margin);
        if (margin < -1e-12 * std::max(1.0, rhs)) {
            ++report.failures;
            report.witness_trial = t;
            report.witness_fields = {a, b};
        }
    }
    return report;
}

PropertyReport check_diffusion_growth(const DiffusionSpec& d, const QSpec& q, const Field& psi,
                                      const Mesh& mesh, int trials, std::uint64_t seed) {
    if (trials < 1) throw ParameterError("property checks need trials >= 1");
    PropertyReport report;
    report.property = "diffusion growth";
    report.trials = trials;
    report.min_margin = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
        Rng rng = trial_rng(seed, t);
        Field u = random_trial_field(mesh, rng, trial_is_smooth(t));
        const double lhs = hs_norm_sq(d, q, u, psi, mesh);
        const double hu = norm_h(u, mesh);
        const double rhs = d.L * (1.0 + hu * hu);
        const double margin = rhs - lhs;
        report.min_margin = std::min(report.min_margin, margin);
        if (margin < -1e-12 * std::max(1.0, rhs)) {
            ++report.failures;
            report.witness_trial = t;
            report.witness_fields = {u};
        }
    }
    return report;
}

}  // namespace obstacle_ldp
