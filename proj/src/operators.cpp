#include "obstacle_ldp/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace obstacle_ldp {

OperatorSpec OperatorSpec::p_laplace(double p) {
    if (!(p > 1.0)) throw ParameterError("p must exceed 1");
    OperatorSpec spec;
    spec.kind = OperatorKind::PLaplace;
    spec.p = p;
    if (p >= 2.0) spec.constants.alpha_bar = std::pow(2.0, 2.0 - p);
    return spec;
}

OperatorSpec OperatorSpec::custom_operator(double p, CertifiedConstants constants, OperatorFn fn) {
    if (!(p > 1.0)) throw ParameterError("p must exceed 1");
    if (!fn) throw ParameterError("custom operator needs a callable");
    OperatorSpec spec;
    spec.kind = OperatorKind::Custom;
    spec.p = p;
    spec.constants = constants;
    spec.custom = std::move(fn);
    return spec;
}

double p_laplace_flux(double grad, const OperatorSpec& spec) {
    const double p = spec.p;
    if (p == 2.0) return grad;
    if (p > 2.0) return std::pow(std::abs(grad), p - 2.0) * grad;
    return std::pow(grad * grad + spec.mu * spec.mu, 0.5 * (p - 2.0)) * grad;
}

double p_laplace_flux_derivative(double grad, const OperatorSpec& spec) {
    const double p = spec.p;
    if (p == 2.0) return 1.0;
    if (p > 2.0) return (p - 1.0) * std::pow(std::abs(grad), p - 2.0);
    const double s = grad * grad + spec.mu * spec.mu;
    return std::pow(s, 0.5 * (p - 4.0)) * ((p - 1.0) * grad * grad + spec.mu * spec.mu);
}

namespace {

void require_finite(const Field& u) {
    if (!u.allFinite()) throw NumericError("operator input contains non-finite values");
}

Field p_laplace_apply(const OperatorSpec& spec, const Field& u, const Mesh& mesh) {
    const Eigen::VectorXd g = edge_gradient(u, mesh);
    Eigen::VectorXd q(g.size());
    for (Eigen::Index j = 0; j < g.size(); ++j) q(j) = p_laplace_flux(g(j), spec);
    const Eigen::Index n = u.size();
    return -(q.tail(n) - q.head(n)) / mesh.h();
}

}  // namespace

Field apply_operator(const OperatorSpec& spec, const Field& u, const Mesh& mesh) {
    detail::require_size(u, mesh);
    require_finite(u);
    if (spec.kind == OperatorKind::Custom) {
        Field out = spec.custom(u, mesh);
        detail::require_size(out, mesh);
        return out;
    }
    return p_laplace_apply(spec, u, mesh);
}

Tridiagonal p_laplace_jacobian(const OperatorSpec& spec, const Field& u, const Mesh& mesh) {
    if (spec.kind != OperatorKind::PLaplace) {
        throw ParameterError("tridiagonal Jacobian is only available for the p-Laplacian");
    }
    const Eigen::VectorXd g = edge_gradient(u, mesh);
    const Eigen::Index n = u.size();
    Eigen::VectorXd d(g.size());
    for (Eigen::Index j = 0; j < g.size(); ++j) d(j) = p_laplace_flux_derivative(g(j), spec);
    const double inv_h2 = 1.0 / (mesh.h() * mesh.h());
    // (A u)_i = -(q(g_{i+1}) - q(g_i))/h with g_{i+1} = (u_{i+1} - u_i)/h, g_i = (u_i - u_{i-1})/h.
    Tridiagonal jac(n);
    for (Eigen::Index i = 0; i < n; ++i) jac.diag(i) = (d(i) + d(i + 1)) * inv_h2;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        jac.upper(i) = -d(i + 1) * inv_h2;
        jac.lower(i) = -d(i + 1) * inv_h2;
    }
    return jac;
}

Eigen::MatrixXd finite_difference_jacobian(const OperatorSpec& spec, const Field& u,
                                           const Mesh& mesh) {
    const Eigen::Index n = u.size();
    const Field base = apply_operator(spec, u, mesh);
    Eigen::MatrixXd jac(n, n);
    Field shifted = u;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double step = 1e-7 * std::max(1.0, std::abs(u(j)));
        shifted(j) = u(j) + step;
        jac.col(j) = (apply_operator(spec, shifted, mesh) - base) / step;
        shifted(j) = u(j);
    }
    return jac;
}

Rng trial_rng(std::uint64_t seed, int trial) {
    return Rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
}

bool trial_is_smooth(int trial) { return trial % 5 == 4; }

Field random_trial_field(const Mesh& mesh, Rng& rng, bool smooth) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Field f(mesh.size());
    if (!smooth) {
        for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = unit(rng);
        return f;
    }
    f.setZero();
    for (int m = 1; m <= 5; ++m) {
        const double c = unit(rng);
        for (int i = 0; i < mesh.size(); ++i) f(i) += c * std::sin(m * std::numbers::pi * mesh.x(i));
    }
    return f;
}

namespace {

constexpr double kRelTol = 1e-10;

/// Per-trial margin with the scale its tolerance is relative to.
struct TrialOutcome {
    double margin;
    double scale;
    std::vector<Field> fields;
};

template <typename TrialFn>
PropertyReport run_trials(std::string property, int trials, std::uint64_t seed, double rel_tol,
                          TrialFn&& trial_fn) {
    if (trials < 1) throw ParameterError("property checks need trials >= 1");
    PropertyReport report;
    report.property = std::move(property);
    report.trials = trials;
    report.min_margin = std::numeric_limits<double>::infinity();
    double worst_violation = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng = trial_rng(seed, t);
        TrialOutcome out = trial_fn(rng, trial_is_smooth(t));
        report.min_margin = std::min(report.min_margin, out.margin);
        const double slack = rel_tol * std::max(1.0, out.scale);
        if (out.margin < -slack) {
            ++report.failures;
            const double violation = -out.margin / std::max(1.0, out.scale);
            if (violation > worst_violation) {
                worst_violation = violation;
                report.witness_trial = t;
                report.witness_fields = std::move(out.fields);
            }
        }
    }
    return report;
}

PropertyReport skipped_report(std::string property, int trials, std::string reason) {
    PropertyReport report;
    report.property = std::move(property);
    report.trials = trials;
    report.skipped = true;
    report.reason = std::move(reason);
    return report;
}

Field positive_part(const Field& f) { return f.cwiseMax(0.0); }

}  // namespace

PropertyReport check_t_monotonicity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                    std::uint64_t seed) {
    return run_trials("T-monotonicity", trials, seed, kRelTol, [&](Rng& rng, bool smooth) {
        Field v1 = random_trial_field(mesh, rng, smooth);
        Field v2 = random_trial_field(mesh, rng, smooth);
        const Field w_plus = positive_part(v1 - v2);
        const Field a1 = apply_operator(spec, v1, mesh);
        const Field a2 = apply_operator(spec, v2, mesh);
        const double margin = spec.constants.lambda_T * inner_h(v1 - v2, w_plus, mesh) +
                              inner_h(a1 - a2, w_plus, mesh);
        const double scale = std::abs(inner_h(a1, w_plus, mesh)) + std::abs(inner_h(a2, w_plus, mesh));
        return TrialOutcome{margin, scale, {std::move(v1), std::move(v2)}};
    });
}

PropertyReport check_monotonicity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                  std::uint64_t seed) {
    return run_trials("monotonicity", trials, seed, kRelTol, [&](Rng& rng, bool smooth) {
        Field v1 = random_trial_field(mesh, rng, smooth);
        Field v2 = random_trial_field(mesh, rng, smooth);
        const Field w = v1 - v2;
        const Field a1 = apply_operator(spec, v1, mesh);
        const Field a2 = apply_operator(spec, v2, mesh);
        const double margin =
            spec.constants.lambda_T * inner_h(w, w, mesh) + inner_h(a1 - a2, w, mesh);
        const double scale = std::abs(inner_h(a1, w, mesh)) + std::abs(inner_h(a2, w, mesh));
        return TrialOutcome{margin, scale, {std::move(v1), std::move(v2)}};
    });
}

PropertyReport check_coercivity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                std::uint64_t seed) {
    const auto& c = spec.constants;
    return run_trials("coercivity", trials, seed, kRelTol, [&](Rng& rng, bool smooth) {
        Field v = random_trial_field(mesh, rng, smooth);
        const double av = inner_h(apply_operator(spec, v, mesh), v, mesh);
        const double vp = std::pow(norm_v(v, spec.p, mesh), spec.p);
        const double hv = norm_h(v, mesh);
        const double margin = av + c.lambda * hv * hv + c.l1_bound - c.alpha * vp;
        return TrialOutcome{margin, std::abs(av) + c.alpha * vp, {std::move(v)}};
    });
}

PropertyReport check_growth(const OperatorSpec& spec, const Mesh& mesh, int trials,
                            std::uint64_t seed) {
    const auto& c = spec.constants;
    if (spec.p == 2.0) {
        return run_trials("growth", trials, seed, kRelTol, [&](Rng& rng, bool smooth) {
            Field v = random_trial_field(mesh, rng, smooth);
            const double lhs = dual_norm_p2(apply_operator(spec, v, mesh), mesh);
            const double rhs = c.K_bar * norm_v(v, 2.0, mesh) + c.g_bound;
            return TrialOutcome{rhs - lhs, rhs, {std::move(v)}};
        });
    }
    // Duality bound <A v, w> <= rhs |w|_V over 20 random directions w.
    return run_trials("growth", trials, seed, kRelTol, [&](Rng& rng, bool smooth) {
        Field v = random_trial_field(mesh, rng, smooth);
        const Field av = apply_operator(spec, v, mesh);
        const double rhs = c.K_bar * std::pow(norm_v(v, spec.p, mesh), spec.p - 1.0) + c.g_bound;
        TrialOutcome worst{std::numeric_limits<double>::infinity(), 0.0, {}};
        for (int k = 0; k < 20; ++k) {
            Field w = random_trial_field(mesh, rng, k % 2 == 1);
            const double bound = rhs * norm_v(w, spec.p, mesh);
            const double margin = bound - inner_h(av, w, mesh);
            if (margin / std::max(1.0, bound) < worst.margin / std::max(1.0, worst.scale)) {
                worst = TrialOutcome{margin, bound, {v, std::move(w)}};
            }
        }
        return worst;
    });
}

PropertyReport check_strong_monotonicity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                         std::uint64_t seed) {
    const auto& c = spec.constants;
    if (!c.alpha_bar) {
        return skipped_report("strong monotonicity", trials,
                              "no strong-monotonicity modulus certified (p < 2)");
    }
    const double alpha_bar = *c.alpha_bar;
    return run_trials("strong monotonicity", trials, seed, kRelTol, [&](Rng& rng, bool smooth) {
        Field v1 = random_trial_field(mesh, rng, smooth);
        Field v2 = random_trial_field(mesh, rng, smooth);
        const Field w = v1 - v2;
        const Field a1 = apply_operator(spec, v1, mesh);
        const Field a2 = apply_operator(spec, v2, mesh);
        const double lhs = inner_h(a1 - a2, w, mesh);
        const double hw = norm_h(w, mesh);
        const double rhs = alpha_bar * std::pow(norm_v(w, spec.p, mesh), spec.p) -
                           c.lambda_T * hw * hw;
        return TrialOutcome{lhs - rhs, std::abs(lhs) + std::abs(rhs), {std::move(v1), std::move(v2)}};
    });
}

PropertyReport check_hemicontinuity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                    std::uint64_t seed) {
    constexpr double kStep = 1e-6;
    constexpr double kTol = 1e-3;
    return run_trials("hemicontinuity", trials, seed, 0.0, [&](Rng& rng, bool smooth) {
        Field v1 = random_trial_field(mesh, rng, smooth);
        Field v2 = random_trial_field(mesh, rng, smooth);
        Field v = random_trial_field(mesh, rng, smooth);
        std::uniform_real_distribution<double> eta_dist(-2.0, 2.0);
        TrialOutcome worst{std::numeric_limits<double>::infinity(), 0.0, {}};
        for (int k = 0; k < 10; ++k) {
            const double eta = eta_dist(rng);
            const Field u = v1 + eta * v2;
            const double a = inner_h(apply_operator(spec, u, mesh), v, mesh);
            const double b = inner_h(apply_operator(spec, v1 + (eta + kStep) * v2, mesh), v, mesh);
            // |<A u, v>| is bounded by |u|_V^{p-1} |v|_V; a itself may cancel to zero.
            const double holder = std::pow(norm_v(u, spec.p, mesh), spec.p - 1.0) * norm_v(v, spec.p, mesh);
            const double scale = std::max({1.0, std::abs(a), holder});
            const double margin = kTol * scale - std::abs(b - a);
            if (margin / scale < worst.margin / std::max(1.0, worst.scale)) {
                worst = TrialOutcome{margin, scale, {v1, v2, v}};
            }
        }
        return worst;
    });
}

PropertyReport check_potential_identity(const OperatorSpec& spec, const Mesh& mesh, int trials,
                                        std::uint64_t seed) {
    if (spec.kind != OperatorKind::PLaplace) {
        return skipped_report("potential identity", trials, "identity only holds for the p-Laplacian");
    }
    return run_trials("potential identity", trials, seed, 0.0, [&](Rng& rng, bool smooth) {
        Field u = random_trial_field(mesh, rng, smooth);
        const double au = inner_h(apply_operator(spec, u, mesh), u, mesh);
        const double up = std::pow(norm_v(u, spec.p, mesh), spec.p);
        const double rel = std::abs(au - up) / std::max(up, std::numeric_limits<double>::min());
        return TrialOutcome{kRelTol - rel, 1.0, {std::move(u)}};
    });
}

DualOrderData dual_order_decomposition(const OperatorSpec& spec, const Mesh& mesh,
                                       const std::vector<Field>& psi, const std::vector<Field>& f,
                                       double dt) {
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    if (f.empty() || psi.size() != f.size() + 1) {
        throw DimensionError("dual order decomposition needs psi sampled one step past the forcing grid");
    }
    DualOrderData out;
    const std::size_t steps = f.size();
    out.h.reserve(steps);
    out.h_plus.reserve(steps);
    out.h_minus.reserve(steps);
    for (std::size_t n = 0; n < steps; ++n) {
        Field h = f[n] - (psi[n + 1] - psi[n]) / dt - apply_operator(spec, psi[n], mesh);
        out.h_plus.push_back(h.cwiseMax(0.0));
        out.h_minus.push_back((-h).cwiseMax(0.0));
        out.h.push_back(std::move(h));
    }
    return out;
}

}  // namespace obstacle_ldp
