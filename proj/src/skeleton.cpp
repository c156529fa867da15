#include "obstacle_ldp/skeleton.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace obstacle_ldp {

void ProblemSpec::validate() const {
    if (n_steps < 1) throw ParameterError("n_steps must be at least 1");
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    if (static_cast<int>(psi.size()) != n_steps + 2) {
        throw DimensionError("obstacle needs n_steps + 2 samples (one past the horizon)");
    }
    if (static_cast<int>(forcing.size()) != n_steps + 1) {
        throw DimensionError("forcing needs n_steps + 1 samples");
    }
    detail::require_size(u0, mesh);
    if (q.basis.rows() != mesh.size()) throw DimensionError("noise basis does not match the mesh");
    for (const auto& f : psi) {
        detail::require_size(f, mesh);
        if (!f.allFinite()) throw NumericError("obstacle has non-finite values");
    }
    for (const auto& f : forcing) {
        detail::require_size(f, mesh);
        if (!f.allFinite()) throw NumericError("forcing has non-finite values");
    }
    if (!u0.allFinite()) throw NumericError("initial datum has non-finite values");
    if ((u0 - psi[0]).minCoeff() < 0.0) {
        throw ParameterError("initial datum must satisfy u0 >= psi(0) at every node");
    }
}

ProblemSpec make_problem(OperatorSpec op, double gamma, int modes, double lambda_decay,
                         double lambda_scale, int n_cells, double horizon, int n_steps,
                         const SpaceTimeFn& obstacle, const SpaceTimeFn& forcing,
                         const std::function<double(double)>& initial) {
    ProblemSpec spec;
    spec.op = std::move(op);
    spec.mesh = Mesh(n_cells);
    spec.horizon = horizon;
    spec.n_steps = n_steps;
    if (n_steps < 1) throw ParameterError("n_steps must be at least 1");
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    spec.q = QSpec::sine_basis(spec.mesh, modes, lambda_decay, lambda_scale);
    const double dt = horizon / n_steps;
    double psi_sup = 0.0;
    for (int n = 0; n <= n_steps + 1; ++n) {
        const double t = n * dt;
        spec.psi.push_back(sample(spec.mesh, [&](double x) { return obstacle(t, x); }));
        psi_sup = std::max(psi_sup, norm_h(spec.psi.back(), spec.mesh));
    }
    for (int n = 0; n <= n_steps; ++n) {
        const double t = n * dt;
        spec.forcing.push_back(sample(spec.mesh, [&](double x) { return forcing(t, x); }));
    }
    spec.u0 = sample(spec.mesh, initial);
    spec.diffusion = DiffusionSpec::nemytskii(gamma, spec.q, psi_sup);
    spec.validate();
    return spec;
}

double problem_scale(const ProblemSpec& spec) {
    double s = std::max(1.0, spec.u0.cwiseAbs().maxCoeff());
    for (const auto& psi : spec.psi) s = std::max(s, psi.cwiseAbs().maxCoeff());
    for (const auto& f : spec.forcing) s = std::max(s, spec.horizon * f.cwiseAbs().maxCoeff());
    return s;
}

std::vector<double> PenaltyConfig::geometric_schedule(double first, double last, double factor) {
    if (!(first > 0.0) || !(last > 0.0) || !(first >= last)) {
        throw ParameterError("epsilon schedule needs first >= last > 0");
    }
    if (!(factor > 0.0 && factor < 1.0)) throw ParameterError("epsilon factor must lie in (0, 1)");
    std::vector<double> out;
    for (double eps = first; eps >= last * (1.0 - 1e-12); eps *= factor) out.push_back(eps);
    if (out.back() > last * (1.0 + 1e-12)) out.push_back(last);
    return out;
}

void PenaltyConfig::validate() const {
    if (eps_schedule.size() < 2) throw ParameterError("epsilon schedule needs at least two values");
    for (std::size_t j = 0; j < eps_schedule.size(); ++j) {
        if (!(eps_schedule[j] > 0.0)) throw ParameterError("epsilon values must be positive");
        if (j > 0 && !(eps_schedule[j] < eps_schedule[j - 1])) {
            throw ParameterError("epsilon schedule must be strictly decreasing");
        }
    }
    if (!(newton_tol > 0.0)) throw ParameterError("newton_tol must be positive");
    if (newton_max_iter < 1) throw ParameterError("newton_max_iter must be at least 1");
    if (!(cauchy_tol > 0.0)) throw ParameterError("cauchy_tol must be positive");
}

namespace {

struct PenaltyTerms {
    Field value;       // (1/eps) s^{q-1}, s = (psi - y)^+
    Field derivative;  // d value / d(psi - y) >= 0
};

PenaltyTerms penalty_terms(const Field& y, const Field& psi, double eps, double q) {
    const Field s = (psi - y).cwiseMax(0.0);
    PenaltyTerms out{Field(y.size()), Field(y.size())};
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (s(i) <= 0.0) {
            out.value(i) = 0.0;
            out.derivative(i) = 0.0;
        } else if (q == 2.0) {
            out.value(i) = s(i) / eps;
            out.derivative(i) = 1.0 / eps;
        } else {
            out.value(i) = std::pow(s(i), q - 1.0) / eps;
            out.derivative(i) = (q - 1.0) * std::pow(std::max(s(i), 1e-14), q - 2.0) / eps;
        }
    }
    return out;
}

}  // namespace

StepResult implicit_penalized_step(const ProblemSpec& spec, const Field& y_prev,
                                   const Field& psi_new, const Field& f, const Field& drive,
                                   double dt, double eps, const PenaltyConfig& pcfg) {
    if (!(eps > 0.0)) throw ParameterError("penalty parameter eps must be positive");
    if (!(dt > 0.0)) throw ParameterError("dt must be positive");
    const Mesh& mesh = spec.mesh;
    const double q = spec.q_tilde();

    auto residual = [&](const Field& y) -> Field {
        const PenaltyTerms pen = penalty_terms(y, psi_new, eps, q);
        return y - y_prev - drive + dt * (apply_operator(spec.op, y, mesh) - pen.value - f);
    };

    // Undamped semismooth Newton first: on the stiff penalty branch a full step
    // overshoots the contact set and backtracking on |F| would crawl. If that does
    // not converge, restart from y_prev with Armijo backtracking.
    int total = 0;
    double last = 0.0;
    for (const bool damped : {false, true}) {
        Field y = y_prev;
        Field r = residual(y);
        double rnorm = norm_h(r, mesh);
        int it = 0;
        while (rnorm > pcfg.newton_tol && it < pcfg.newton_max_iter && std::isfinite(rnorm)) {
            ++it;
            const PenaltyTerms pen = penalty_terms(y, psi_new, eps, q);
            Field direction;
            if (spec.op.kind == OperatorKind::PLaplace) {
                Tridiagonal jac = p_laplace_jacobian(spec.op, y, mesh);
                jac.diag *= dt;
                jac.lower *= dt;
                jac.upper *= dt;
                jac.diag.array() += 1.0 + dt * pen.derivative.array();
                direction = solve(jac, -r);
            } else {
                Eigen::MatrixXd jac = dt * finite_difference_jacobian(spec.op, y, mesh);
                jac.diagonal().array() += 1.0 + dt * pen.derivative.array();
                direction = jac.partialPivLu().solve(-r);
            }
            double step = 1.0;
            Field trial = y + direction;
            Field r_trial = residual(trial);
            double trial_norm = norm_h(r_trial, mesh);
            while (damped && !(trial_norm <= (1.0 - 1e-4 * step) * rnorm) && step > 1.0 / 1024.0) {
                step *= 0.5;
                trial = y + step * direction;
                r_trial = residual(trial);
                trial_norm = norm_h(r_trial, mesh);
            }
            y = std::move(trial);
            r = std::move(r_trial);
            rnorm = trial_norm;
        }
        total += it;
        last = rnorm;
        if (rnorm <= pcfg.newton_tol) return StepResult{std::move(y), total, rnorm};
    }
    throw StepError("Newton did not converge (residual " + std::to_string(last) + ")", -1, last);
}

Field explicit_drive(const ProblemSpec& spec, const Field& y_n, int n, const Control* control,
                     double delta, const WienerPath* noise) {
    Field drive = Field::Zero(y_n.size());
    if (control != nullptr) {
        drive += spec.dt() * apply_truncated_diffusion(spec.diffusion, spec.q, y_n, spec.psi[n],
                                                       control->coefficients.row(n).transpose());
    }
    if (noise != nullptr && delta != 0.0) {
        drive += delta * apply_truncated_diffusion(spec.diffusion, spec.q, y_n, spec.psi[n],
                                                   noise->increments.row(n).transpose());
    }
    return drive;
}

StepResult step_penalized(const ProblemSpec& spec, int n, const Field& y_n, const Control& control,
                          double eps, const PenaltyConfig& pcfg) {
    if (n < 0 || n >= spec.n_steps) throw DimensionError("step index out of range");
    const Field drive = explicit_drive(spec, y_n, n, &control, 0.0, nullptr);
    return implicit_penalized_step(spec, y_n, spec.psi[n + 1], spec.forcing[n], drive, spec.dt(),
                                   eps, pcfg);
}

PenalizedSolve march_penalized(const ProblemSpec& spec, double eps, const PenaltyConfig& pcfg,
                               const Control* control, double delta, const WienerPath* noise) {
    if (control != nullptr &&
        (control->n_steps() != spec.n_steps || control->modes() != spec.q.K)) {
        throw DimensionError("control shape does not match (n_steps, K)");
    }
    if (noise != nullptr && (noise->n_steps() != spec.n_steps || noise->modes() != spec.q.K)) {
        throw DimensionError("Wiener path shape does not match (n_steps, K)");
    }
    if (!(delta >= 0.0)) throw ParameterError("noise scale delta must be nonnegative");
    const double dt = spec.dt();
    PenalizedSolve out;
    out.trajectory.times = time_grid(spec.horizon, spec.n_steps);
    out.trajectory.fields.reserve(spec.n_steps + 1);
    out.trajectory.fields.push_back(spec.u0);
    out.newton_iterations.reserve(spec.n_steps);
    for (int n = 0; n < spec.n_steps; ++n) {
        const Field& y_n = out.trajectory.fields.back();
        const Field drive = explicit_drive(spec, y_n, n, control, delta, noise);
        try {
            StepResult step = implicit_penalized_step(spec, y_n, spec.psi[n + 1], spec.forcing[n],
                                                      drive, dt, eps, pcfg);
            out.newton_iterations.push_back(step.iterations);
            out.trajectory.fields.push_back(std::move(step.y));
        } catch (const StepError&) {
            const Field psi_mid = 0.5 * (spec.psi[n] + spec.psi[n + 1]);
            const Field half_drive = 0.5 * drive;
            try {
                StepResult a = implicit_penalized_step(spec, y_n, psi_mid, spec.forcing[n],
                                                       half_drive, 0.5 * dt, eps, pcfg);
                StepResult b = implicit_penalized_step(spec, a.y, spec.psi[n + 1], spec.forcing[n],
                                                       half_drive, 0.5 * dt, eps, pcfg);
                ++out.halvings;
                out.newton_iterations.push_back(a.iterations + b.iterations);
                out.trajectory.fields.push_back(std::move(b.y));
            } catch (const StepError& e) {
                throw StepError("step " + std::to_string(n) + ": " + e.what(), n, e.residual());
            }
        }
    }
    return out;
}

PenalizedSolve solve_skeleton_penalized(const ProblemSpec& spec, const Control& control, double eps,
                                        const PenaltyConfig& pcfg) {
    return march_penalized(spec, eps, pcfg, &control, 0.0, nullptr);
}

ReflectionMeasure recover_reflection(const Trajectory& traj, const ProblemSpec& spec, double eps,
                                     double q_tilde) {
    if (!(eps > 0.0)) throw ParameterError("eps must be positive");
    ReflectionMeasure out;
    out.rho.reserve(traj.fields.size());
    for (std::size_t n = 0; n < traj.fields.size(); ++n) {
        const Field s = (spec.psi[n] - traj.fields[n]).cwiseMax(0.0);
        out.rho.push_back(-s.array().pow(q_tilde - 1.0).matrix() / eps);
        // pow(0, 0) is 1 when q~ = 1 is approached; keep rho zero off the violation set.
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) == 0.0) out.rho.back()(i) = 0.0;
        }
    }
    return out;
}

double penalty_mass(const Trajectory& traj, const ProblemSpec& spec, double q_tilde) {
    const double dt = spec.dt();
    double total = 0.0;
    for (std::size_t n = 1; n < traj.fields.size(); ++n) {
        const Field s = (spec.psi[n] - traj.fields[n]).cwiseMax(0.0);
        total += dt * spec.mesh.h() * s.array().pow(q_tilde).sum();
    }
    return total;
}

double energy_functional(const Trajectory& traj, const ProblemSpec& spec) {
    const double dt = spec.dt();
    double sup = 0.0;
    double integral = 0.0;
    for (std::size_t n = 0; n < traj.fields.size(); ++n) {
        const double hn = norm_h(traj.fields[n], spec.mesh);
        sup = std::max(sup, hn * hn);
        if (n > 0) integral += dt * std::pow(norm_v(traj.fields[n], spec.op.p, spec.mesh), spec.op.p);
    }
    return sup + spec.op.constants.alpha * integral;
}

double complementarity_pairing(const Trajectory& traj, const ReflectionMeasure& rho,
                               const ProblemSpec& spec) {
    if (rho.rho.size() != traj.fields.size()) throw DimensionError("reflection/trajectory length mismatch");
    const double dt = spec.dt();
    double total = 0.0;
    for (std::size_t n = 1; n < traj.fields.size(); ++n) {
        total += dt * inner_h(rho.rho[n], traj.fields[n] - spec.psi[n], spec.mesh);
    }
    return total;
}

double sup_gap(const Trajectory& a, const Trajectory& b, const Mesh& mesh) {
    if (a.fields.size() != b.fields.size()) throw DimensionError("trajectories have different lengths");
    double gap = 0.0;
    for (std::size_t n = 0; n < a.fields.size(); ++n) {
        gap = std::max(gap, norm_h(a.fields[n] - b.fields[n], mesh));
    }
    return gap;
}

SkeletonSolution solve_skeleton(const ProblemSpec& spec, const Control& control,
                                const PenaltyConfig& pcfg) {
    pcfg.validate();
    const double q = spec.q_tilde();
    SkeletonSolution out;
    ConvergenceLog& log = out.log;
    Trajectory previous;
    for (std::size_t j = 0; j < pcfg.eps_schedule.size(); ++j) {
        const double eps = pcfg.eps_schedule[j];
        PenalizedSolve sol = solve_skeleton_penalized(spec, control, eps, pcfg);
        const ReflectionMeasure rho = recover_reflection(sol.trajectory, spec, eps, q);
        log.eps.push_back(eps);
        log.penalty_mass.push_back(penalty_mass(sol.trajectory, spec, q));
        log.pairing.push_back(complementarity_pairing(sol.trajectory, rho, spec));
        log.energy.push_back(energy_functional(sol.trajectory, spec));
        int iters = 0;
        for (int k : sol.newton_iterations) iters += k;
        log.newton_iterations.push_back(iters);
        bool done = false;
        if (j > 0) {
            const double gap = sup_gap(previous, sol.trajectory, spec.mesh);
            log.gaps.push_back(gap);
            done = pcfg.stop_early && gap <= pcfg.cauchy_tol;
        }
        out.trajectory = sol.trajectory;
        out.reflection = rho;
        out.final_eps = eps;
        previous = std::move(sol.trajectory);
        if (done) break;
    }
    log.converged = !log.gaps.empty() && log.gaps.back() <= pcfg.cauchy_tol;
    if (!log.converged) {
        throw ConvergenceError("epsilon schedule exhausted without meeting cauchy_tol", log.gaps);
    }
    return out;
}

PropertyReport check_lewy_stampacchia(const ReflectionMeasure& rho, const DualOrderData& dod) {
    const std::size_t steps = std::min(rho.rho.size(), dod.h_minus.size());
    if (steps == 0) throw DimensionError("Lewy-Stampacchia check needs matching grids");
    double max_h_minus = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
        if (rho.rho[n].size() != dod.h_minus[n].size()) throw DimensionError("field size mismatch");
        max_h_minus = std::max(max_h_minus, dod.h_minus[n].maxCoeff());
    }
    const double scale = std::max(1.0, max_h_minus);
    const double ls_tol = std::max(1e-6, 0.02 * max_h_minus);
    const double lower_tol = 1e-8 * scale;

    PropertyReport report;
    report.property = "Lewy-Stampacchia";
    report.min_margin = std::numeric_limits<double>::infinity();
    double worst_upper = std::numeric_limits<double>::infinity();
    double worst_lower = std::numeric_limits<double>::infinity();
    double max_reaction = 0.0;
    int worst_n = -1;
    int worst_i = -1;
    for (std::size_t n = 0; n < steps; ++n) {
        for (Eigen::Index i = 0; i < rho.rho[n].size(); ++i) {
            const double reaction = -rho.rho[n](i);
            const double lower = reaction;
            const double upper = dod.h_minus[n](i) - reaction;
            max_reaction = std::max(max_reaction, reaction);
            ++report.trials;
            const double margin = std::min(lower + lower_tol, upper + ls_tol);
            if (margin < report.min_margin) {
                report.min_margin = margin;
                worst_n = static_cast<int>(n);
                worst_i = static_cast<int>(i);
            }
            worst_upper = std::min(worst_upper, upper);
            worst_lower = std::min(worst_lower, lower);
            if (lower < -lower_tol || upper < -ls_tol) ++report.failures;
        }
    }
    report.metrics = {{"ls_tol", ls_tol},
                      {"max_h_minus", max_h_minus},
                      {"max_reaction", max_reaction},
                      {"worst_upper_margin", worst_upper},
                      {"worst_lower_margin", worst_lower},
                      {"worst_step", worst_n},
                      {"worst_node", worst_i}};
    return report;
}

PropertyReport check_complementarity(const Trajectory& traj, const ReflectionMeasure& rho,
                                     const ProblemSpec& spec) {
    if (rho.rho.size() != traj.fields.size()) throw DimensionError("reflection/trajectory length mismatch");
    const double scale = problem_scale(spec);
    const double constraint_tol = 1e-6 * scale;
    const double dt = spec.dt();
    PropertyReport report;
    report.property = "complementarity";
    double min_gap = std::numeric_limits<double>::infinity();
    double rho_sq = 0.0;
    double gap_sq = 0.0;
    for (std::size_t n = 0; n < traj.fields.size(); ++n) {
        const Field gap = traj.fields[n] - spec.psi[n];
        const double local_min = gap.minCoeff();
        min_gap = std::min(min_gap, local_min);
        for (Eigen::Index i = 0; i < gap.size(); ++i) {
            ++report.trials;
            if (gap(i) < -constraint_tol) ++report.failures;
        }
        if (n > 0) {
            const double a = norm_h(rho.rho[n], spec.mesh);
            const double b = norm_h(gap, spec.mesh);
            rho_sq += dt * a * a;
            gap_sq += dt * b * b;
        }
    }
    const double pairing = complementarity_pairing(traj, rho, spec);
    const double comp_tol = 1e-5 * (std::sqrt(rho_sq) * std::sqrt(gap_sq) + 1.0);
    ++report.trials;
    if (pairing < -comp_tol) ++report.failures;
    report.min_margin = std::min(min_gap + constraint_tol, pairing + comp_tol);
    report.metrics = {{"pairing", pairing},
                      {"comp_tol", comp_tol},
                      {"min_gap", min_gap},
                      {"constraint_tol", constraint_tol},
                      {"scale", scale}};
    return report;
}

DualOrderData problem_dual_order(const ProblemSpec& spec) {
    return dual_order_decomposition(spec.op, spec.mesh, spec.psi, spec.forcing, spec.dt());
}

namespace {

StabilityReport compare(const ProblemSpec& spec, const Trajectory& y1, const Trajectory& y2,
                        const Control& c1, const Control& c2) {
    if (c1.n_steps() != c2.n_steps() || c1.modes() != c2.modes()) {
        throw DimensionError("controls have different shapes");
    }
    StabilityReport r;
    const double g = sup_gap(y1, y2, spec.mesh);
    r.sup_gap_sq = g * g;
    r.control_dist_sq = h0_norm_sq(Control{c1.coefficients - c2.coefficients, std::nullopt}, spec.dt());
    for (std::size_t n = 1; n < y1.fields.size(); ++n) {
        r.v_gap += spec.dt() * std::pow(norm_v(y1.fields[n] - y2.fields[n], spec.op.p, spec.mesh), spec.op.p);
    }
    if (r.control_dist_sq > 0.0) {
        r.ratio = r.sup_gap_sq / r.control_dist_sq;
        r.v_ratio = r.v_gap / r.control_dist_sq;
    }
    return r;
}

}  // namespace

StabilityReport stability_gap(const ProblemSpec& spec, const Control& c1, const Control& c2,
                              const PenaltyConfig& pcfg) {
    const SkeletonSolution s1 = solve_skeleton(spec, c1, pcfg);
    const SkeletonSolution s2 = solve_skeleton(spec, c2, pcfg);
    return compare(spec, s1.trajectory, s2.trajectory, c1, c2);
}

StabilityReport stability_gap(const ProblemSpec& spec1, const ProblemSpec& spec2,
                              const Control& c1, const Control& c2, const PenaltyConfig& pcfg) {
    if (spec1.op.p != 2.0 || spec2.op.p != 2.0) {
        throw ParameterError("forcing perturbation bound uses the H^-1 norm and needs p = 2");
    }
    if (!(spec1.mesh == spec2.mesh) || spec1.n_steps != spec2.n_steps) {
        throw DimensionError("perturbed problems must share their grids");
    }
    const SkeletonSolution s1 = solve_skeleton(spec1, c1, pcfg);
    const SkeletonSolution s2 = solve_skeleton(spec2, c2, pcfg);
    StabilityReport r = compare(spec1, s1.trajectory, s2.trajectory, c1, c2);
    const double dt = spec1.dt();
    double f_sq = 0.0;
    for (int n = 0; n < spec1.n_steps; ++n) {
        const double d = dual_norm_p2(spec1.forcing[n] - spec2.forcing[n], spec1.mesh);
        f_sq += dt * d * d;
    }
    double y_sq = 0.0;
    for (int n = 1; n <= spec1.n_steps; ++n) {
        const double v = norm_v(s1.trajectory.fields[n] - s2.trajectory.fields[n], 2.0, spec1.mesh);
        y_sq += dt * v * v;
    }
    r.forcing_term = std::sqrt(f_sq) * std::sqrt(y_sq);
    return r;
}

}  // namespace obstacle_ldp
