#pragma once

#include <functional>
#include <vector>

#include "obstacle_ldp/mesh.hpp"
#include "obstacle_ldp/noise.hpp"
#include "obstacle_ldp/operators.hpp"

namespace obstacle_ldp {

/// (t, x) -> value
using SpaceTimeFn = std::function<double(double, double)>;

/// Complete discrete obstacle problem: operator, noise structure, data and grids.
struct ProblemSpec {
    OperatorSpec op;
    DiffusionSpec diffusion;
    QSpec q;
    Mesh mesh{4};
    double horizon = 1.0;
    int n_steps = 1;
    /// Obstacle at t_n, n = 0..n_steps+1 (one sample past the horizon).
    std::vector<Field> psi;
    /// Forcing at t_n, n = 0..n_steps.
    std::vector<Field> forcing;
    Field u0;

    double dt() const { return horizon / n_steps; }
    double q_tilde() const { return std::min(2.0, op.p); }

    /// Throws ParameterError/DimensionError if shapes, finiteness or u0 >= psi(0) fail.
    void validate() const;
};

/// Samples analytic data onto the grids. The diffusion constants are certified
/// from gamma, Q and the sampled obstacle.
ProblemSpec make_problem(OperatorSpec op, double gamma, int modes, double lambda_decay,
                         double lambda_scale, int n_cells, double horizon, int n_steps,
                         const SpaceTimeFn& obstacle, const SpaceTimeFn& forcing,
                         const std::function<double(double)>& initial);

/// max(1, |u0|_inf, sup |psi|_inf, T sup |f|_inf): the magnitude tolerances refer to.
double problem_scale(const ProblemSpec& spec);

struct PenaltyConfig {
    std::vector<double> eps_schedule = geometric_schedule(1e-1, 1e-5, 0.25);
    double newton_tol = 1e-10;
    int newton_max_iter = 50;
    double cauchy_tol = 1e-3;
    /// Stop the continuation at the first Cauchy gap below cauchy_tol.
    bool stop_early = true;

    double final_eps() const { return eps_schedule.back(); }

    /// first, first*factor, ... while >= last, then `last` itself if not hit exactly.
    static std::vector<double> geometric_schedule(double first, double last, double factor);

    void validate() const;
};

/// Nodal multiplier values rho[n][i] <= 0, n = 0..n_steps.
struct ReflectionMeasure {
    std::vector<Field> rho;
};

struct StepResult {
    Field y;
    int iterations = 0;
    double residual = 0.0;
};

/// One backward-Euler step of the penalized equation
///   y - y_prev - drive + dt [A(y) - (1/eps) ((y - psi_new)^-)^{q~-1} - f] = 0,
/// solved by semismooth Newton (full steps, then a damped restart if those stall).
/// `drive` holds the explicitly evaluated control/noise terms.
StepResult implicit_penalized_step(const ProblemSpec& spec, const Field& y_prev,
                                   const Field& psi_new, const Field& f, const Field& drive,
                                   double dt, double eps, const PenaltyConfig& pcfg);

/// Explicit drive for step n: dt G~(y_n) phi_n + delta G~(y_n) dW_n, with
/// G~(y) = G(max(y, psi)). Missing pieces contribute nothing.
Field explicit_drive(const ProblemSpec& spec, const Field& y_n, int n, const Control* control,
                     double delta, const WienerPath* noise);

/// Step n -> n+1 of the controlled penalized skeleton (noise-free).
StepResult step_penalized(const ProblemSpec& spec, int n, const Field& y_n, const Control& control,
                          double eps, const PenaltyConfig& pcfg);

struct PenalizedSolve {
    Trajectory trajectory;
    std::vector<int> newton_iterations;
    /// Steps that needed the one-time dt halving.
    int halvings = 0;
};

/// Marches the penalized scheme over [0, T] with optional control and noise.
/// Newton failure on a step is retried once with two half steps before a StepError.
PenalizedSolve march_penalized(const ProblemSpec& spec, double eps, const PenaltyConfig& pcfg,
                               const Control* control, double delta, const WienerPath* noise);

PenalizedSolve solve_skeleton_penalized(const ProblemSpec& spec, const Control& control, double eps,
                                        const PenaltyConfig& pcfg);

/// rho[n] = -(1/eps) ((y_n - psi_n)^-)^{q~-1}
ReflectionMeasure recover_reflection(const Trajectory& traj, const ProblemSpec& spec, double eps,
                                     double q_tilde);

/// dt h sum_{n>=1} sum_i ((y_n - psi_n)^-)^{q~}
double penalty_mass(const Trajectory& traj, const ProblemSpec& spec, double q_tilde);

/// sup_n |y_n|_H^2 + alpha sum_n dt |y_n|_V^p
double energy_functional(const Trajectory& traj, const ProblemSpec& spec);

/// dt h sum_{n>=1} sum_i rho (y - psi); each summand is >= 0 (rho <= 0 only where y < psi).
double complementarity_pairing(const Trajectory& traj, const ReflectionMeasure& rho,
                               const ProblemSpec& spec);

/// sup_n |a_n - b_n|_H
double sup_gap(const Trajectory& a, const Trajectory& b, const Mesh& mesh);

struct ConvergenceLog {
    std::vector<double> eps;
    /// gaps[j] = sup_n |y^{eps_j} - y^{eps_{j+1}}|_H
    std::vector<double> gaps;
    std::vector<double> penalty_mass;
    std::vector<double> pairing;
    std::vector<double> energy;
    std::vector<int> newton_iterations;
    bool converged = false;
};

struct SkeletonSolution {
    Trajectory trajectory;
    ReflectionMeasure reflection;
    ConvergenceLog log;
    double final_eps = 0.0;
};

/// Epsilon continuation of solve_skeleton_penalized until consecutive solutions
/// are cauchy_tol-close in C([0,T]; H). Throws ConvergenceError otherwise.
SkeletonSolution solve_skeleton(const ProblemSpec& spec, const Control& control,
                                const PenaltyConfig& pcfg);

/// Nodal bound -1e-8 scale <= -rho <= h^- + ls_tol, ls_tol = max(1e-6, 0.02 max h^-).
PropertyReport check_lewy_stampacchia(const ReflectionMeasure& rho, const DualOrderData& dod);

/// y >= psi - 1e-6 scale and pairing >= -1e-5 (|rho| |y - psi| + 1).
PropertyReport check_complementarity(const Trajectory& traj, const ReflectionMeasure& rho,
                                     const ProblemSpec& spec);

/// Dual order data of the problem's own obstacle and forcing.
DualOrderData problem_dual_order(const ProblemSpec& spec);

struct StabilityReport {
    double sup_gap_sq = 0.0;
    double control_dist_sq = 0.0;
    double ratio = 0.0;
    /// sum_n dt |y1 - y2|_V^p and its ratio to control_dist_sq.
    double v_gap = 0.0;
    double v_ratio = 0.0;
    /// |f1 - f2|_{L2(V')} |y1 - y2|_{L2(V)}; only set for p = 2.
    double forcing_term = 0.0;
};

StabilityReport stability_gap(const ProblemSpec& spec, const Control& c1, const Control& c2,
                              const PenaltyConfig& pcfg);

/// Same, with a second problem differing in its forcing (p = 2 only).
StabilityReport stability_gap(const ProblemSpec& spec1, const ProblemSpec& spec2,
                              const Control& c1, const Control& c2, const PenaltyConfig& pcfg);

}  // namespace obstacle_ldp
