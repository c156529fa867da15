#include "obstacle_ldp/rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "obstacle_ldp/parallel.hpp"
#include "obstacle_ldp/spde.hpp"

namespace obstacle_ldp {

EventSpec EventSpec::ball(Field center, double radius) {
    if (!(radius > 0.0)) throw ParameterError("ball events need radius > 0");
    EventSpec e;
    e.kind = Kind::TerminalBall;
    e.center = std::move(center);
    e.radius = radius;
    return e;
}

EventSpec EventSpec::mean_above(double threshold) {
    if (!std::isfinite(threshold)) throw ParameterError("mean threshold must be finite");
    EventSpec e;
    e.kind = Kind::TerminalMeanAbove;
    e.threshold = threshold;
    return e;
}

double EventSpec::functional(const Trajectory& traj, const Mesh& mesh) const {
    if (kind == Kind::TerminalBall) return norm_h(traj.terminal() - center, mesh);
    return integral_h(traj.terminal(), mesh);
}

double EventSpec::distance(const Trajectory& traj, const Mesh& mesh) const {
    const double v = functional(traj, mesh);
    if (kind == Kind::TerminalBall) return std::max(0.0, v - radius);
    return std::max(0.0, threshold - v);
}

bool EventSpec::contains(const Trajectory& traj, const Mesh& mesh) const {
    const double v = functional(traj, mesh);
    return kind == Kind::TerminalBall ? v <= radius : v >= threshold;
}

double rate_value(const Control& c, double dt) { return 0.5 * h0_norm_sq(c, dt); }

Control BlockParametrization::expand(const Eigen::VectorXd& params) const {
    if (params.size() != size()) throw DimensionError("parameter vector has the wrong length");
    Control c = Control::zero(n_steps, K);
    for (int n = 0; n < n_steps; ++n) {
        const int b = std::min(blocks - 1, n * blocks / n_steps);
        for (int k = 0; k < modes; ++k) c.coefficients(n, k) = params(b * modes + k);
    }
    return c;
}

Trajectory rate_skeleton(const ProblemSpec& spec, const Control& c, const PenaltyConfig& pcfg) {
    return solve_skeleton_penalized(spec, c, pcfg.final_eps(), pcfg).trajectory;
}

namespace {

struct Objective {
    const ProblemSpec& spec;
    const EventSpec& event;
    const PenaltyConfig& pcfg;
    const BlockParametrization& param;

    struct Value {
        double j = 0.0;
        double h0_sq = 0.0;
        double dist = 0.0;
    };

    Value eval(const Eigen::VectorXd& x, double mu) const {
        const Control c = param.expand(x);
        const Trajectory y = rate_skeleton(spec, c, pcfg);
        Value v;
        v.h0_sq = h0_norm_sq(c, spec.dt());
        v.dist = event.distance(y, spec.mesh);
        v.j = 0.5 * v.h0_sq + mu * v.dist * v.dist;
        return v;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& x, double mu, double fd_step, int jobs) const {
        const double step = fd_step * std::max(1.0, x.cwiseAbs().maxCoeff());
        const Eigen::Index n = x.size();
        std::vector<double> plus(n), minus(n);
        parallel_for(static_cast<std::size_t>(2 * n), jobs, [&](std::size_t idx) {
            const Eigen::Index i = static_cast<Eigen::Index>(idx / 2);
            Eigen::VectorXd xp = x;
            if (idx % 2 == 0) {
                xp(i) += step;
                plus[i] = eval(xp, mu).j;
            } else {
                xp(i) -= step;
                minus[i] = eval(xp, mu).j;
            }
        });
        Eigen::VectorXd g(n);
        for (Eigen::Index i = 0; i < n; ++i) g(i) = (plus[i] - minus[i]) / (2.0 * step);
        return g;
    }
};

}  // namespace

RateRun minimize_rate(const ProblemSpec& spec, const EventSpec& event, const RateOptions& opts,
                      const PenaltyConfig& pcfg) {
    if (opts.time_blocks < 1 || opts.time_blocks > spec.n_steps) {
        throw ParameterError("time_blocks must lie in [1, n_steps]");
    }
    if (opts.mu_schedule.empty()) throw ParameterError("mu schedule is empty");
    for (double mu : opts.mu_schedule) {
        if (!(mu > 0.0)) throw ParameterError("mu values must be positive");
    }
    BlockParametrization param;
    param.n_steps = spec.n_steps;
    param.K = spec.q.K;
    param.blocks = opts.time_blocks;
    param.modes = opts.modes <= 0 ? spec.q.K : std::min(opts.modes, spec.q.K);
    const Objective obj{spec, event, pcfg, param};
    const double block_len = spec.horizon / param.blocks;

    RateRun run;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(param.size());
    int total_iter = 0;
    bool stalled_at_max = false;
    for (double mu : opts.mu_schedule) {
        Objective::Value fx = obj.eval(x, mu);
        Eigen::VectorXd g = obj.gradient(x, mu, opts.fd_step, opts.jobs);
        Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(x.size(), x.size()) / block_len;
        run.trace.push_back({mu, fx.j, fx.h0_sq});
        int it = 0;
        for (; it < opts.max_iter; ++it) {
            if (g.cwiseAbs().maxCoeff() <= opts.grad_tol) break;
            Eigen::VectorXd d = -hinv * g;
            if (g.dot(d) >= 0.0) {
                hinv = Eigen::MatrixXd::Identity(x.size(), x.size()) / block_len;
                d = -hinv * g;
            }
            double t = 1.0;
            Eigen::VectorXd x_new = x + d;
            Objective::Value f_new = obj.eval(x_new, mu);
            while (f_new.j > fx.j + 1e-4 * t * g.dot(d) && t > 1e-10) {
                t *= 0.5;
                x_new = x + t * d;
                f_new = obj.eval(x_new, mu);
            }
            if (!(f_new.j < fx.j)) break;
            const Eigen::VectorXd g_new = obj.gradient(x_new, mu, opts.fd_step, opts.jobs);
            const Eigen::VectorXd s = x_new - x;
            const Eigen::VectorXd yv = g_new - g;
            const double sy = s.dot(yv);
            if (sy > 1e-12 * s.norm() * yv.norm()) {
                const double rho = 1.0 / sy;
                const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(x.size(), x.size());
                hinv = (eye - rho * s * yv.transpose()) * hinv * (eye - rho * yv * s.transpose()) +
                       rho * s * s.transpose();
            }
            const double decrease = fx.j - f_new.j;
            x = std::move(x_new);
            fx = f_new;
            g = g_new;
            run.trace.push_back({mu, fx.j, fx.h0_sq});
            if (decrease <= 1e-14 * std::max(1.0, std::abs(fx.j))) break;
        }
        stalled_at_max = it >= opts.max_iter;
        total_iter += it;
    }

    const Control best = param.expand(x);
    const Trajectory y = rate_skeleton(spec, best, pcfg);
    run.estimate.control = best;
    run.estimate.value = rate_value(best, spec.dt());
    run.estimate.constraint_residual = event.distance(y, spec.mesh);
    run.estimate.iterations = total_iter;
    run.estimate.converged = run.estimate.constraint_residual <= opts.event_tol && !stalled_at_max;
    return run;
}

std::vector<double> BruteGrid::values() const {
    if (points < 1) throw ParameterError("brute-force grid needs at least one point");
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) {
        v[i] = points == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (points - 1);
    }
    return v;
}

BruteForceResult brute_force_rate(const ProblemSpec& spec, const EventSpec& event,
                                  const BruteGrid& grid, const PenaltyConfig& pcfg) {
    if (grid.modes < 1 || grid.modes > 2) throw ParameterError("brute force searches 1 or 2 modes");
    if (grid.modes > spec.q.K) throw ParameterError("brute force modes exceed K");
    const std::vector<double> values = grid.values();
    long total = 1;
    for (int k = 0; k < grid.modes; ++k) {
        total *= grid.points;
        if (total > grid.max_evaluations) throw ParameterError("brute-force grid exceeds the guard");
    }
    auto control_at = [&](long idx) {
        Control c = Control::zero(spec.n_steps, spec.q.K);
        long rest = idx;
        for (int k = grid.modes - 1; k >= 0; --k) {
            c.coefficients.col(k).setConstant(values[rest % grid.points]);
            rest /= grid.points;
        }
        return c;
    };
    BruteForceResult out;
    out.evaluations = total;
    out.distances.assign(total, 0.0);
    parallel_for(static_cast<std::size_t>(total), grid.jobs, [&](std::size_t idx) {
        const Trajectory y = rate_skeleton(spec, control_at(static_cast<long>(idx)), pcfg);
        out.distances[idx] = event.distance(y, spec.mesh);
    });
    long best = -1;
    double best_value = std::numeric_limits<double>::infinity();
    for (long idx = 0; idx < total; ++idx) {
        if (out.distances[idx] > 0.0) continue;
        const double v = rate_value(control_at(idx), spec.dt());
        if (v < best_value) {
            best_value = v;
            best = idx;
        }
    }
    out.estimate.iterations = static_cast<int>(total);
    if (best < 0) {
        out.estimate.value = std::numeric_limits<double>::infinity();
        out.estimate.control = Control::zero(spec.n_steps, spec.q.K);
        out.estimate.constraint_residual =
            *std::min_element(out.distances.begin(), out.distances.end());
        out.estimate.converged = false;
        return out;
    }
    out.estimate.control = control_at(best);
    out.estimate.value = best_value;
    out.estimate.constraint_residual = 0.0;
    out.estimate.converged = true;
    for (int k = 0; k < grid.modes; ++k) out.argmin.push_back(out.estimate.control.coefficients(0, k));
    return out;
}

ContinuityReport weak_continuity_probe(const ProblemSpec& spec, const Control& c,
                                       const std::vector<int>& n_list, double amplitude,
                                       const PenaltyConfig& pcfg) {
    if (n_list.empty()) throw ParameterError("n_list is empty");
    if (c.n_steps() != spec.n_steps || c.modes() != spec.q.K) {
        throw DimensionError("control shape does not match (n_steps, K)");
    }
    const bool with_v = spec.op.constants.alpha_bar.has_value();
    const Trajectory base = rate_skeleton(spec, c, pcfg);
    ContinuityReport out;
    out.n_list = n_list;
    out.gaps_h.resize(n_list.size());
    if (with_v) out.gaps_t.resize(n_list.size());
    const double dt = spec.dt();
    parallel_for(n_list.size(), 0, [&](std::size_t j) {
        Control cn = c;
        cn.radius.reset();
        for (int n = 0; n < spec.n_steps; ++n) {
            const double t = (n + 0.5) * dt;
            cn.coefficients(n, 0) +=
                amplitude * std::sin(2.0 * std::numbers::pi * n_list[j] * t / spec.horizon);
        }
        const Trajectory y = rate_skeleton(spec, cn, pcfg);
        const CouplingGap g = coupling_gap(y, base, spec.mesh, spec.op.p);
        out.gaps_h[j] = g.sup_gap;
        if (with_v) out.gaps_t[j] = g.sup_gap + g.v_gap;
    });
    auto strictly_decreasing = [](const std::vector<double>& v) {
        for (std::size_t j = 1; j < v.size(); ++j) {
            if (!(v[j] < v[j - 1])) return false;
        }
        return true;
    };
    auto ratio = [](const std::vector<double>& v) { return v.front() > 0.0 ? v.back() / v.front() : 0.0; };
    out.decreasing = strictly_decreasing(out.gaps_h) && (!with_v || strictly_decreasing(out.gaps_t));
    out.final_over_first = ratio(out.gaps_h);
    if (with_v) out.final_over_first = std::max(out.final_over_first, ratio(out.gaps_t));
    out.passed = out.decreasing && out.final_over_first <= 0.1;
    return out;
}

}  // namespace obstacle_ldp
