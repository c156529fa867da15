#include "obstacle_ldp/spde.hpp"

#include <algorithm>
#include <cmath>

#include "obstacle_ldp/parallel.hpp"
#include "obstacle_ldp/random.hpp"

namespace obstacle_ldp {

PathResult simulate_spde(const ProblemSpec& spec, double delta, const WienerPath& w, double eps,
                         const PenaltyConfig& pcfg) {
    PenalizedSolve sol = march_penalized(spec, eps, pcfg, nullptr, delta, &w);
    PathResult out;
    out.reflection = recover_reflection(sol.trajectory, spec, eps, spec.q_tilde());
    out.trajectory = std::move(sol.trajectory);
    out.path_seed = w.seed;
    out.delta = delta;
    return out;
}

ShiftedPair simulate_shifted_pair(const ProblemSpec& spec, double delta, const WienerPath& w,
                                  const Control& c, double eps, const PenaltyConfig& pcfg) {
    if (c.radius && h0_norm_sq(c, spec.dt()) > *c.radius * (1.0 + 1e-12)) {
        throw ParameterError("control lies outside its tagged ball S_N");
    }
    ShiftedPair out;
    PenalizedSolve v = march_penalized(spec, eps, pcfg, &c, delta, &w);
    out.v.reflection = recover_reflection(v.trajectory, spec, eps, spec.q_tilde());
    out.v.trajectory = std::move(v.trajectory);
    out.v.path_seed = w.seed;
    out.v.delta = delta;
    out.u = solve_skeleton_penalized(spec, c, eps, pcfg).trajectory;
    return out;
}

CouplingGap coupling_gap(const Trajectory& v, const Trajectory& u, const Mesh& mesh, double p) {
    if (v.fields.size() != u.fields.size() || v.times != u.times) {
        throw DimensionError("coupling_gap needs trajectories on the same grid");
    }
    CouplingGap out;
    out.sup_gap = sup_gap(v, u, mesh);
    const double dt = v.dt();
    double sum = 0.0;
    for (std::size_t n = 1; n < v.fields.size(); ++n) {
        sum += dt * std::pow(norm_v(v.fields[n] - u.fields[n], p, mesh), p);
    }
    out.v_gap = std::pow(sum, 1.0 / p);
    return out;
}

namespace {

double sup_norm(const Trajectory& traj, const Mesh& mesh) {
    double s = 0.0;
    for (const auto& f : traj.fields) s = std::max(s, norm_h(f, mesh));
    return s;
}

void enforce_failure_budget(int failures, int n_paths, double max_fraction) {
    if (failures > max_fraction * n_paths) {
        throw NumericError(std::to_string(failures) + " of " + std::to_string(n_paths) +
                           " paths failed, above the allowed fraction");
    }
}

}  // namespace

BatchResult run_batch(const ProblemSpec& spec, double delta, double eps, const PenaltyConfig& pcfg,
                      const BatchOptions& opts, const PathFunctional& functional,
                      const Control* tilt) {
    if (opts.n_paths < 1) throw ParameterError("n_paths must be positive");
    if (tilt != nullptr && !(delta > 0.0)) throw ParameterError("tilted batches need delta > 0");
    BatchResult out;
    out.delta = delta;
    out.eps = eps;
    out.paths.resize(opts.n_paths);
    parallel_for(static_cast<std::size_t>(opts.n_paths), opts.jobs, [&](std::size_t i) {
        PathSummary& s = out.paths[i];
        s.index = static_cast<int>(i);
        s.seed = derive_seed(opts.master_seed, i);
        WienerPath w = sample_wiener(spec.q, spec.n_steps, spec.dt(), s.seed);
        try {
            Trajectory traj;
            if (tilt != nullptr) {
                s.log_weight = girsanov_log_density(w, *tilt, delta, spec.dt());
                traj = march_penalized(spec, eps, pcfg, tilt, delta, &w).trajectory;
            } else {
                traj = march_penalized(spec, eps, pcfg, nullptr, delta, &w).trajectory;
            }
            s.sup_norm = sup_norm(traj, spec.mesh);
            const auto [value, hit] = functional(traj);
            s.functional = value;
            s.event = hit;
            s.ok = true;
        } catch (const StepError& e) {
            s.ok = false;
            s.error = e.what();
        }
    });
    for (const auto& s : out.paths) out.failures += s.ok ? 0 : 1;
    enforce_failure_budget(out.failures, opts.n_paths, opts.max_failure_fraction);
    return out;
}

CouplingSweep couple_sweep(const ProblemSpec& spec, const Control& c,
                           const std::vector<double>& deltas, const BatchOptions& opts, double eps,
                           const PenaltyConfig& pcfg, int identity_checks) {
    if (deltas.empty()) throw ParameterError("couple_sweep needs at least one delta");
    for (double d : deltas) {
        if (!(d > 0.0)) throw ParameterError("coupling deltas must be positive");
    }
    const Trajectory u = solve_skeleton_penalized(spec, c, eps, pcfg).trajectory;
    CouplingSweep out;
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        const double delta = deltas[j];
        std::vector<double> sup_sq(opts.n_paths, 0.0), vgap(opts.n_paths, 0.0);
        std::vector<char> ok(opts.n_paths, 0);
        parallel_for(static_cast<std::size_t>(opts.n_paths), opts.jobs, [&](std::size_t i) {
            const WienerPath w =
                sample_wiener(spec.q, spec.n_steps, spec.dt(), derive_seed(opts.master_seed, i));
            try {
                const Trajectory v = march_penalized(spec, eps, pcfg, &c, delta, &w).trajectory;
                const CouplingGap g = coupling_gap(v, u, spec.mesh, spec.op.p);
                sup_sq[i] = g.sup_gap * g.sup_gap;
                vgap[i] = std::pow(g.v_gap, spec.op.p);
                ok[i] = 1;
            } catch (const StepError&) {
                ok[i] = 0;
            }
        });
        CouplingRow row;
        row.delta = delta;
        row.n_paths = opts.n_paths;
        std::vector<double> a, b;
        for (int i = 0; i < opts.n_paths; ++i) {
            if (ok[i]) {
                a.push_back(sup_sq[i]);
                b.push_back(vgap[i]);
            } else {
                ++row.failures;
            }
        }
        enforce_failure_budget(row.failures, opts.n_paths, opts.max_failure_fraction);
        row.sup_gap_sq = sample_mean(a);
        row.v_gap = sample_mean(b);
        out.rows.push_back(row);

        if (j == 0) {
            for (int i = 0; i < std::min(identity_checks, opts.n_paths); ++i) {
                const WienerPath w = sample_wiener(spec.q, spec.n_steps, spec.dt(),
                                                   derive_seed(opts.master_seed, i));
                const Trajectory v = march_penalized(spec, eps, pcfg, &c, delta, &w).trajectory;
                const PathResult shifted =
                    simulate_spde(spec, delta, girsanov_shift(w, c, delta), eps, pcfg);
                out.girsanov_identity_gap = std::max(out.girsanov_identity_gap,
                                                     sup_gap(v, shifted.trajectory, spec.mesh));
            }
        }
    }
    if (out.rows.size() >= 2) {
        std::vector<double> x, y;
        for (const auto& r : out.rows) {
            x.push_back(r.delta);
            y.push_back(r.sup_gap_sq.mean);
        }
        out.fit = fit_log_log(x, y);
    }
    return out;
}

}  // namespace obstacle_ldp
