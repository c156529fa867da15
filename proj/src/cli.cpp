#include "obstacle_ldp/cli.hpp"

#include <filesystem>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "obstacle_ldp/config.hpp"
#include "obstacle_ldp/io.hpp"
#include "obstacle_ldp/ldp.hpp"
#include "obstacle_ldp/operators.hpp"
#include "obstacle_ldp/parallel.hpp"
#include "obstacle_ldp/random.hpp"
#include "obstacle_ldp/rate.hpp"
#include "obstacle_ldp/spde.hpp"

namespace obstacle_ldp {

namespace fs = std::filesystem;

namespace {

struct Context {
    std::string command;
    RunConfig config;
    fs::path config_dir;
    fs::path out_dir;
    std::uint64_t seed = 0;
    int jobs = 0;
    std::ostream* out = nullptr;
    /// Result files written so far, relative to out_dir.
    std::vector<std::string> files;
    bool ok = true;

    fs::path file(const std::string& name) {
        files.push_back(name);
        return out_dir / name;
    }
};

RateOptions rate_options(const TaskConfig& t, int jobs) {
    RateOptions o;
    o.time_blocks = t.time_blocks;
    o.modes = t.rate_modes;
    o.mu_schedule = t.mu_schedule;
    o.max_iter = t.max_iter;
    o.jobs = jobs;
    return o;
}

BatchOptions batch_options(const Context& ctx) {
    BatchOptions o;
    o.n_paths = ctx.config.task.n_paths;
    o.master_seed = ctx.seed;
    o.jobs = ctx.jobs;
    o.max_failure_fraction = ctx.config.task.max_failure_fraction;
    return o;
}

void check_operator(Context& ctx, const ProblemSpec& spec) {
    const int trials = ctx.config.task.trials;
    const Mesh& mesh = spec.mesh;
    std::vector<PropertyReport> reports = {
        check_potential_identity(spec.op, mesh, trials, ctx.seed),
        check_t_monotonicity(spec.op, mesh, trials, ctx.seed),
        check_monotonicity(spec.op, mesh, trials, ctx.seed),
        check_coercivity(spec.op, mesh, trials, ctx.seed),
        check_growth(spec.op, mesh, trials, ctx.seed),
        check_hemicontinuity(spec.op, mesh, trials, ctx.seed),
        check_strong_monotonicity(spec.op, mesh, trials, ctx.seed),
        check_diffusion_lipschitz(spec.diffusion, spec.q, spec.psi[0], mesh, trials, ctx.seed),
        check_diffusion_growth(spec.diffusion, spec.q, spec.psi[0], mesh, trials, ctx.seed),
    };
    Json all = Json::array();
    for (const auto& r : reports) {
        all.push_back(to_json(r));
        *ctx.out << r.property << ": " << (r.skipped ? "skipped" : r.passed() ? "pass" : "FAIL")
                 << " (" << r.failures << "/" << r.trials << ")\n";
        ctx.ok = ctx.ok && r.passed();
    }
    write_json(ctx.file("operator_checks.json"), all);
}

void solve_skeleton_cmd(Context& ctx, const ProblemSpec& spec, const PenaltyConfig& pcfg) {
    const Control c = build_control(ctx.config.task.control, spec, ctx.config_dir);
    const SkeletonSolution sol = solve_skeleton(spec, c, pcfg);
    write_trajectory_csv(ctx.file("trajectory.csv"), sol.trajectory, spec.mesh);
    write_reflection_csv(ctx.file("reflection.csv"), sol.reflection, sol.trajectory.times, spec.mesh);
    const PropertyReport ls = check_lewy_stampacchia(sol.reflection, problem_dual_order(spec));
    const PropertyReport comp = check_complementarity(sol.trajectory, sol.reflection, spec);
    Json j;
    j["final_eps"] = sol.final_eps;
    j["eps_schedule"] = pcfg.eps_schedule;
    j["convergence"] = to_json(sol.log);
    j["lewy_stampacchia"] = to_json(ls);
    j["complementarity"] = to_json(comp);
    write_json(ctx.file("skeleton.json"), j);
    *ctx.out << "converged at eps = " << format_number(sol.final_eps) << "; Lewy-Stampacchia "
             << (ls.passed() ? "pass" : "FAIL") << "; complementarity "
             << (comp.passed() ? "pass" : "FAIL") << "\n";
    ctx.ok = ls.passed() && comp.passed();
}

void simulate_cmd(Context& ctx, const ProblemSpec& spec, const PenaltyConfig& pcfg) {
    const TaskConfig& t = ctx.config.task;
    const EventSpec event = build_event(t.event, spec, pcfg);
    const double eps = pcfg.final_eps();
    const BatchOptions opts = batch_options(ctx);
    const BatchResult batch = run_batch(spec, t.delta, eps, pcfg, opts, [&](const Trajectory& y) {
        return std::make_pair(event.functional(y, spec.mesh), event.contains(y, spec.mesh));
    });
    write_batch_csv(ctx.file("paths.csv"), batch);
    const WienerPath w0 = sample_wiener(spec.q, spec.n_steps, spec.dt(), derive_seed(ctx.seed, 0));
    const PathResult p0 = simulate_spde(spec, t.delta, w0, eps, pcfg);
    write_trajectory_csv(ctx.file("path0_trajectory.csv"), p0.trajectory, spec.mesh);
    write_wiener_csv(ctx.file("path0_noise.csv"), w0);
    int hits = 0;
    for (const auto& s : batch.paths) hits += (s.ok && s.event) ? 1 : 0;
    Json j;
    j["config_sha256"] = sha256_hex(serialize_config(ctx.config));
    j["delta"] = t.delta;
    j["eps"] = eps;
    j["n_paths"] = t.n_paths;
    j["master_seed"] = ctx.seed;
    j["failures"] = batch.failures;
    j["hits"] = hits;
    write_json(ctx.file("batch.json"), j);
    *ctx.out << t.n_paths << " paths at delta = " << format_number(t.delta) << ", " << batch.failures
             << " failures, " << hits << " in event\n";
}

void rate_cmd(Context& ctx, const ProblemSpec& spec, const PenaltyConfig& pcfg) {
    const TaskConfig& t = ctx.config.task;
    const EventSpec event = build_event(t.event, spec, pcfg);
    const RateRun run = minimize_rate(spec, event, rate_options(t, ctx.jobs), pcfg);
    BruteGrid grid;
    grid.modes = std::min(t.brute_modes, spec.q.K);
    grid.points = t.brute_points;
    grid.lo = t.brute_lo;
    grid.hi = t.brute_hi;
    grid.jobs = ctx.jobs;
    const BruteForceResult brute = brute_force_rate(spec, event, grid, pcfg);
    write_json(ctx.file("rate.json"), to_json(run.estimate));
    Json b = to_json(brute.estimate);
    b["evaluations"] = brute.evaluations;
    b["oracle_dominance"] = run.estimate.value <= brute.estimate.value + 1e-3;
    write_json(ctx.file("brute_force.json"), b);
    std::string trace = "mu,objective,h0_sq\n";
    for (const auto& p : run.trace) {
        trace += format_number(p.mu) + "," + format_number(p.objective) + "," + format_number(p.h0_sq) + "\n";
    }
    write_text(ctx.file("rate_trace.csv"), trace);
    *ctx.out << "rate " << format_number(run.estimate.value) << " (residual "
             << format_number(run.estimate.constraint_residual) << ", "
             << (run.estimate.converged ? "converged" : "not converged") << "); brute force "
             << format_number(brute.estimate.value) << "\n";
}

void ldp_sweep_cmd(Context& ctx, const ProblemSpec& spec, const PenaltyConfig& pcfg) {
    const TaskConfig& t = ctx.config.task;
    const EventSpec event = build_event(t.event, spec, pcfg);
    RateEstimate rate;
    if (!t.rate_file.empty()) {
        fs::path p = t.rate_file;
        if (p.is_relative()) p = ctx.config_dir / p;
        rate = read_rate_estimate(p);
    } else {
        rate = minimize_rate(spec, event, rate_options(t, ctx.jobs), pcfg).estimate;
        write_json(ctx.file("rate.json"), to_json(rate));
    }
    const double eps = pcfg.final_eps();
    const BatchOptions opts = batch_options(ctx);
    const SweepResult sweep = ldp_sweep(spec, event, t.deltas, opts, rate, eps, pcfg);
    write_sweep_csv(ctx.file("sweep.csv"), sweep);
    Json j = to_json(sweep);
    if (t.importance_sampling) {
        const ImportanceEstimate is =
            estimate_probability_tilted(spec, t.is_delta, event, rate.control, opts, eps, pcfg);
        Json isj;
        isj["delta"] = is.delta;
        isj["n_paths"] = is.n_paths;
        isj["p_hat"] = is.p_hat.mean;
        isj["std_err"] = is.p_hat.std_err;
        isj["ci_lo"] = is.ci.lo;
        isj["ci_hi"] = is.ci.hi;
        isj["weight_mean"] = is.weight_mean.mean;
        isj["weight_std_err"] = is.weight_mean.std_err;
        j["importance_sampling"] = isj;
    }
    write_json(ctx.file("sweep.json"), j);
    *ctx.out << "verdict: " << sweep.verdict << " (-I = " << format_number(sweep.neg_rate) << ")\n";
}

void weak_continuity_cmd(Context& ctx, const ProblemSpec& spec, const PenaltyConfig& pcfg) {
    const TaskConfig& t = ctx.config.task;
    const Control c = build_control(t.control, spec, ctx.config_dir);
    const ContinuityReport r = weak_continuity_probe(spec, c, t.oscillations, t.amplitude, pcfg);
    write_json(ctx.file("continuity.json"), to_json(r));
    *ctx.out << "weak continuity probe " << (r.passed ? "pass" : "FAIL") << " (final/first "
             << format_number(r.final_over_first) << ")\n";
}

void couple_cmd(Context& ctx, const ProblemSpec& spec, const PenaltyConfig& pcfg) {
    const TaskConfig& t = ctx.config.task;
    const Control c = build_control(t.control, spec, ctx.config_dir);
    const CouplingSweep s =
        couple_sweep(spec, c, t.deltas, batch_options(ctx), pcfg.final_eps(), pcfg, t.identity_checks);
    write_coupling_csv(ctx.file("coupling.csv"), s);
    write_json(ctx.file("coupling.json"), to_json(s));
    *ctx.out << "coupling slope " << format_number(s.fit.slope) << " (R^2 " << format_number(s.fit.r2)
             << "), shifted-measure gap " << format_number(s.girsanov_identity_gap) << "\n";
}

void print_plan(const Context& ctx, const ProblemSpec& spec, const PenaltyConfig& pcfg) {
    std::ostream& o = *ctx.out;
    o << "command: " << ctx.command << "\n"
      << "output: " << ctx.out_dir.string() << "\n"
      << "master_seed: " << ctx.seed << "\n"
      << "jobs: " << (ctx.jobs > 0 ? ctx.jobs : default_jobs()) << "\n"
      << "config_sha256: " << sha256_hex(serialize_config(ctx.config)) << "\n"
      << "problem: p = " << format_number(spec.op.p) << ", n_cells = " << spec.mesh.n_cells()
      << ", n_steps = " << spec.n_steps << ", T = " << format_number(spec.horizon)
      << ", K = " << spec.q.K << "\n"
      << "eps schedule:";
    for (double e : pcfg.eps_schedule) o << " " << format_number(e);
    o << "\n";
}

using Handler = void (*)(Context&, const ProblemSpec&, const PenaltyConfig&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table = {
        {"check-operator", [](Context& c, const ProblemSpec& s, const PenaltyConfig&) { check_operator(c, s); }},
        {"solve-skeleton", solve_skeleton_cmd},
        {"simulate", simulate_cmd},
        {"rate", rate_cmd},
        {"ldp-sweep", ldp_sweep_cmd},
        {"probe-weak-continuity", weak_continuity_cmd},
        {"couple", couple_cmd},
    };
    return table;
}

void write_error(const fs::path& out_dir, const std::string& kind, const std::string& message,
                 const std::vector<double>& gaps = {}) {
    if (out_dir.empty()) return;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) return;
    Json j;
    j["error"] = kind;
    j["message"] = message;
    if (!gaps.empty()) j["cauchy_gaps"] = gaps;
    try {
        write_json(out_dir / "error.json", j);
    } catch (const Error&) {
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Obstacle-problem skeleton solver and small-noise LDP harness"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string out_dir = "out";
    int jobs = 0;
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
    for (const auto& [name, handler] : handlers()) {
        (void)handler;
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "Configuration file")->required();
        sub->add_option("--out", out_dir, "Output directory (created if absent)");
        sub->add_option("--jobs", jobs, "Worker threads; 0 uses all cores")->check(CLI::NonNegativeNumber);
        sub->add_option("--seed", seed, "Master seed; overrides config and OBSTACLE_LDP_SEED");
        sub->add_flag("--dry-run", dry_run, "Validate and print the plan without computing");
    }

    std::vector<std::string> argv_store{"obstacle_ldp_cli"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    ctx.out_dir = out_dir;
    ctx.jobs = jobs;
    ctx.out = &out;
    try {
        ctx.config = load_config(config_path);
        ctx.config_dir = fs::path(config_path).parent_path();
        ctx.seed = resolve_seed(ctx.config, seed);
        const ProblemSpec spec = build_problem(ctx.config.problem, ctx.config_dir);
        const PenaltyConfig pcfg = build_penalty(ctx.config.solver);
        if (dry_run) {
            print_plan(ctx, spec, pcfg);
            return kExitOk;
        }
        fs::create_directories(ctx.out_dir);
        handlers().at(ctx.command)(ctx, spec, pcfg);
        std::map<std::string, std::string> digests;
        for (const auto& f : ctx.files) digests[f] = sha256_file(ctx.out_dir / f);
        write_manifest(ctx.out_dir / "manifest.json", ctx.config, ctx.command, ctx.seed, digests);
        return ctx.ok ? kExitOk : kExitNumerical;
    } catch (const ConfigError& e) {
        for (const auto& v : e.violations()) err << "config error: " << v << "\n";
        return kExitValidation;
    } catch (const ParameterError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DimensionError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ConvergenceError& e) {
        err << "numerical failure: " << e.what() << "\n";
        write_error(ctx.out_dir, "convergence", e.what(), e.gaps());
        return kExitNumerical;
    } catch (const StepError& e) {
        err << "numerical failure: " << e.what() << "\n";
        write_error(ctx.out_dir, "newton", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        write_error(ctx.out_dir, "numerical", e.what());
        return kExitNumerical;
    }
}

}  // namespace obstacle_ldp
