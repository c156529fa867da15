#include "obstacle_ldp/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <Eigen/Core>
#include "json.hpp"
#include "obstacle_ldp/io.hpp"

namespace obstacle_ldp {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::string format_double(double v) {
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtod(t.c_str(), &end);
    return errno == 0 && end == t.c_str() + t.size();
}

template <typename Int>
bool parse_int(const std::string& s, Int& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
    return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

bool parse_bool(const std::string& s, bool& out) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes") {
        out = true;
        return true;
    }
    if (t == "false" || t == "0" || t == "no") {
        out = false;
        return true;
    }
    return false;
}

template <typename T, typename Parse>
bool parse_list(const std::string& s, std::vector<T>& out, Parse parse) {
    out.clear();
    if (trim(s).empty()) return true;
    for (const auto& item : split(s, ',')) {
        T v{};
        if (!parse(item, v)) return false;
        out.push_back(v);
    }
    return true;
}

template <typename T, typename Fmt>
std::string format_list(const std::vector<T>& v, Fmt fmt) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ", ";
        out += fmt(v[i]);
    }
    return out;
}

/// One configurable key: how to read it from text and how to write it back.
struct Binding {
    std::string section;
    std::string key;
    std::function<bool(RunConfig&, const std::string&)> read;
    std::function<std::string(const RunConfig&)> write;
    std::string expects;
};

#define DOUBLE_KEY(SEC, BLOCK, NAME)                                                          \
    Binding {                                                                                 \
        SEC, #NAME, [](RunConfig& c, const std::string& v) { return parse_double(v, c.BLOCK.NAME); }, \
            [](const RunConfig& c) { return format_double(c.BLOCK.NAME); }, "a number"        \
    }
#define INT_KEY(SEC, BLOCK, NAME)                                                              \
    Binding {                                                                                  \
        SEC, #NAME, [](RunConfig& c, const std::string& v) { return parse_int(v, c.BLOCK.NAME); }, \
            [](const RunConfig& c) { return std::to_string(c.BLOCK.NAME); }, "an integer"      \
    }
#define STRING_KEY(SEC, BLOCK, NAME)                                                       \
    Binding {                                                                              \
        SEC, #NAME,                                                                        \
            [](RunConfig& c, const std::string& v) {                                       \
                c.BLOCK.NAME = trim(v);                                                    \
                return true;                                                               \
            },                                                                             \
            [](const RunConfig& c) { return c.BLOCK.NAME; }, "text"                        \
    }
#define BOOL_KEY(SEC, BLOCK, NAME)                                                               \
    Binding {                                                                                    \
        SEC, #NAME, [](RunConfig& c, const std::string& v) { return parse_bool(v, c.BLOCK.NAME); }, \
            [](const RunConfig& c) { return std::string(c.BLOCK.NAME ? "true" : "false"); },     \
            "true or false"                                                                      \
    }
#define DOUBLE_LIST_KEY(SEC, BLOCK, NAME)                                                        \
    Binding {                                                                                    \
        SEC, #NAME,                                                                              \
            [](RunConfig& c, const std::string& v) {                                             \
                return parse_list<double>(v, c.BLOCK.NAME,                                       \
                                          [](const std::string& s, double& x) { return parse_double(s, x); }); \
            },                                                                                   \
            [](const RunConfig& c) { return format_list(c.BLOCK.NAME, format_double); },        \
            "a comma separated list of numbers"                                                  \
    }

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = {
        Binding{"", "master_seed",
                [](RunConfig& c, const std::string& v) { return parse_int(v, c.master_seed); },
                [](const RunConfig& c) { return std::to_string(c.master_seed); },
                "an unsigned 64-bit integer"},
        DOUBLE_KEY("problem", problem, p),
        DOUBLE_KEY("problem", problem, gamma),
        INT_KEY("problem", problem, modes),
        DOUBLE_KEY("problem", problem, lambda_decay),
        DOUBLE_KEY("problem", problem, lambda_scale),
        INT_KEY("problem", problem, n_cells),
        INT_KEY("problem", problem, n_steps),
        DOUBLE_KEY("problem", problem, horizon),
        STRING_KEY("problem", problem, obstacle),
        STRING_KEY("problem", problem, forcing),
        STRING_KEY("problem", problem, initial),
        DOUBLE_KEY("solver", solver, eps_first),
        DOUBLE_KEY("solver", solver, eps_last),
        DOUBLE_KEY("solver", solver, eps_factor),
        DOUBLE_LIST_KEY("solver", solver, eps_schedule),
        DOUBLE_KEY("solver", solver, newton_tol),
        INT_KEY("solver", solver, newton_max_iter),
        DOUBLE_KEY("solver", solver, cauchy_tol),
        BOOL_KEY("solver", solver, stop_early),
        INT_KEY("task", task, trials),
        DOUBLE_LIST_KEY("task", task, deltas),
        DOUBLE_KEY("task", task, delta),
        INT_KEY("task", task, n_paths),
        DOUBLE_KEY("task", task, max_failure_fraction),
        STRING_KEY("task", task, event),
        STRING_KEY("task", task, control),
        STRING_KEY("task", task, rate_file),
        Binding{"task", "oscillations",
                [](RunConfig& c, const std::string& v) {
                    return parse_list<int>(v, c.task.oscillations,
                                           [](const std::string& s, int& x) { return parse_int(s, x); });
                },
                [](const RunConfig& c) {
                    return format_list(c.task.oscillations, [](int x) { return std::to_string(x); });
                },
                "a comma separated list of integers"},
        DOUBLE_KEY("task", task, amplitude),
        INT_KEY("task", task, time_blocks),
        INT_KEY("task", task, rate_modes),
        DOUBLE_LIST_KEY("task", task, mu_schedule),
        INT_KEY("task", task, max_iter),
        INT_KEY("task", task, brute_modes),
        INT_KEY("task", task, brute_points),
        DOUBLE_KEY("task", task, brute_lo),
        DOUBLE_KEY("task", task, brute_hi),
        BOOL_KEY("task", task, importance_sampling),
        DOUBLE_KEY("task", task, is_delta),
        INT_KEY("task", task, identity_checks),
    };
    return table;
}

#undef DOUBLE_KEY
#undef INT_KEY
#undef STRING_KEY
#undef BOOL_KEY
#undef DOUBLE_LIST_KEY

struct Call {
    std::string name;
    std::vector<std::string> args;
};

Call parse_call(const std::string& text) {
    const std::string t = trim(text);
    const auto open = t.find('(');
    if (open == std::string::npos) return {t, {}};
    if (t.back() != ')') throw ParameterError("selector '" + t + "' is missing ')'");
    Call c;
    c.name = trim(t.substr(0, open));
    const std::string inner = t.substr(open + 1, t.size() - open - 2);
    if (!trim(inner).empty()) c.args = split(inner, ',');
    return c;
}

std::vector<double> numeric_args(const Call& c, std::size_t expected) {
    if (c.args.size() != expected) {
        throw ParameterError(c.name + "(...) takes " + std::to_string(expected) + " arguments");
    }
    std::vector<double> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        if (!parse_double(c.args[i], out[i])) {
            throw ParameterError(c.name + "(...) argument '" + c.args[i] + "' is not a number");
        }
    }
    return out;
}

std::vector<std::vector<double>> read_grid_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open data file " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::vector<double> row;
        std::string tok;
        while (ss >> tok) {
            double v = 0.0;
            if (!parse_double(tok, v)) throw ParameterError("non-numeric entry in " + path.string());
            row.push_back(v);
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParameterError("data file " + path.string() + " is empty");
    return rows;
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base_dir) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return path;
}

}  // namespace

SpaceTimeFn parse_selector(const std::string& selector, const Mesh& mesh, double dt,
                           const std::filesystem::path& base_dir) {
    const Call c = parse_call(selector);
    const double pi = std::numbers::pi;
    if (c.name == "constant") {
        const double v = numeric_args(c, 1)[0];
        return [v](double, double) { return v; };
    }
    if (c.name == "sine") {
        const auto a = numeric_args(c, 2);
        return [k = a[0], amp = a[1], pi](double, double x) { return amp * std::sin(k * pi * x); };
    }
    if (c.name == "ramp") {
        const auto a = numeric_args(c, 2);
        return [c0 = a[0], c1 = a[1]](double t, double) { return c0 + c1 * t; };
    }
    if (c.name == "sine_ramp") {
        const auto a = numeric_args(c, 3);
        return [k = a[0], amp = a[1], b = a[2], pi](double t, double x) {
            return (amp + b * t) * std::sin(k * pi * x);
        };
    }
    if (c.name == "file") {
        if (c.args.size() != 1) throw ParameterError("file(...) takes one path");
        const auto rows = read_grid_file(resolve(c.args[0], base_dir));
        for (const auto& r : rows) {
            if (static_cast<int>(r.size()) != mesh.size()) {
                throw DimensionError("data file rows must hold " + std::to_string(mesh.size()) +
                                     " interior values");
            }
        }
        const double h = mesh.h();
        const int n_nodes = mesh.size();
        return [rows, h, dt, n_nodes](double t, double x) {
            const int i = std::clamp(static_cast<int>(std::lround(x / h)) - 1, 0, n_nodes - 1);
            const int row = rows.size() == 1
                                ? 0
                                : std::clamp(static_cast<int>(std::lround(t / dt)), 0,
                                             static_cast<int>(rows.size()) - 1);
            return rows[row][i];
        };
    }
    throw ParameterError("unknown data selector '" + c.name + "'");
}

std::vector<std::string> validate_config(const RunConfig& config,
                                         const std::filesystem::path& base_dir) {
    std::vector<std::string> v;
    const auto& pr = config.problem;
    if (!(pr.p > 1.0)) v.push_back("p must exceed 1");
    if (!(pr.gamma >= 0.0)) v.push_back("gamma must be nonnegative");
    if (pr.modes < 1) v.push_back("modes must be at least 1");
    if (!(pr.lambda_decay > 1.0)) v.push_back("lambda_decay must exceed 1 (trace-class Q)");
    if (!(pr.lambda_scale > 0.0)) v.push_back("lambda_scale must be positive");
    if (pr.n_cells < 4) v.push_back("n_cells must be at least 4");
    if (pr.n_steps < 1) v.push_back("n_steps must be at least 1");
    if (!(pr.horizon > 0.0)) v.push_back("horizon must be positive");

    const auto& s = config.solver;
    if (s.eps_schedule.empty()) {
        if (!(s.eps_first > 0.0)) v.push_back("eps_first must be positive");
        if (!(s.eps_last > 0.0)) v.push_back("eps_last must be positive");
        if (s.eps_first > 0.0 && s.eps_last > 0.0 && !(s.eps_first > s.eps_last)) {
            v.push_back("eps_first must exceed eps_last");
        }
        if (!(s.eps_factor > 0.0 && s.eps_factor < 1.0)) v.push_back("eps_factor must lie in (0, 1)");
    } else {
        if (s.eps_schedule.size() < 2) v.push_back("eps_schedule needs at least two values");
        for (std::size_t j = 0; j < s.eps_schedule.size(); ++j) {
            if (!(s.eps_schedule[j] > 0.0)) {
                v.push_back("eps_schedule entry " + std::to_string(j + 1) + " must be positive");
            } else if (j > 0 && !(s.eps_schedule[j] < s.eps_schedule[j - 1])) {
                v.push_back("eps_schedule must be strictly decreasing");
            }
        }
    }
    if (!(s.newton_tol > 0.0)) v.push_back("newton_tol must be positive");
    if (s.newton_max_iter < 1) v.push_back("newton_max_iter must be at least 1");
    if (!(s.cauchy_tol > 0.0)) v.push_back("cauchy_tol must be positive");

    const auto& t = config.task;
    if (t.trials < 1) v.push_back("trials must be at least 1");
    if (t.deltas.empty()) v.push_back("deltas must not be empty");
    for (std::size_t j = 0; j < t.deltas.size(); ++j) {
        if (!(t.deltas[j] > 0.0)) v.push_back("deltas must be positive");
        else if (j > 0 && !(t.deltas[j] < t.deltas[j - 1])) v.push_back("deltas must be decreasing");
    }
    if (!(t.delta >= 0.0)) v.push_back("delta must be nonnegative");
    if (t.n_paths < 1) v.push_back("n_paths must be at least 1");
    if (!(t.max_failure_fraction >= 0.0 && t.max_failure_fraction < 1.0)) {
        v.push_back("max_failure_fraction must lie in [0, 1)");
    }
    if (t.oscillations.empty()) v.push_back("oscillations must not be empty");
    for (int n : t.oscillations) {
        if (n < 1) v.push_back("oscillation indices must be positive");
    }
    if (t.time_blocks < 1) v.push_back("time_blocks must be at least 1");
    if (pr.n_steps >= 1 && t.time_blocks > pr.n_steps) v.push_back("time_blocks must not exceed n_steps");
    if (t.mu_schedule.empty()) v.push_back("mu_schedule must not be empty");
    for (double mu : t.mu_schedule) {
        if (!(mu > 0.0)) v.push_back("mu_schedule entries must be positive");
    }
    if (t.max_iter < 1) v.push_back("max_iter must be at least 1");
    if (t.brute_modes < 1 || t.brute_modes > 2) v.push_back("brute_modes must be 1 or 2");
    if (t.brute_points < 1) v.push_back("brute_points must be at least 1");
    if (!(t.brute_lo <= t.brute_hi)) v.push_back("brute_lo must not exceed brute_hi");
    if (!(t.is_delta > 0.0)) v.push_back("is_delta must be positive");
    if (t.identity_checks < 0) v.push_back("identity_checks must be nonnegative");

    try {
        const Call e = parse_call(t.event);
        if (e.name == "mean_above") {
            numeric_args(e, 1);
        } else if (e.name == "free_ball" || e.name == "origin_ball") {
            if (!(numeric_args(e, 1)[0] > 0.0)) v.push_back("event radius must be positive");
        } else {
            v.push_back("unknown event '" + e.name + "'");
        }
    } catch (const Error& ex) {
        v.push_back(std::string("event: ") + ex.what());
    }
    try {
        const Call c = parse_call(t.control);
        if (c.name == "mode") {
            const auto a = numeric_args(c, 2);
            if (a[0] < 1 || a[0] > pr.modes || a[0] != std::floor(a[0])) {
                v.push_back("control mode index must lie in 1..modes");
            }
        } else if (c.name == "rate") {
            if (c.args.size() != 1) v.push_back("rate(...) control takes one path");
        } else if (c.name != "zero") {
            v.push_back("unknown control '" + c.name + "'");
        }
    } catch (const Error& ex) {
        v.push_back(std::string("control: ") + ex.what());
    }

    // Data selectors and u0 >= psi(0) are checked eagerly when the grid is valid.
    if (pr.n_cells >= 4 && pr.n_steps >= 1 && pr.horizon > 0.0) {
        const Mesh mesh(pr.n_cells);
        const double dt = pr.horizon / pr.n_steps;
        SpaceTimeFn obstacle, initial;
        auto check = [&](const char* name, const std::string& sel, SpaceTimeFn* keep) {
            try {
                SpaceTimeFn fn = parse_selector(sel, mesh, dt, base_dir);
                for (int i = 0; i < mesh.size(); ++i) {
                    if (!std::isfinite(fn(0.0, mesh.x(i)))) {
                        v.push_back(std::string(name) + " has non-finite values");
                        return;
                    }
                }
                if (keep != nullptr) *keep = std::move(fn);
            } catch (const Error& ex) {
                v.push_back(std::string(name) + ": " + ex.what());
            }
        };
        check("obstacle", pr.obstacle, &obstacle);
        check("forcing", pr.forcing, nullptr);
        check("initial", pr.initial, &initial);
        if (obstacle && initial) {
            for (int i = 0; i < mesh.size(); ++i) {
                if (initial(0.0, mesh.x(i)) < obstacle(0.0, mesh.x(i))) {
                    v.push_back("initial datum must satisfy u0 >= psi(0) at every node");
                    break;
                }
            }
        }
    }
    return v;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    RunConfig config;
    std::vector<std::string> violations;
    std::map<std::string, int> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    const auto& table = bindings();
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') {
                violations.push_back(where + "section header is missing ']'");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section != "problem" && section != "solver" && section != "task") {
                violations.push_back(where + "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            violations.push_back(where + "expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = std::find_if(table.begin(), table.end(), [&](const Binding& b) {
            return b.section == section && b.key == key;
        });
        if (it == table.end()) {
            violations.push_back(where + "unknown key '" + key + "'" +
                                 (section.empty() ? std::string() : " in [" + section + "]"));
            continue;
        }
        const std::string full = section + "." + key;
        if (seen.count(full)) {
            violations.push_back(where + "duplicate key '" + key + "' (first on line " +
                                 std::to_string(seen[full]) + ")");
            continue;
        }
        seen[full] = line_no;
        if (!it->read(config, value)) {
            violations.push_back(where + key + " must be " + it->expects + ", got '" + value + "'");
        }
    }
    for (auto& v : validate_config(config, base_dir)) violations.push_back(std::move(v));
    if (!violations.empty()) throw ConfigError(std::move(violations));
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read config file " + path.string()});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string serialize_config(const RunConfig& config) {
    std::string out;
    std::string section;
    for (const auto& b : bindings()) {
        if (b.section != section) {
            section = b.section;
            out += "\n[" + section + "]\n";
        }
        out += b.key + " = " + b.write(config) + "\n";
    }
    return out;
}

std::uint64_t resolve_seed(const RunConfig& config, std::optional<std::uint64_t> cli_seed) {
    if (cli_seed) return *cli_seed;
    if (const char* env = std::getenv("OBSTACLE_LDP_SEED"); env != nullptr && *env != '\0') {
        std::uint64_t seed = 0;
        if (!parse_int(env, seed)) throw ConfigError({"OBSTACLE_LDP_SEED must be an unsigned integer"});
        return seed;
    }
    return config.master_seed;
}

ProblemSpec build_problem(const ProblemConfig& c, const std::filesystem::path& base_dir) {
    const Mesh mesh(c.n_cells);
    const double dt = c.horizon / c.n_steps;
    const SpaceTimeFn obstacle = parse_selector(c.obstacle, mesh, dt, base_dir);
    const SpaceTimeFn forcing = parse_selector(c.forcing, mesh, dt, base_dir);
    const SpaceTimeFn initial = parse_selector(c.initial, mesh, dt, base_dir);
    return make_problem(OperatorSpec::p_laplace(c.p), c.gamma, c.modes, c.lambda_decay,
                        c.lambda_scale, c.n_cells, c.horizon, c.n_steps, obstacle, forcing,
                        [&](double x) { return initial(0.0, x); });
}

PenaltyConfig build_penalty(const SolverConfig& c) {
    PenaltyConfig p;
    p.eps_schedule = c.eps_schedule.empty()
                         ? PenaltyConfig::geometric_schedule(c.eps_first, c.eps_last, c.eps_factor)
                         : c.eps_schedule;
    p.newton_tol = c.newton_tol;
    p.newton_max_iter = c.newton_max_iter;
    p.cauchy_tol = c.cauchy_tol;
    p.stop_early = c.stop_early;
    p.validate();
    return p;
}

EventSpec build_event(const std::string& selector, const ProblemSpec& spec,
                      const PenaltyConfig& pcfg) {
    const Call c = parse_call(selector);
    if (c.name == "mean_above") return EventSpec::mean_above(numeric_args(c, 1)[0]);
    if (c.name == "origin_ball") {
        return EventSpec::ball(Field::Zero(spec.mesh.size()), numeric_args(c, 1)[0]);
    }
    if (c.name == "free_ball") {
        const Trajectory free = rate_skeleton(spec, Control::zero(spec.n_steps, spec.q.K), pcfg);
        return EventSpec::ball(free.terminal(), numeric_args(c, 1)[0]);
    }
    throw ParameterError("unknown event '" + c.name + "'");
}

Control build_control(const std::string& selector, const ProblemSpec& spec,
                      const std::filesystem::path& base_dir) {
    const Call c = parse_call(selector);
    if (c.name == "zero") return Control::zero(spec.n_steps, spec.q.K);
    if (c.name == "mode") {
        const auto a = numeric_args(c, 2);
        const int k = static_cast<int>(a[0]);
        if (k < 1 || k > spec.q.K || a[0] != k) throw ParameterError("control mode index must lie in 1..modes");
        Control out = Control::zero(spec.n_steps, spec.q.K);
        out.coefficients.col(k - 1).setConstant(a[1]);
        return out;
    }
    if (c.name == "rate") {
        if (c.args.size() != 1) throw ParameterError("rate(...) control takes one path");
        const RateEstimate r = read_rate_estimate(resolve(c.args[0], base_dir));
        if (r.control.n_steps() != spec.n_steps || r.control.modes() != spec.q.K) {
            throw DimensionError("stored control does not match (n_steps, K) of the problem");
        }
        return r.control;
    }
    throw ParameterError("unknown control '" + c.name + "'");
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

void write_manifest(const std::filesystem::path& path, const RunConfig& config,
                    const std::string& command, std::uint64_t seed,
                    const std::map<std::string, std::string>& result_digests) {
    const std::string canonical = serialize_config(config);
    nlohmann::ordered_json j;
    j["artifact"] = "obstacle_ldp";
    j["artifact_version"] = kArtifactVersion;
    j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                         std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    j["command"] = command;
    j["config_sha256"] = sha256_hex(canonical);
    j["master_seed"] = seed;
    j["config"] = canonical;
    j["results"] = nlohmann::ordered_json::object();
    for (const auto& [name, digest] : result_digests) j["results"][name] = digest;
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw Error("failed writing manifest " + path.string());
}

}  // namespace obstacle_ldp
