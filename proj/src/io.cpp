#include "obstacle_ldp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace obstacle_ldp {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error("failed writing " + path.string());
}

/// JSON has no infinities; they are stored as strings.
Json number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

double number_from(const Json& j) {
    if (j.is_string()) return std::strtod(j.get<std::string>().c_str(), nullptr);
    return j.get<double>();
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const Mesh& mesh) {
    auto out = open_out(path);
    out << "t,x,value\n";
    for (std::size_t n = 0; n < traj.fields.size(); ++n) {
        detail::require_size(traj.fields[n], mesh);
        for (int i = 0; i < mesh.size(); ++i) {
            out << format_number(traj.times[n]) << ',' << format_number(mesh.x(i)) << ','
                << format_number(traj.fields[n](i)) << '\n';
        }
    }
    finish(out, path);
}

void write_reflection_csv(const std::filesystem::path& path, const ReflectionMeasure& rho,
                          const std::vector<double>& times, const Mesh& mesh) {
    if (times.size() != rho.rho.size()) throw DimensionError("reflection/time grid mismatch");
    Trajectory t{times, rho.rho};
    write_trajectory_csv(path, t, mesh);
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "t,x,value") throw Error(path.string() + " is not a trajectory CSV");
    std::map<double, std::vector<double>> rows;
    std::vector<double> order;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        const double t = std::strtod(a.c_str(), nullptr);
        if (!rows.count(t)) order.push_back(t);
        rows[t].push_back(std::strtod(c.c_str(), nullptr));
    }
    Trajectory traj;
    for (double t : order) {
        traj.times.push_back(t);
        const auto& v = rows[t];
        traj.fields.push_back(Eigen::Map<const Field>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return traj;
}

void write_wiener_csv(const std::filesystem::path& path, const WienerPath& w) {
    auto out = open_out(path);
    out << "# seed " << w.seed << " dt " << format_number(w.dt) << "\n";
    out << "step,mode,dW\n";
    for (int n = 0; n < w.n_steps(); ++n) {
        for (int k = 0; k < w.modes(); ++k) {
            out << n << ',' << k + 1 << ',' << format_number(w.increments(n, k)) << '\n';
        }
    }
    finish(out, path);
}

Json to_json(const PropertyReport& r) {
    Json j;
    j["property"] = r.property;
    j["trials"] = r.trials;
    j["failures"] = r.failures;
    j["min_margin"] = number(r.min_margin);
    j["passed"] = r.passed();
    if (r.skipped) {
        j["skipped"] = true;
        j["reason"] = r.reason;
    }
    if (!r.metrics.empty()) {
        Json m = Json::object();
        for (const auto& [k, v] : r.metrics) m[k] = number(v);
        j["metrics"] = m;
    }
    if (r.witness_trial) {
        Json w;
        w["trial"] = *r.witness_trial;
        Json fields = Json::array();
        for (const auto& f : r.witness_fields) {
            fields.push_back(std::vector<double>(f.data(), f.data() + f.size()));
        }
        w["fields"] = fields;
        j["witness"] = w;
    }
    return j;
}

Json to_json(const ConvergenceLog& log) {
    Json j;
    j["eps"] = log.eps;
    j["cauchy_gaps"] = log.gaps;
    j["penalty_mass"] = log.penalty_mass;
    j["pairing"] = log.pairing;
    j["energy"] = log.energy;
    j["newton_iterations"] = log.newton_iterations;
    j["converged"] = log.converged;
    return j;
}

Json to_json(const RateEstimate& r) {
    Json j;
    j["value"] = number(r.value);
    j["constraint_residual"] = number(r.constraint_residual);
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["n_steps"] = r.control.n_steps();
    j["modes"] = r.control.modes();
    Json rows = Json::array();
    for (int n = 0; n < r.control.n_steps(); ++n) {
        std::vector<double> row(r.control.modes());
        for (int k = 0; k < r.control.modes(); ++k) row[k] = r.control.coefficients(n, k);
        rows.push_back(row);
    }
    j["control"] = rows;
    return j;
}

RateEstimate rate_estimate_from_json(const Json& j) {
    RateEstimate r;
    try {
        r.value = number_from(j.at("value"));
        r.constraint_residual = number_from(j.at("constraint_residual"));
        r.iterations = j.at("iterations").get<int>();
        r.converged = j.at("converged").get<bool>();
        const int n_steps = j.at("n_steps").get<int>();
        const int modes = j.at("modes").get<int>();
        const auto& rows = j.at("control");
        if (static_cast<int>(rows.size()) != n_steps) throw DimensionError("control row count mismatch");
        r.control = Control::zero(n_steps, modes);
        for (int n = 0; n < n_steps; ++n) {
            if (static_cast<int>(rows[n].size()) != modes) throw DimensionError("control column count mismatch");
            for (int k = 0; k < modes; ++k) r.control.coefficients(n, k) = rows[n][k].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed rate result: ") + e.what());
    }
    return r;
}

RateEstimate read_rate_estimate(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot read rate file " + path.string());
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError("rate file " + path.string() + " is not JSON: " + e.what());
    }
    return rate_estimate_from_json(j);
}

Json to_json(const ContinuityReport& r) {
    Json j;
    j["n_list"] = r.n_list;
    j["gaps_h"] = r.gaps_h;
    if (!r.gaps_t.empty()) j["gaps_t"] = r.gaps_t;
    j["decreasing"] = r.decreasing;
    j["final_over_first"] = r.final_over_first;
    j["passed"] = r.passed;
    return j;
}

Json to_json(const SweepResult& s) {
    Json j;
    j["neg_rate"] = s.neg_rate;
    j["verdict"] = s.verdict;
    Json rows = Json::array();
    for (const auto& r : s.rows) {
        Json row;
        row["delta"] = r.delta;
        row["n_paths"] = r.n_paths;
        row["p_hat"] = r.p_hat;
        row["ci_lo"] = r.ci_lo;
        row["ci_hi"] = r.ci_hi;
        row["d2logp"] = number(r.d2logp);
        row["flagged"] = r.flagged;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

Json to_json(const CouplingSweep& s) {
    Json j;
    Json rows = Json::array();
    for (const auto& r : s.rows) {
        Json row;
        row["delta"] = r.delta;
        row["n_paths"] = r.n_paths;
        row["failures"] = r.failures;
        row["mean_sup_gap_sq"] = r.sup_gap_sq.mean;
        row["se_sup_gap_sq"] = r.sup_gap_sq.std_err;
        row["mean_v_gap"] = r.v_gap.mean;
        row["se_v_gap"] = r.v_gap.std_err;
        rows.push_back(row);
    }
    j["rows"] = rows;
    j["slope"] = s.fit.slope;
    j["r2"] = s.fit.r2;
    j["girsanov_identity_gap"] = s.girsanov_identity_gap;
    return j;
}

void write_batch_csv(const std::filesystem::path& path, const BatchResult& batch) {
    auto out = open_out(path);
    out << "path_index,seed,ok,sup_norm,functional,event,log_weight\n";
    for (const auto& s : batch.paths) {
        out << s.index << ',' << s.seed << ',' << (s.ok ? 1 : 0) << ',' << format_number(s.sup_norm)
            << ',' << format_number(s.functional) << ',' << (s.event ? 1 : 0) << ','
            << format_number(s.log_weight) << '\n';
    }
    finish(out, path);
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
    auto out = open_out(path);
    out << "delta,n_paths,p_hat,ci_lo,ci_hi,d2logp,neg_rate\n";
    for (const auto& r : sweep.rows) {
        out << format_number(r.delta) << ',' << r.n_paths << ',' << format_number(r.p_hat) << ','
            << format_number(r.ci_lo) << ',' << format_number(r.ci_hi) << ','
            << format_number(r.d2logp) << ',' << format_number(sweep.neg_rate) << '\n';
    }
    finish(out, path);
}

void write_coupling_csv(const std::filesystem::path& path, const CouplingSweep& sweep) {
    auto out = open_out(path);
    out << "delta,n_paths,failures,mean_sup_gap_sq,se_sup_gap_sq,mean_v_gap,se_v_gap\n";
    for (const auto& r : sweep.rows) {
        out << format_number(r.delta) << ',' << r.n_paths << ',' << r.failures << ','
            << format_number(r.sup_gap_sq.mean) << ',' << format_number(r.sup_gap_sq.std_err) << ','
            << format_number(r.v_gap.mean) << ',' << format_number(r.v_gap.std_err) << '\n';
    }
    finish(out, path);
}

void write_json(const std::filesystem::path& path, const Json& j) {
    write_text(path, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

}  // namespace obstacle_ldp
