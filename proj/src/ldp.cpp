#include "obstacle_ldp/ldp.hpp"

#include <cmath>
#include <limits>

namespace obstacle_ldp {

namespace {

PathFunctional event_functional(const EventSpec& event, const Mesh& mesh) {
    return [&event, &mesh](const Trajectory& traj) {
        return std::make_pair(event.functional(traj, mesh), event.contains(traj, mesh));
    };
}

}  // namespace

ProbabilityEstimate estimate_probability(const ProblemSpec& spec, double delta,
                                         const EventSpec& event, const BatchOptions& opts,
                                         double eps, const PenaltyConfig& pcfg) {
    if (opts.n_paths < 100) throw ParameterError("estimate_probability needs n_paths >= 100");
    const BatchResult batch = run_batch(spec, delta, eps, pcfg, opts, event_functional(event, spec.mesh));
    ProbabilityEstimate out;
    out.delta = delta;
    out.failures = batch.failures;
    out.n_paths = opts.n_paths - batch.failures;
    for (const auto& s : batch.paths) out.hits += (s.ok && s.event) ? 1 : 0;
    out.p_hat = static_cast<double>(out.hits) / out.n_paths;
    out.ci = wilson_interval(out.hits, out.n_paths);
    return out;
}

ImportanceEstimate estimate_probability_tilted(const ProblemSpec& spec, double delta,
                                               const EventSpec& event, const Control& tilt,
                                               const BatchOptions& opts, double eps,
                                               const PenaltyConfig& pcfg) {
    if (opts.n_paths < 100) throw ParameterError("estimate_probability needs n_paths >= 100");
    const BatchResult batch =
        run_batch(spec, delta, eps, pcfg, opts, event_functional(event, spec.mesh), &tilt);
    std::vector<double> weighted, weights;
    for (const auto& s : batch.paths) {
        if (!s.ok) continue;
        const double w = std::exp(s.log_weight);
        weights.push_back(w);
        weighted.push_back(s.event ? w : 0.0);
    }
    ImportanceEstimate out;
    out.delta = delta;
    out.n_paths = static_cast<int>(weights.size());
    out.p_hat = sample_mean(weighted);
    out.weight_mean = sample_mean(weights);
    out.ci = {std::max(0.0, out.p_hat.mean - kZ95 * out.p_hat.std_err),
              out.p_hat.mean + kZ95 * out.p_hat.std_err};
    return out;
}

std::string sweep_verdict(const std::vector<SweepRow>& rows, double neg_rate) {
    std::vector<const SweepRow*> valid;
    for (const auto& r : rows) {
        if (!r.flagged) valid.push_back(&r);
    }
    if (valid.empty()) return "inconclusive";
    for (std::size_t j = 1; j < valid.size(); ++j) {
        if (std::abs(valid[j]->d2logp - neg_rate) > std::abs(valid[j - 1]->d2logp - neg_rate)) {
            return "inconsistent";
        }
    }
    const double last = valid.back()->d2logp;
    const bool in_band = neg_rate < 0.0 ? (last >= 2.0 * neg_rate && last <= 0.5 * neg_rate)
                                        : std::abs(last) <= 0.05;
    return in_band ? "consistent" : "inconsistent";
}

SweepResult ldp_sweep(const ProblemSpec& spec, const EventSpec& event,
                      const std::vector<double>& deltas, const BatchOptions& opts,
                      const RateEstimate& rate, double eps, const PenaltyConfig& pcfg) {
    if (deltas.empty()) throw ParameterError("delta list is empty");
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        if (!(deltas[j] > 0.0)) throw ParameterError("deltas must be positive");
        if (j > 0 && !(deltas[j] < deltas[j - 1])) throw ParameterError("delta list must be decreasing");
    }
    if (!rate.converged) throw ParameterError("ldp_sweep needs a converged rate estimate");
    SweepResult out;
    out.neg_rate = -rate.value;
    for (double delta : deltas) {
        const ProbabilityEstimate est = estimate_probability(spec, delta, event, opts, eps, pcfg);
        SweepRow row;
        row.delta = delta;
        row.n_paths = est.n_paths;
        row.p_hat = est.p_hat;
        row.ci_lo = est.ci.lo;
        row.ci_hi = est.ci.hi;
        if (est.hits == 0) {
            row.flagged = true;
            row.d2logp = -std::numeric_limits<double>::infinity();
        } else {
            row.d2logp = delta * delta * std::log(est.p_hat);
        }
        out.rows.push_back(row);
    }
    out.verdict = sweep_verdict(out.rows, out.neg_rate);
    return out;
}

}  // namespace obstacle_ldp
