#pragma once

#include <string>
#include <vector>

#include "obstacle_ldp/rate.hpp"
#include "obstacle_ldp/spde.hpp"

namespace obstacle_ldp {

struct ProbabilityEstimate {
    double delta = 0.0;
    int n_paths = 0;
    int hits = 0;
    int failures = 0;
    double p_hat = 0.0;
    Interval ci;
};

/// Fraction of SPDE paths in G with a 95% Wilson interval. Failed paths count
/// against the failure budget and are excluded from the denominator.
ProbabilityEstimate estimate_probability(const ProblemSpec& spec, double delta,
                                         const EventSpec& event, const BatchOptions& opts,
                                         double eps, const PenaltyConfig& pcfg);

struct ImportanceEstimate {
    double delta = 0.0;
    int n_paths = 0;
    MeanEstimate p_hat;
    /// 95% normal interval for p_hat.
    Interval ci;
    /// Sample mean of exp(log density); 1 in expectation.
    MeanEstimate weight_mean;
};

/// Estimates P(u_delta in G) under the tilted measure driven by `tilt`, reweighting
/// each path by exp(girsanov_log_density).
ImportanceEstimate estimate_probability_tilted(const ProblemSpec& spec, double delta,
                                               const EventSpec& event, const Control& tilt,
                                               const BatchOptions& opts, double eps,
                                               const PenaltyConfig& pcfg);

struct SweepRow {
    double delta = 0.0;
    int n_paths = 0;
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    /// delta^2 log p_hat; -inf for zero-count rows, which are flagged.
    double d2logp = 0.0;
    bool flagged = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double neg_rate = 0.0;
    /// "consistent", "inconsistent" or "inconclusive".
    std::string verdict;
};

/// Verdict rule: over unflagged rows (decreasing delta), |d2logp + I| is non-increasing
/// and the smallest-delta row lies in [2 (-I), 0.5 (-I)]. For I = 0 the band is
/// replaced by |d2logp| <= 0.05 at the smallest delta.
std::string sweep_verdict(const std::vector<SweepRow>& rows, double neg_rate);

SweepResult ldp_sweep(const ProblemSpec& spec, const EventSpec& event,
                      const std::vector<double>& deltas, const BatchOptions& opts,
                      const RateEstimate& rate, double eps, const PenaltyConfig& pcfg);

}  // namespace obstacle_ldp
