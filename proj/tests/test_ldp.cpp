#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "obstacle_ldp/ldp.hpp"

using namespace obstacle_ldp;

namespace {

BatchOptions options(int n, std::uint64_t seed) {
    BatchOptions o;
    o.n_paths = n;
    o.master_seed = seed;
    return o;
}

SweepRow row(double delta, double d2logp, bool flagged = false) {
    SweepRow r;
    r.delta = delta;
    r.d2logp = d2logp;
    r.flagged = flagged;
    return r;
}

}  // namespace

TEST_CASE("Wilson interval against closed forms") {
    // Zero hits: [0, z^2 / (n + z^2)].
    const auto zero = wilson_interval(0, 10);
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi == doctest::Approx(kZ95 * kZ95 / (10 + kZ95 * kZ95)));
    const auto all = wilson_interval(10, 10);
    CHECK(all.hi == 1.0);
    CHECK(all.lo == doctest::Approx(10.0 / (10 + kZ95 * kZ95)));
    // Symmetric about 1/2 at half the trials.
    const auto half = wilson_interval(50, 100);
    CHECK(half.lo + half.hi == doctest::Approx(1.0));
    CHECK(half.hi - 0.5 == doctest::Approx(kZ95 * std::sqrt(0.25 / 100 + kZ95 * kZ95 / 40000.0) /
                                           (1 + kZ95 * kZ95 / 100)));
    CHECK_THROWS_AS(wilson_interval(0, 0), ParameterError);
}

TEST_CASE("certain and impossible events") {
    const auto spec = fixtures::ldp_problem();
    const PenaltyConfig pcfg;
    const auto all = estimate_probability(spec, 0.5, EventSpec::mean_above(-1e9), options(200, 1), 1e-5, pcfg);
    CHECK(all.p_hat == 1.0);
    CHECK(all.hits == 200);
    const auto none = estimate_probability(spec, 0.5, EventSpec::ball(Field::Constant(spec.mesh.size(), 1e6), 1.0),
                                           options(200, 1), 1e-5, pcfg);
    CHECK(none.p_hat == 0.0);
    CHECK(none.ci.lo == 0.0);
    CHECK_THROWS_AS(estimate_probability(spec, 0.5, EventSpec::mean_above(0.0), options(50, 1), 1e-5, pcfg),
                    ParameterError);
}

TEST_CASE("independent seeds agree at large delta; equal seeds agree exactly") {
    const auto spec = fixtures::ldp_problem();
    const PenaltyConfig pcfg;
    const auto event = EventSpec::mean_above(0.25);
    const auto a = estimate_probability(spec, 2.0, event, options(2000, 11), 1e-5, pcfg);
    const auto b = estimate_probability(spec, 2.0, event, options(2000, 12), 1e-5, pcfg);
    CHECK(a.p_hat > 0.01);
    CHECK(a.ci.lo <= b.ci.hi);
    CHECK(b.ci.lo <= a.ci.hi);
    const auto c = estimate_probability(spec, 2.0, event, options(2000, 11), 1e-5, pcfg);
    CHECK(c.hits == a.hits);
}

TEST_CASE("probability grows with the ball radius") {
    const auto spec = fixtures::ldp_problem();
    const auto pcfg = fixtures::fine_penalty();
    const auto centre = rate_skeleton(spec, Control::zero(spec.n_steps, spec.q.K), pcfg).terminal();
    int previous = -1;
    for (double r : {0.02, 0.05, 0.1}) {
        const auto est = estimate_probability(spec, 0.5, EventSpec::ball(centre, r), options(500, 3),
                                              pcfg.final_eps(), pcfg);
        CHECK(est.hits >= previous);
        previous = est.hits;
    }
}

TEST_CASE("importance sampling agrees with plain Monte Carlo") {
    const auto spec = fixtures::ldp_problem();
    const auto pcfg = fixtures::fine_penalty();
    const auto event = EventSpec::mean_above(0.237);
    RateOptions ro;
    ro.mu_schedule = {10.0, 100.0, 1000.0, 10000.0};
    const auto rate = minimize_rate(spec, event, ro, pcfg);
    REQUIRE(rate.estimate.converged);
    const double delta = 0.5;
    const auto plain = estimate_probability(spec, delta, event, options(4000, 21), pcfg.final_eps(), pcfg);
    const auto is = estimate_probability_tilted(spec, delta, event, rate.estimate.control, options(4000, 22),
                                                pcfg.final_eps(), pcfg);
    const double se_plain = std::sqrt(plain.p_hat * (1 - plain.p_hat) / plain.n_paths);
    CHECK(std::abs(plain.p_hat - is.p_hat.mean) <=
          kZ95 * std::sqrt(se_plain * se_plain + is.p_hat.std_err * is.p_hat.std_err));
    CHECK(std::abs(is.weight_mean.mean - 1.0) <= 5.0 * is.weight_mean.std_err);
    // The tilt concentrates on the event, so the weighted estimator is sharper.
    CHECK(is.p_hat.std_err < se_plain);
}

TEST_CASE("sweep verdict rule") {
    const double neg_rate = -0.06;
    CHECK(sweep_verdict({row(0.5, -0.4), row(0.25, -0.16), row(0.125, -0.09)}, neg_rate) == "consistent");
    // Distance to -I grows: inconsistent.
    CHECK(sweep_verdict({row(0.5, -0.1), row(0.25, -0.2), row(0.125, -0.09)}, neg_rate) == "inconsistent");
    // Monotone but the last value is outside [2(-I), 0.5(-I)].
    CHECK(sweep_verdict({row(0.5, -0.4), row(0.25, -0.2), row(0.125, -0.15)}, neg_rate) == "inconsistent");
    // Flagged rows are ignored; nothing left is inconclusive.
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(sweep_verdict({row(0.5, ninf, true), row(0.25, ninf, true)}, neg_rate) == "inconclusive");
    CHECK(sweep_verdict({row(0.5, -0.4), row(0.25, -0.09), row(0.125, ninf, true)}, neg_rate) == "consistent");
    // Zero rate: the last value must be within 0.05 of zero.
    CHECK(sweep_verdict({row(0.5, -0.1), row(0.25, -0.01)}, 0.0) == "consistent");
    CHECK(sweep_verdict({row(0.5, -0.2), row(0.25, -0.1)}, 0.0) == "inconsistent");
}

TEST_CASE("sweep over an event around the uncontrolled limit") {
    const auto spec = fixtures::ldp_problem();
    const auto pcfg = fixtures::fine_penalty();
    const auto centre = rate_skeleton(spec, Control::zero(spec.n_steps, spec.q.K), pcfg).terminal();
    const auto event = EventSpec::ball(centre, 0.1);
    RateOptions ro;
    const auto rate = minimize_rate(spec, event, ro, pcfg);
    CHECK(rate.estimate.value == 0.0);
    const auto sweep = ldp_sweep(spec, event, {0.5, 0.25, 0.125}, options(1000, 4), rate.estimate,
                                 pcfg.final_eps(), pcfg);
    REQUIRE(sweep.rows.size() == 3);
    CHECK(sweep.rows[2].p_hat > sweep.rows[0].p_hat);
    CHECK(sweep.rows[2].p_hat > 0.95);
    CHECK(sweep.verdict == "consistent");
    CHECK_THROWS_AS(ldp_sweep(spec, event, {0.25, 0.5}, options(1000, 4), rate.estimate, pcfg.final_eps(), pcfg),
                    ParameterError);
    RateEstimate unconverged = rate.estimate;
    unconverged.converged = false;
    CHECK_THROWS_AS(ldp_sweep(spec, event, {0.5}, options(1000, 4), unconverged, pcfg.final_eps(), pcfg),
                    ParameterError);
}
