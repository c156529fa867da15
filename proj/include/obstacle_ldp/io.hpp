#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "obstacle_ldp/ldp.hpp"
#include "obstacle_ldp/rate.hpp"
#include "obstacle_ldp/skeleton.hpp"
#include "obstacle_ldp/spde.hpp"

namespace obstacle_ldp {

using Json = nlohmann::ordered_json;

/// Shortest round-tripping decimal form, stable across runs.
std::string format_number(double v);

/// Columns t, x, value; one row per (time, interior node).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const Mesh& mesh);
void write_reflection_csv(const std::filesystem::path& path, const ReflectionMeasure& rho,
                          const std::vector<double>& times, const Mesh& mesh);

/// Reads a t, x, value CSV back into a trajectory.
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Columns step, mode, dW; header comment carries the seed.
void write_wiener_csv(const std::filesystem::path& path, const WienerPath& w);

Json to_json(const PropertyReport& r);
Json to_json(const ConvergenceLog& log);
Json to_json(const RateEstimate& r);
Json to_json(const ContinuityReport& r);
Json to_json(const SweepResult& s);
Json to_json(const CouplingSweep& s);

/// Inverse of to_json(RateEstimate); used to replay stored optimal controls.
RateEstimate rate_estimate_from_json(const Json& j);
RateEstimate read_rate_estimate(const std::filesystem::path& path);

/// Columns path_index, seed, ok, sup_norm, functional, event, log_weight.
void write_batch_csv(const std::filesystem::path& path, const BatchResult& batch);
/// Columns delta, n_paths, p_hat, ci_lo, ci_hi, d2logp, neg_rate.
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);
/// Columns delta, n_paths, failures, mean_sup_gap_sq, se_sup_gap_sq, mean_v_gap, se_v_gap.
void write_coupling_csv(const std::filesystem::path& path, const CouplingSweep& sweep);

void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace obstacle_ldp
