// SPDX-License-Identifier: Apache-2.0
//
// tiltopt - joint antenna tilt optimisation for cellular downlinks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef TILTOPT_EXPERIMENT_HPP
#define TILTOPT_EXPERIMENT_HPP

#include "tiltopt/distributed.hpp"
#include "tiltopt/mmse.hpp"
#include "tiltopt/problems.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tiltopt {

inline constexpr const char* summary_schema_id = "tiltopt-summary/1";

enum class ExperimentKind {
    optimize_p1,
    optimize_p2,
    fixed_tilt_baseline,
    minrate_sweep,
    location_noise_sweep,
    simo_mmse_eval,
    grid_search_oracle,
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

enum class ExitCode : int { success = 0, failure = 1, infeasible = 2, diverged = 3 };

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::optimize_p1;
    std::string scenario = "builtin:cluster";  // a scenario file, or builtin:cluster|urban|pair
    std::uint64_t scenario_seed = 1;           // for built-in generators
    int scenario_users = 0;                    // builtin:urban user count, 0 = default

    double alpha = 0.05;
    std::size_t iterations = 1500;
    bool stop_on_convergence = false;
    double tolerance_deg = 1e-4;
    double bound_tolerance_deg = 0.5;          // constant steps leave iterates chattering around active bounds
    double initial_tilt_deg = 8.0;             // starting point and linearisation point
    UtilitySpec::Kind utility = UtilitySpec::Kind::linear;
    std::optional<double> rate_min_mbps;       // overrides the scenario value

    bool distributed = false;
    double drop_probability = 0.0;
    double interference_floor = 1e-3;

    std::vector<double> sweep_values;          // r_min (Mbps) or sigma (m)
    std::size_t noise_seeds = 20;
    std::uint64_t seed = 1;
    std::size_t samples = 300;
    double grid_step_deg = 0.25;

    std::filesystem::path output_dir;          // empty: no files written
};

/// Field ranges and scenario existence; empty when the spec is usable.
std::vector<std::string> spec_problems(const ExperimentSpec& spec);

struct ExperimentResult {
    ExitCode exit_code = ExitCode::success;
    nlohmann::json summary;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Loads a scenario file or builds a built-in one.
Network resolve_scenario(const std::string& ref, std::uint64_t seed, int users = 0);

/// Stable 64-bit fingerprint of the saved scenario text.
std::string scenario_fingerprint(const Network& net);

// ---------------------------------------------------------------------------
// Building blocks, shared with the tests.

/// Throughput figures at one tilt vector. Sums are divided by the number of users.
struct RateMetrics {
    std::vector<double> rates;        // exact truncated rate per user, Mbps
    double sum_rate = 0.0;            // sum R_u / |U|
    double sum_log = 0.0;             // sum ln R_u / |U|
    double sum_rate_high_sinr = 0.0;  // sum R-hat_u / |U|
    double median_rate = 0.0;
};

RateMetrics rate_metrics(const LinkTable& links, std::span<const double> tilts);

struct Outcome {
    IterationTrace trace;
    TiltVector tilts;                 // final iterate
    RateMetrics initial;
    RateMetrics final;
    FeasibilityReport feasibility;
    bool suspect_infeasible = false;
};

Outcome optimize(const Network& net, Variant variant, UtilitySpec utility, const RunOptions& options,
                 double initial_tilt_deg = 8.0, double bound_tolerance_deg = 0.5);

struct GridSearchResult {
    TiltVector tilts;
    double objective = 0.0;
    std::size_t evaluated = 0;
    std::size_t feasible = 0;
};

/// Exhaustive search of the problem objective over the tilt-bound box at the given spacing,
/// keeping only points that meet every rate constraint.
GridSearchResult grid_search(const TiltProblem& problem, double step_deg);

struct SweepPoint {
    double value = 0.0;
    RateMetrics metrics;
    bool feasible = true;
    bool suspect_infeasible = false;
    bool diverged = false;
    TiltVector tilts;
};

std::vector<SweepPoint> minrate_sweep(const Network& net, std::span<const double> rate_min_mbps,
                                      const RunOptions& options, double initial_tilt_deg = 8.0,
                                      double bound_tolerance_deg = 0.5);

struct NoisePoint {
    double sigma_m = 0.0;
    double mean_sum_rate = 0.0;    // over seeds, normalised by |U|
    std::vector<double> per_seed;
};

/// P1 with linear utility, gradients from noisy reported positions, rates on the true channel.
std::vector<NoisePoint> location_noise_sweep(const Network& net, std::span<const double> sigmas_m,
                                             std::size_t seeds, std::uint64_t base_seed, const RunOptions& options,
                                             double initial_tilt_deg = 8.0);

/// Sum-throughput and sum-log orderings plus per-user rate deltas (b - a). Throws on scenario mismatch.
nlohmann::json compare_runs(const nlohmann::json& a, const nlohmann::json& b);

} // namespace tiltopt

#endif
