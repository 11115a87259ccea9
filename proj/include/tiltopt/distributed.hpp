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

#ifndef TILTOPT_DISTRIBUTED_HPP
#define TILTOPT_DISTRIBUTED_HPP

#include "tiltopt/problems.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace tiltopt {

/// What the serving sector of user u knows about the link from a target sector to u.
struct ReportEntry {
    int user = 0;
    int serving = 0;
    double target_power = 0.0;         // H-hat_u(theta_target), or H_u for the serving sector itself
    double serving_power = 0.0;        // H_u(theta_b(u))
    std::vector<double> sinr;          // gamma_{u,n}
    std::vector<double> interference;  // interferers + noise per sub-carrier, as measured by u
    double pointing_deg = 0.0;         // toward the target, from the reported position
    double rate_multiplier = 0.0;      // lambda^1_u, held by the serving sector
};

/// One message: everything a serving sector tells a target sector in one round.
struct InterferenceReport {
    int from = 0;   // serving sector
    int to = 0;     // target sector
    std::vector<ReportEntry> entries;  // ascending user id
};

/// Constants every agent is configured with; no per-link or per-user geometry.
struct AgentConfig {
    Network constants;  // scalar radio constants only; sectors and users are empty
    Variant variant = Variant::high_sinr;
    UtilitySpec utility;
};

AgentConfig make_agent_config(const Network& net, Variant variant, UtilitySpec utility = {});

/// A sector's private state.
struct SectorAgent {
    int sector = 0;
    Sector antenna;                    // own antenna parameters
    double lin_point = 0.0;            // own linearisation tilt
    double tilt = 0.0;
    double lower = 0.0;                // lambda^2
    double upper = 0.0;                // lambda^3
    std::vector<int> served;           // ascending user ids
    std::vector<double> rate_multiplier;  // lambda^1 per served user, same order
    std::size_t missing_reports = 0;   // staleness: reports lost in transit addressed to this agent
};

/// One agent per sector, initialised from a tilt vector and flat multipliers.
std::vector<SectorAgent> make_agents(const Network& net, const LinearizationPoint& lin, std::span<const double> tilts,
                                     const Multipliers& multipliers);

TiltVector agent_tilts(const std::vector<SectorAgent>& agents);
Multipliers agent_multipliers(const std::vector<SectorAgent>& agents, std::size_t users);

struct ReportOptions {
    double interference_floor = 1e-3;  // omit links below this share of the user's interference + noise
};

struct ReportStats {
    std::size_t entries = 0;   // per-user tuples sent to other sectors
    std::size_t omitted = 0;   // interferer links under the floor
    double omitted_share = 0.0;  // largest omitted share of interference + noise
};

/// Reports for one round. Element b is sector b's inbox, in ascending sender order; its own
/// served users appear as a report from b to b. Powers and SINR come from the true channel,
/// pointing angles from reported positions. Users on the rate cap send nothing.
std::vector<std::vector<InterferenceReport>> generate_reports(const LinkTable& links, Variant variant,
                                                              const std::vector<SectorAgent>& agents,
                                                              const ReportOptions& options = {},
                                                              ReportStats* stats = nullptr);

/// Applies one synchronous update per agent from its inbox only.
void agent_round(std::vector<SectorAgent>& agents, const std::vector<std::vector<InterferenceReport>>& inboxes,
                 double alpha, const AgentConfig& config);

struct DistributedOptions {
    double alpha = 0.05;
    std::size_t rounds = 500;
    ReportOptions reports;
    double drop_probability = 0.0;   // per inter-sector message
    std::uint64_t seed = 0;
    std::ostream* message_log = nullptr;  // JSON lines: round, from, to, entries, bytes
};

struct DistributedResult {
    std::vector<SectorAgent> agents;
    std::vector<TiltVector> tilt_history;  // rounds + 1 entries
    std::size_t messages = 0;
    std::size_t dropped = 0;
    std::size_t entries = 0;
    std::size_t omitted_links = 0;
    double max_omitted_share = 0.0;
    double staleness = 0.0;  // dropped / sent inter-sector messages
};

DistributedResult run_distributed(const TiltProblem& problem, std::span<const double> tilts0,
                                  const Multipliers& multipliers0, const DistributedOptions& options);

/// Reported positions: true + N(0, sigma^2) per coordinate, seeded. sigma in metres.
std::vector<Position> inject_location_noise(const Network& net, double sigma_m, std::uint64_t seed);

/// Copy of the network with the given reported positions; true positions are untouched.
Network with_reported_positions(const Network& net, const std::vector<Position>& reported);

} // namespace tiltopt

#endif
