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

#include "tiltopt/distributed.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

namespace tiltopt {

AgentConfig make_agent_config(const Network& net, Variant variant, UtilitySpec utility)
{
    AgentConfig cfg;
    cfg.constants = net;
    cfg.constants.sectors.clear();
    cfg.constants.users.clear();
    cfg.constants.serving.clear();
    cfg.constants.shadow_db.clear();
    cfg.variant = variant;
    cfg.utility = utility;
    return cfg;
}

std::vector<SectorAgent> make_agents(const Network& net, const LinearizationPoint& lin, std::span<const double> tilts,
                                     const Multipliers& multipliers)
{
    std::vector<SectorAgent> agents(net.num_sectors());
    for (std::size_t b = 0; b < agents.size(); ++b) {
        auto& a = agents[b];
        a.sector = static_cast<int>(b);
        a.antenna = net.sectors[b];
        a.lin_point = lin.tilt_deg.at(b);
        a.tilt = tilts[b];
        a.lower = multipliers.lower.at(b);
        a.upper = multipliers.upper.at(b);
    }
    for (std::size_t u = 0; u < net.num_users(); ++u) {
        auto& a = agents[net.serving[u]];
        a.served.push_back(static_cast<int>(u));
        a.rate_multiplier.push_back(multipliers.rate.at(u));
    }
    return agents;
}

TiltVector agent_tilts(const std::vector<SectorAgent>& agents)
{
    TiltVector out(agents.size());
    for (std::size_t b = 0; b < agents.size(); ++b)
        out[b] = agents[b].tilt;
    return out;
}

Multipliers agent_multipliers(const std::vector<SectorAgent>& agents, std::size_t users)
{
    Multipliers m = Multipliers::zeros(users, agents.size());
    for (std::size_t b = 0; b < agents.size(); ++b) {
        m.lower[b] = agents[b].lower;
        m.upper[b] = agents[b].upper;
        for (std::size_t i = 0; i < agents[b].served.size(); ++i)
            m.rate[agents[b].served[i]] = agents[b].rate_multiplier[i];
    }
    return m;
}

std::vector<std::vector<InterferenceReport>> generate_reports(const LinkTable& links, Variant variant,
                                                              const std::vector<SectorAgent>& agents,
                                                              const ReportOptions& options, ReportStats* stats)
{
    const Network& net = links.network();
    const std::size_t sectors = net.num_sectors();
    const TiltVector tilts = agent_tilts(agents);

    // outbox[from][to]
    std::vector<std::vector<InterferenceReport>> outbox(sectors, std::vector<InterferenceReport>(sectors));
    for (std::size_t b = 0; b < sectors; ++b)
        for (std::size_t c = 0; c < sectors; ++c) {
            outbox[b][c].from = static_cast<int>(b);
            outbox[b][c].to = static_cast<int>(c);
        }

    ReportStats local;
    for (std::size_t b = 0; b < sectors; ++b) {
        const SectorAgent& agent = agents[b];
        for (std::size_t i = 0; i < agent.served.size(); ++i) {
            const std::size_t u = static_cast<std::size_t>(agent.served[i]);
            const UserMeasurement m = measure_user(links, u, tilts);
            const bool capped = user_rate_term(net, variant, m.sinr).capped;

            ReportEntry base;
            base.user = static_cast<int>(u);
            base.serving = static_cast<int>(b);
            base.serving_power = m.serving_power;
            base.sinr = m.sinr;
            base.interference = m.interference;
            base.rate_multiplier = agent.rate_multiplier[i];

            ReportEntry own = base;
            own.target_power = m.serving_power;
            own.pointing_deg = links.reported_pointing(b, u);
            outbox[b][b].entries.push_back(std::move(own));
            if (capped)
                continue;

            const double mean_interference =
                std::accumulate(m.interference.begin(), m.interference.end(), 0.0) / m.interference.size();
            for (std::size_t c = 0; c < sectors; ++c) {
                if (c == b)
                    continue;
                const double share = m.interferer_power[c] / mean_interference;
                if (share < options.interference_floor) {
                    ++local.omitted;
                    local.omitted_share = std::max(local.omitted_share, share);
                    continue;
                }
                ReportEntry e = base;
                e.target_power = m.interferer_power[c];
                e.pointing_deg = links.reported_pointing(c, u);
                outbox[b][c].entries.push_back(std::move(e));
                ++local.entries;
            }
        }
    }

    std::vector<std::vector<InterferenceReport>> inbox(sectors);
    for (std::size_t c = 0; c < sectors; ++c)
        for (std::size_t b = 0; b < sectors; ++b)
            if (b == c || !outbox[b][c].entries.empty())
                inbox[c].push_back(std::move(outbox[b][c]));
    if (stats)
        *stats = local;
    return inbox;
}

void agent_round(std::vector<SectorAgent>& agents, const std::vector<std::vector<InterferenceReport>>& inboxes,
                 double alpha, const AgentConfig& config)
{
    const Network& k = config.constants;
    std::vector<SectorAgent> next = agents;

    for (std::size_t b = 0; b < agents.size(); ++b) {
        const SectorAgent& me = agents[b];
        const double bw = me.antenna.beamwidth_deg;

        std::vector<const ReportEntry*> entries;
        for (const auto& rep : inboxes[b])
            for (const auto& e : rep.entries)
                entries.push_back(&e);
        std::sort(entries.begin(), entries.end(),
                  [](const ReportEntry* a, const ReportEntry* c) { return a->user < c->user; });

        double grad = 0.0;
        std::vector<double> dlog;
        for (const ReportEntry* e : entries) {
            const UserRateTerm term = user_rate_term(k, config.variant, e->sinr);
            if (term.capped)
                continue;
            const auto weights = rate_sensitivity_weights(k, config.variant, e->sinr);
            const double coef = user_gradient_coefficient(config.variant, config.utility,
                                                          spectral_efficiency(k, config.variant, term),
                                                          e->rate_multiplier);
            dlog.resize(e->sinr.size());
            if (e->serving == me.sector) {
                std::fill(dlog.begin(), dlog.end(), serving_log_sinr_slope(me.tilt, e->pointing_deg, bw));
            } else {
                for (std::size_t n = 0; n < dlog.size(); ++n)
                    dlog[n] = interferer_log_sinr_slope(e->target_power, e->pointing_deg, me.lin_point, bw,
                                                        e->interference[n]);
            }
            grad += user_tilt_term(coef, weights, dlog);
        }
        grad = grad - me.lower + me.upper;

        SectorAgent& out = next[b];
        out.tilt = me.tilt - alpha * grad;
        out.lower = std::max(0.0, me.lower + alpha * (me.antenna.tilt_min_deg - me.tilt));
        out.upper = std::max(0.0, me.upper + alpha * (me.tilt - me.antenna.tilt_max_deg));

        // lambda^1 for served users, from the own-sector report
        for (const auto& rep : inboxes[b]) {
            if (rep.from != me.sector)
                continue;
            for (const auto& e : rep.entries) {
                const auto it = std::lower_bound(me.served.begin(), me.served.end(), e.user);
                const std::size_t i = static_cast<std::size_t>(it - me.served.begin());
                const double g = rate_constraint_value(k, config.variant, user_rate_term(k, config.variant, e.sinr));
                out.rate_multiplier[i] = std::max(0.0, me.rate_multiplier[i] + alpha * g);
            }
        }
    }
    agents = std::move(next);
}

DistributedResult run_distributed(const TiltProblem& problem, std::span<const double> tilts0,
                                  const Multipliers& multipliers0, const DistributedOptions& options)
{
    const Network& net = problem.network();
    const AgentConfig config = make_agent_config(net, problem.variant(), problem.utility());

    DistributedResult res;
    res.agents = make_agents(net, problem.links().linearization(), tilts0, multipliers0);
    res.tilt_history.push_back(agent_tilts(res.agents));

    std::mt19937_64 rng(options.seed);
    std::bernoulli_distribution drop(options.drop_probability);
    std::size_t sent = 0;

    for (std::size_t r = 0; r < options.rounds; ++r) {
        ReportStats stats;
        auto inboxes = generate_reports(problem.links(), problem.variant(), res.agents, options.reports, &stats);
        res.entries += stats.entries;
        res.omitted_links += stats.omitted;
        res.max_omitted_share = std::max(res.max_omitted_share, stats.omitted_share);

        for (std::size_t c = 0; c < inboxes.size(); ++c) {
            auto& box = inboxes[c];
            std::vector<InterferenceReport> delivered;
            for (auto& rep : box) {
                const bool remote = rep.from != rep.to;
                bool lost = false;
                if (remote) {
                    ++sent;
                    ++res.messages;
                    lost = options.drop_probability > 0.0 && drop(rng);
                }
                if (options.message_log && remote) {
                    std::size_t bytes = 0;
                    for (const auto& e : rep.entries)
                        bytes += sizeof(double) * (5 + e.sinr.size() + e.interference.size()) + 2 * sizeof(int);
                    nlohmann::json line = {{"round", r},
                                           {"from", rep.from},
                                           {"to", rep.to},
                                           {"entries", rep.entries.size()},
                                           {"bytes", bytes},
                                           {"dropped", lost}};
                    *options.message_log << line.dump() << '\n';
                }
                if (lost) {
                    ++res.dropped;
                    ++res.agents[c].missing_reports;
                    continue;
                }
                delivered.push_back(std::move(rep));
            }
            box = std::move(delivered);
        }

        agent_round(res.agents, inboxes, options.alpha, config);
        res.tilt_history.push_back(agent_tilts(res.agents));
    }
    res.staleness = sent ? static_cast<double>(res.dropped) / static_cast<double>(sent) : 0.0;
    return res;
}

std::vector<Position> inject_location_noise(const Network& net, double sigma_m, std::uint64_t seed)
{
    if (sigma_m < 0.0)
        throw std::invalid_argument("location noise sigma must be >= 0");
    std::vector<Position> out(net.num_users());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma_m / 1000.0);
    for (std::size_t u = 0; u < out.size(); ++u) {
        out[u] = net.users[u].position;
        if (sigma_m > 0.0) {
            out[u].x_km += gauss(rng);
            out[u].y_km += gauss(rng);
        }
    }
    return out;
}

Network with_reported_positions(const Network& net, const std::vector<Position>& reported)
{
    if (reported.size() != net.num_users())
        throw std::invalid_argument("need one reported position per user");
    Network out = net;
    for (std::size_t u = 0; u < reported.size(); ++u)
        out.users[u].reported = reported[u];
    return out;
}

} // namespace tiltopt
