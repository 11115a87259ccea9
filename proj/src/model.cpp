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

#include "tiltopt/model.hpp"

#include "tiltopt/radio.hpp"
#include "tiltopt/units.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace tiltopt {

namespace {

std::string join_problems(const std::vector<std::string>& problems)
{
    std::ostringstream os;
    os << "invalid configuration:";
    for (const auto& p : problems)
        os << "\n  - " << p;
    return os.str();
}

bool finite(const Position& p) { return std::isfinite(p.x_km) && std::isfinite(p.y_km); }

} // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems))
{
}

double HorizontalPattern::attenuation(double offset_deg) const
{
    if (!enabled)
        return 1.0;
    const double a = std::remainder(offset_deg, 360.0);
    const double loss_db = std::min(12.0 * (a / beamwidth_deg) * (a / beamwidth_deg), floor_db);
    return db_to_linear(-loss_db);
}

std::vector<std::string> invariant_violations(const Network& net)
{
    std::vector<std::string> out;
    auto add = [&](std::string s) { out.push_back(std::move(s)); };

    if (net.sectors.empty())
        add("network has no sectors");
    if (net.subcarriers < 1)
        add("subcarriers must be >= 1");
    if (!(net.rho0 > 0.0))
        add("rho0 must be > 0");
    if (!(net.beta > 0.0))
        add("beta must be > 0");
    if (!(net.height_m > 0.0))
        add("height_m must be > 0");
    if (!(net.bandwidth_mhz > 0.0))
        add("bandwidth must be > 0");
    if (!(net.kappa > 0.0))
        add("kappa must be > 0");
    if (!(net.rate_min_mbps >= 0.0 && net.rate_min_mbps < net.rate_max_mbps))
        add("rate bounds must satisfy 0 <= rate_min < rate_max");
    if (net.horizontal.enabled && !(net.horizontal.beamwidth_deg > 0.0 && net.horizontal.floor_db >= 0.0))
        add("horizontal pattern needs beamwidth > 0 and floor >= 0");

    for (std::size_t b = 0; b < net.sectors.size(); ++b) {
        const auto& s = net.sectors[b];
        const std::string tag = "sector " + std::to_string(s.id);
        if (s.id != static_cast<int>(b))
            add(tag + ": id must equal its index " + std::to_string(b));
        if (!(s.tilt_min_deg < s.tilt_max_deg))
            add(tag + ": tilt_min must be < tilt_max");
        if (!(s.power_mw > 0.0))
            add(tag + ": power must be > 0");
        if (!(s.max_gain > 0.0))
            add(tag + ": max gain must be > 0");
        if (!(s.beamwidth_deg > 0.0))
            add(tag + ": beamwidth must be > 0");
        if (!finite(s.position))
            add(tag + ": position must be finite");
    }

    if (net.serving.size() != net.users.size())
        add("association map must have one entry per user");
    for (std::size_t u = 0; u < net.users.size(); ++u) {
        const auto& usr = net.users[u];
        const std::string tag = "user " + std::to_string(usr.id);
        if (usr.id != static_cast<int>(u))
            add(tag + ": id must equal its index " + std::to_string(u));
        if (static_cast<int>(usr.noise_mw.size()) != net.subcarriers)
            add(tag + ": needs one noise power per sub-carrier");
        for (double n : usr.noise_mw)
            if (!(n > 0.0)) {
                add(tag + ": noise power must be > 0");
                break;
            }
        if (!finite(usr.position) || !finite(usr.reported))
            add(tag + ": position must be finite");
        if (u < net.serving.size()) {
            const int b = net.serving[u];
            if (b < 0 || b >= static_cast<int>(net.sectors.size()))
                add(tag + ": not associated to a sector");
        }
    }

    if (!net.shadow_db.empty() && net.shadow_db.size() != net.sectors.size() * net.users.size())
        add("shadowing field must have sectors x users entries");
    return out;
}

void validate(const Network& net)
{
    auto problems = invariant_violations(net);
    if (!problems.empty())
        throw ConfigError(std::move(problems));
}

double distance(const Sector& b, const User& u, bool use_reported)
{
    const Position& p = use_reported ? u.reported : u.position;
    return std::hypot(p.x_km - b.position.x_km, p.y_km - b.position.y_km);
}

double pointing_angle(const Sector& b, const User& u, const Network& net, bool use_reported)
{
    const double d = distance(b, u, use_reported);
    if (!(d > 0.0))
        throw GeometryError("degenerate geometry: sector " + std::to_string(b.id) + " and user " +
                            std::to_string(u.id) + " are co-located");
    return rad_to_deg(std::atan((net.height_m / 1000.0) / d));
}

double bearing_offset(const Sector& b, const User& u)
{
    const double bearing = rad_to_deg(std::atan2(u.position.y_km - b.position.y_km,
                                                 u.position.x_km - b.position.x_km));
    return std::remainder(bearing - b.azimuth_deg, 360.0);
}

std::vector<int> associate_users(const Network& net, AssociationPolicy policy, std::span<const double> tilts)
{
    if (policy == AssociationPolicy::explicit_map)
        return net.serving;

    if (tilts.size() != net.num_sectors())
        throw ConfigError({"strongest-power association needs one tilt per sector"});

    LinearizationPoint lin{std::vector<double>(tilts.begin(), tilts.end())};
    LinkTable links(net, lin);
    std::vector<int> out(net.num_users(), -1);
    for (std::size_t u = 0; u < net.num_users(); ++u) {
        double best = -1.0;
        for (std::size_t b = 0; b < net.num_sectors(); ++b) {
            const double h = links.received_power_exact(b, u, tilts[b]);
            if (h > best) {
                best = h;
                out[u] = static_cast<int>(b);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<Position> hex_site_positions(int sites, double isd_m)
{
    std::vector<Position> out;
    if (sites <= 0)
        return out;
    const double isd = isd_m / 1000.0;
    out.push_back({0.0, 0.0});
    // axial hex directions, counter-clockwise from +x
    const double c = std::cos(std::numbers::pi / 3.0);
    const double s = std::sin(std::numbers::pi / 3.0);
    const Position dir[6] = {{1, 0}, {c, s}, {-c, s}, {-1, 0}, {-c, -s}, {c, -s}};
    for (int ring = 1; static_cast<int>(out.size()) < sites; ++ring) {
        // start at ring * dir[0], walk the six edges
        Position p{ring * isd * dir[0].x_km, ring * isd * dir[0].y_km};
        for (int edge = 0; edge < 6 && static_cast<int>(out.size()) < sites; ++edge) {
            const Position& step = dir[(edge + 2) % 6];
            for (int k = 0; k < ring && static_cast<int>(out.size()) < sites; ++k) {
                out.push_back(p);
                p.x_km += isd * step.x_km;
                p.y_km += isd * step.y_km;
            }
        }
    }
    return out;
}

Network build_hex_scenario(const ScenarioSpec& spec, std::uint64_t seed)
{
    std::vector<std::string> problems;
    if (!(spec.isd_m > 0.0))
        problems.push_back("inter-site distance must be > 0");
    if (spec.sectors_per_site != 1 && spec.sectors_per_site != 3)
        problems.push_back("sectors per site must be 1 or 3");
    if (spec.sites < 1)
        problems.push_back("need at least one site");
    if (spec.shadow_sigma_db < 0.0)
        problems.push_back("shadowing sigma must be >= 0");
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
        const auto& grp = spec.groups[g];
        const std::string tag = "user group " + std::to_string(g);
        if (grp.kind == UserGroup::Kind::points) {
            if (grp.points.empty())
                problems.push_back(tag + ": no points given");
        } else if (grp.count < 0) {
            problems.push_back(tag + ": negative count");
        }
        if (grp.kind == UserGroup::Kind::cluster && (grp.site < 0 || grp.site >= spec.sites))
            problems.push_back(tag + ": cluster site out of range");
        if (grp.kind == UserGroup::Kind::uniform && !(grp.region_radius_m > 0.0))
            problems.push_back(tag + ": uniform region radius must be > 0");
        if (grp.serving_sector >= spec.sites * spec.sectors_per_site)
            problems.push_back(tag + ": serving sector out of range");
    }
    if (!problems.empty())
        throw ConfigError(std::move(problems));

    const auto& rc = spec.radio;
    Network net;
    net.height_m = rc.height_m;
    net.rho0 = rc.rho0;
    net.beta = rc.beta;
    net.bandwidth_mhz = rc.bandwidth_mhz;
    net.subcarriers = rc.subcarriers;
    net.kappa = rc.kappa;
    net.rate_min_mbps = rc.rate_min_kbps / kbps_per_mbps;
    net.rate_max_mbps = rc.rate_max_mbps;
    net.horizontal.enabled = spec.horizontal_pattern < 0 ? spec.sectors_per_site == 3 : spec.horizontal_pattern == 1;
    net.horizontal.beamwidth_deg = spec.horizontal_beamwidth_deg;
    net.horizontal.floor_db = spec.horizontal_floor_db;

    const auto sites = hex_site_positions(spec.sites, spec.isd_m);
    for (int s = 0; s < spec.sites; ++s)
        for (int k = 0; k < spec.sectors_per_site; ++k) {
            Sector sec;
            sec.id = static_cast<int>(net.sectors.size());
            sec.site = s;
            sec.position = sites[s];
            sec.azimuth_deg = spec.sectors_per_site == 3 ? 120.0 * k : 0.0;
            sec.tilt_min_deg = rc.tilt_min_deg;
            sec.tilt_max_deg = rc.tilt_max_deg;
            sec.power_mw = dbm_to_mw(rc.power_dbm);
            sec.max_gain = db_to_linear(rc.max_gain_dbi);
            sec.beamwidth_deg = rc.beamwidth_deg;
            net.sectors.push_back(sec);
        }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto in_disc = [&](Position centre, double radius_km) {
        const double r = radius_km * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        return Position{centre.x_km + r * std::cos(phi), centre.y_km + r * std::sin(phi)};
    };

    Position centroid{};
    for (const auto& p : sites) {
        centroid.x_km += p.x_km / sites.size();
        centroid.y_km += p.y_km / sites.size();
    }

    const double noise = dbm_to_mw(rc.noise_dbm);
    std::vector<int> group_serving;
    auto add_user = [&](Position p, int serving) {
        User u;
        u.id = static_cast<int>(net.users.size());
        u.position = p;
        u.reported = p;
        u.noise_mw.assign(rc.subcarriers, noise);
        net.users.push_back(std::move(u));
        group_serving.push_back(serving);
    };

    for (const auto& grp : spec.groups) {
        switch (grp.kind) {
        case UserGroup::Kind::cluster: {
            const double bearing = deg_to_rad(grp.bearing_deg);
            const Position c{sites[grp.site].x_km + grp.distance_m / 1000.0 * std::cos(bearing),
                             sites[grp.site].y_km + grp.distance_m / 1000.0 * std::sin(bearing)};
            for (int i = 0; i < grp.count; ++i)
                add_user(in_disc(c, grp.radius_m / 1000.0), grp.serving_sector);
            break;
        }
        case UserGroup::Kind::points:
            for (const auto& p : grp.points)
                add_user(p, grp.serving_sector);
            break;
        case UserGroup::Kind::uniform:
            for (int i = 0; i < grp.count; ++i) {
                Position p;
                bool ok = false;
                while (!ok) {
                    p = in_disc(centroid, grp.region_radius_m / 1000.0);
                    ok = std::all_of(sites.begin(), sites.end(), [&](const Position& s) {
                        return std::hypot(p.x_km - s.x_km, p.y_km - s.y_km) * 1000.0 >= grp.min_distance_m;
                    });
                }
                add_user(p, grp.serving_sector);
            }
            break;
        }
    }

    if (spec.shadow_sigma_db > 0.0) {
        // One realisation per (site, user); co-sited sectors see the same obstruction.
        std::mt19937_64 shadow_rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::normal_distribution<double> gauss(0.0, spec.shadow_sigma_db);
        std::vector<double> per_site(static_cast<std::size_t>(spec.sites) * net.users.size());
        for (auto& v : per_site)
            v = gauss(shadow_rng);
        net.shadow_db.resize(net.sectors.size() * net.users.size());
        for (std::size_t b = 0; b < net.sectors.size(); ++b)
            for (std::size_t u = 0; u < net.users.size(); ++u)
                net.shadow_db[b * net.users.size() + u] = per_site[net.sectors[b].site * net.users.size() + u];
    }

    net.serving.assign(net.users.size(), 0);
    const std::vector<double> assoc_tilts(net.sectors.size(), spec.association_tilt_deg);
    const auto strongest = associate_users(net, AssociationPolicy::strongest_power, assoc_tilts);
    for (std::size_t u = 0; u < net.users.size(); ++u)
        net.serving[u] = group_serving[u] >= 0 ? group_serving[u] : strongest[u];

    validate(net);
    return net;
}

ScenarioSpec cluster_scenario_spec()
{
    ScenarioSpec spec;
    spec.sites = 3;
    spec.isd_m = 500.0;
    spec.sectors_per_site = 3;

    UserGroup first;
    first.kind = UserGroup::Kind::cluster;
    first.count = 16;
    first.site = 0;
    first.bearing_deg = 0.0;
    first.distance_m = 40.0;
    first.radius_m = 10.0;
    first.serving_sector = 0;

    UserGroup second = first;
    second.site = 1;
    second.bearing_deg = 240.0;
    second.serving_sector = 5;

    UserGroup edge;
    edge.kind = UserGroup::Kind::points;
    edge.points = {{0.24, 0.01}, {0.26, -0.01}};

    spec.groups = {first, second, edge};
    return spec;
}

ScenarioSpec pair_scenario_spec()
{
    ScenarioSpec spec;
    spec.sites = 2;
    spec.isd_m = 500.0;
    spec.sectors_per_site = 1;
    // no user reaches the cap, so the optimum is a single smooth point
    spec.radio.rate_max_mbps = 1000.0;

    UserGroup near_first;
    near_first.kind = UserGroup::Kind::points;
    near_first.points = {{0.10, 0.01}, {0.15, -0.015}};
    near_first.serving_sector = 0;

    UserGroup near_second = near_first;
    near_second.points = {{0.35, 0.012}, {0.30, -0.008}};
    near_second.serving_sector = 1;

    spec.groups = {near_first, near_second};
    return spec;
}

ScenarioSpec urban_scenario_spec(int users)
{
    ScenarioSpec spec;
    spec.sites = 7;
    spec.isd_m = 800.0;
    spec.sectors_per_site = 3;
    spec.radio.beta = 3.9;
    spec.radio.rho0 = std::pow(10.0, -2.1);
    spec.shadow_sigma_db = 6.0;
    // high enough that the cap does not set the median
    spec.radio.rate_max_mbps = 100.0;

    UserGroup all;
    all.kind = UserGroup::Kind::uniform;
    all.count = users;
    all.region_radius_m = 1200.0;
    all.min_distance_m = 20.0;
    spec.groups = {all};
    return spec;
}

} // namespace tiltopt
