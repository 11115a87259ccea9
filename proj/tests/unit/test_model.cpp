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

#include "doctest.h"

#include "fixtures.hpp"
#include "tiltopt/units.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <random>

using namespace tiltopt;
using tiltopt::testing::toy_network;
using hp = boost::multiprecision::cpp_bin_float_50;

namespace {

Sector sector_at(double x, double y)
{
    Sector s;
    s.position = {x, y};
    return s;
}

User user_at(double x, double y)
{
    User u;
    u.position = {x, y};
    u.reported = u.position;
    u.noise_mw = {1e-3};
    return u;
}

} // namespace

TEST_CASE("distance between sector and user")
{
    CHECK(distance(sector_at(0.2, 0.3), user_at(0.2, 0.3)) == 0.0);
    CHECK(distance(sector_at(0, 0), user_at(0.5, 0)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(distance(sector_at(0, 0), user_at(0.3, 0.4)) == doctest::Approx(0.5).epsilon(1e-15));

    User noisy = user_at(0.3, 0.4);
    noisy.reported = {0.0, 0.1};
    CHECK(distance(sector_at(0, 0), noisy, true) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("distance is symmetric under swapping the endpoints")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int i = 0; i < 500; ++i) {
        const double a = d(rng), b = d(rng), c = d(rng), e = d(rng);
        CHECK(distance(sector_at(a, b), user_at(c, e)) == distance(sector_at(c, e), user_at(a, b)));
    }
}

TEST_CASE("pointing angle")
{
    Network net;
    net.height_m = 25.0;

    // 50-digit reference for atan(0.025 / 0.5)
    const hp ref = boost::multiprecision::atan(hp("0.025") / hp("0.5")) * 180 / boost::math::constants::pi<hp>();
    CHECK(pointing_angle(sector_at(0, 0), user_at(0.5, 0), net) ==
          doctest::Approx(static_cast<double>(ref)).epsilon(1e-14));
    CHECK(pointing_angle(sector_at(0, 0), user_at(0.5, 0), net) == doctest::Approx(2.8624).epsilon(1e-4));
    CHECK(pointing_angle(sector_at(0, 0), user_at(0.025, 0), net) == doctest::Approx(45.0).epsilon(1e-14));
    CHECK_THROWS_AS(pointing_angle(sector_at(0.1, 0.1), user_at(0.1, 0.1), net), GeometryError);
}

TEST_CASE("pointing angle decreases strictly with distance")
{
    Network net;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(1e-3, 20.0);
    std::vector<double> ds(400);
    for (auto& x : ds)
        x = d(rng);
    std::sort(ds.begin(), ds.end());
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
    double prev = 90.0;
    for (double x : ds) {
        const double a = pointing_angle(sector_at(0, 0), user_at(x, 0), net);
        CHECK(a < prev);
        CHECK(a > 0.0);
        prev = a;
    }
}

TEST_CASE("bearing offset wraps to (-180, 180]")
{
    Sector s = sector_at(0, 0);
    s.azimuth_deg = 240.0;
    CHECK(bearing_offset(s, user_at(1, 0)) == doctest::Approx(120.0));
    s.azimuth_deg = 0.0;
    CHECK(bearing_offset(s, user_at(0, -1)) == doctest::Approx(-90.0));
}

TEST_CASE("hexagonal scenario construction")
{
    const Network net = build_hex_scenario(cluster_scenario_spec(), 1);
    CHECK(net.num_sectors() == 9);
    CHECK(net.num_users() == 34);
    for (const auto& s : net.sectors) {
        CHECK(s.power_mw == doctest::Approx(39810.7).epsilon(1e-6));
        CHECK(s.max_gain == doctest::Approx(31.62).epsilon(1e-3));
        CHECK(s.azimuth_deg == doctest::Approx(120.0 * (s.id % 3)));
        const auto& first = net.sectors[static_cast<std::size_t>(s.site) * 3];
        CHECK(s.position.x_km == first.position.x_km);
        CHECK(s.position.y_km == first.position.y_km);
    }
    CHECK(net.horizontal.enabled);
    CHECK(invariant_violations(net).empty());

    ScenarioSpec single = pair_scenario_spec();
    CHECK_FALSE(build_hex_scenario(single, 1).horizontal.enabled);
}

TEST_CASE("scenario construction is a pure function of spec and seed")
{
    for (const auto& spec : {cluster_scenario_spec(), urban_scenario_spec(120)}) {
        const Network a = build_hex_scenario(spec, 5);
        const Network b = build_hex_scenario(spec, 5);
        REQUIRE(a.num_users() == b.num_users());
        for (std::size_t u = 0; u < a.num_users(); ++u) {
            CHECK(a.users[u].position.x_km == b.users[u].position.x_km);
            CHECK(a.users[u].position.y_km == b.users[u].position.y_km);
        }
        CHECK(a.serving == b.serving);
        CHECK(a.shadow_db == b.shadow_db);
    }
    const Network c = build_hex_scenario(urban_scenario_spec(120), 6);
    const Network d = build_hex_scenario(urban_scenario_spec(120), 5);
    CHECK(c.users[0].position.x_km != d.users[0].position.x_km);
}

TEST_CASE("invalid scenario specs are rejected with every problem listed")
{
    ScenarioSpec spec = cluster_scenario_spec();
    spec.isd_m = 0.0;
    spec.sectors_per_site = 2;
    try {
        build_hex_scenario(spec, 1);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.problems().size() >= 2);
    }
}

TEST_CASE("network invariants")
{
    Network net = toy_network({{0, 0}}, {{0.1, 0}}, {0});
    CHECK(invariant_violations(net).empty());

    net.sectors[0].tilt_min_deg = 25.0;
    net.rate_min_mbps = 20.0;
    net.users[0].noise_mw = {0.0};
    const auto v = invariant_violations(net);
    CHECK(v.size() >= 3);
    CHECK_THROWS_AS(validate(net), ConfigError);
}

TEST_CASE("strongest-power association")
{
    SUBCASE("single sector takes every user")
    {
        Network net = toy_network({{0, 0}}, {{0.1, 0}, {0.4, 0.3}, {-1, 2}}, {0, 0, 0});
        const std::vector<double> tilts{8.0};
        CHECK(associate_users(net, AssociationPolicy::strongest_power, tilts) == std::vector<int>{0, 0, 0});
    }
    SUBCASE("symmetric tie goes to the lower index")
    {
        Network net = toy_network({{0, 0}, {1, 0}}, {{0.5, 0}}, {1});
        const std::vector<double> tilts{8.0, 8.0};
        CHECK(associate_users(net, AssociationPolicy::strongest_power, tilts) == std::vector<int>{0});
    }
    SUBCASE("every user goes to the sector with the strongest received power")
    {
        const Network net = build_hex_scenario(cluster_scenario_spec(), 1);
        std::vector<double> tilts(net.num_sectors(), 8.0);
        tilts[0] = 20.0;
        const auto map = associate_users(net, AssociationPolicy::strongest_power, tilts);
        LinkTable links(net, {tilts});
        for (std::size_t u = 0; u < net.num_users(); ++u) {
            std::size_t best = 0;
            for (std::size_t b = 1; b < net.num_sectors(); ++b)
                if (links.received_power_exact(b, u, tilts[b]) > links.received_power_exact(best, u, tilts[best]))
                    best = b;
            CHECK(map[u] == static_cast<int>(best));
        }
    }
    SUBCASE("explicit policy returns the stored map")
    {
        Network net = toy_network({{0, 0}, {1, 0}}, {{0.1, 0}}, {1});
        CHECK(associate_users(net, AssociationPolicy::explicit_map) == std::vector<int>{1});
    }
}

TEST_CASE("site lattice")
{
    const auto p = hex_site_positions(7, 500.0);
    REQUIRE(p.size() == 7);
    for (std::size_t i = 1; i < p.size(); ++i)
        CHECK(std::hypot(p[i].x_km, p[i].y_km) == doctest::Approx(0.5));
    for (std::size_t i = 1; i < p.size(); ++i) {
        const auto& a = p[i];
        const auto& b = p[i % 6 + 1];
        CHECK(std::hypot(a.x_km - b.x_km, a.y_km - b.y_km) == doctest::Approx(0.5));
    }
}
