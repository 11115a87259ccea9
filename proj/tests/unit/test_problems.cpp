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

#include <cmath>
#include <numbers>

using namespace tiltopt;
using namespace tiltopt::testing;

namespace {

const double k_curv = 2.4 * std::numbers::ln10 / 100.0;  // 10 degree beamwidth

// two sectors, two users, every quantity recomputed by hand below
Network two_by_two()
{
    Network net = toy_network({{0, 0}, {0.6, 0}}, {{0.15, 0.02}, {0.42, -0.03}}, {0, 1}, 0.0316, 3.76);
    for (auto& s : net.sectors) {
        s.power_mw = 4.0e4;
        s.max_gain = 31.6;
    }
    for (auto& u : net.users)
        u.noise_mw = {3.2e-10};
    net.rate_min_mbps = 0.5;
    net.rate_max_mbps = 1e3;
    return net;
}

double hand_pointing(const Sector& s, const User& u)
{
    const double d = std::hypot(u.position.x_km - s.position.x_km, u.position.y_km - s.position.y_km);
    return std::atan(0.025 / d) * 180.0 / std::numbers::pi;
}

double hand_power(const Network& net, std::size_t c, std::size_t u, double tilt, std::optional<double> lin)
{
    const Sector& s = net.sectors[c];
    const User& usr = net.users[u];
    const double d = std::hypot(usr.position.x_km - s.position.x_km, usr.position.y_km - s.position.y_km);
    const double p = hand_pointing(s, usr);
    const double k = 1.2 * std::numbers::ln10 / 100.0;
    const double e = lin ? -k * ((p - *lin) * (p - *lin) - 2.0 * (p - *lin) * (tilt - *lin)) : -k * (p - tilt) * (p - tilt);
    return s.max_gain * s.power_mw * net.rho0 * std::pow(d, -net.beta) * std::exp(e);
}

} // namespace

TEST_CASE("Lagrangian values")
{
    const Network net = two_by_two();
    const TiltVector lin{8.0, 8.0};
    const TiltVector t{6.5, 11.0};

    SUBCASE("multiplier-free high-SINR Lagrangian is minus the spectral efficiency sum")
    {
        TiltProblem p(net, Variant::high_sinr, {lin});
        const auto u = Multipliers::zeros(2, 2).flatten();
        double expected = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
            const std::size_t b = k, c = 1 - k;
            const double g = hand_power(net, b, k, t[b], std::nullopt) / (hand_power(net, c, k, t[c], lin[c]) + 3.2e-10);
            expected -= std::log(g);
        }
        CHECK(p.lagrangian(t, u) == doctest::Approx(expected).epsilon(1e-12));
    }

    SUBCASE("full Lagrangians against a scalar recomputation")
    {
        const Multipliers m{{0.7, 0.2}, {0.3, 0.0}, {0.1, 0.9}};
        double rate_hat[2], rate_exact[2];
        for (std::size_t k = 0; k < 2; ++k) {
            const std::size_t b = k, c = 1 - k;
            const double g = hand_power(net, b, k, t[b], std::nullopt) / (hand_power(net, c, k, t[c], lin[c]) + 3.2e-10);
            rate_hat[k] = 10.0 * std::log(g);
            rate_exact[k] = 10.0 * std::log1p(g);
        }
        const double bounds = 0.3 * (5.0 - t[0]) + 0.1 * (t[0] - 20.0) + 0.0 * (5.0 - t[1]) + 0.9 * (t[1] - 20.0);

        TiltProblem p1(net, Variant::high_sinr, {lin});
        const double l1 = -(rate_hat[0] + rate_hat[1]) / 10.0 + 0.7 * (0.5 - rate_hat[0]) / 10.0 +
                          0.2 * (0.5 - rate_hat[1]) / 10.0 + bounds;
        CHECK(p1.lagrangian(t, m.flatten()) == doctest::Approx(l1).epsilon(1e-12));

        TiltProblem p2(net, Variant::prop_fair, {lin});
        const double l2 = -(std::log(rate_exact[0]) + std::log(rate_exact[1])) +
                          0.7 * (std::log(0.5) - std::log(rate_exact[0])) + 0.2 * (std::log(0.5) - std::log(rate_exact[1])) +
                          bounds;
        CHECK(p2.lagrangian(t, m.flatten()) == doctest::Approx(l2).epsilon(1e-12));

        TiltProblem plog(net, Variant::high_sinr, {lin}, {UtilitySpec::Kind::log});
        const double l3 = -(std::log(rate_hat[0] / 10.0) + std::log(rate_hat[1] / 10.0)) +
                          0.7 * (0.5 - rate_hat[0]) / 10.0 + 0.2 * (0.5 - rate_hat[1]) / 10.0 + bounds;
        CHECK(plog.lagrangian(t, m.flatten()) == doctest::Approx(l3).epsilon(1e-12));
    }

    SUBCASE("at a feasible point the multiplier terms can only lower the value")
    {
        TiltProblem p(net, Variant::high_sinr, {lin});
        const Multipliers m{{0.7, 0.2}, {0.3, 0.5}, {0.1, 0.9}};
        CHECK(feasibility_check(p, t).feasible());
        CHECK(p.lagrangian(t, m.flatten()) <= p.objective(t));
    }
}

TEST_CASE("serving tilt derivative")
{
    CHECK(serving_log_sinr_slope(9.0, 9.0, 10.0) == 0.0);
    CHECK(serving_log_sinr_slope(7.0, 9.0, 10.0) > 0.0);
    CHECK(serving_log_sinr_slope(11.0, 9.0, 10.0) < 0.0);
    CHECK(serving_log_sinr_slope(7.0, 9.0, 10.0) == doctest::Approx(k_curv * 2.0).epsilon(1e-14));
}

TEST_CASE("interferer tilt derivative")
{
    // a vanishing interference path contributes nothing
    CHECK(interferer_log_sinr_slope(0.0, 3.0, 8.0, 10.0, 1e-9) == 0.0);
    // raising the attenuation toward a user below the linearisation point (pointing > lin)
    // by tilting up increases the interference, so d ln gamma / d tilt < 0
    CHECK(interferer_log_sinr_slope(1.0, 12.0, 8.0, 10.0, 2.0) < 0.0);
    CHECK(interferer_log_sinr_slope(1.0, 4.0, 8.0, 10.0, 2.0) > 0.0);
    CHECK(interferer_log_sinr_slope(1.0, 12.0, 8.0, 10.0, 2.0) == doctest::Approx(-0.5 * k_curv * 4.0).epsilon(1e-14));
}

TEST_CASE("analytic subgradients match central differences")
{
    std::mt19937_64 rng(31);
    for (const auto& cls : scenario_classes(80)) {
        const TiltVector lin(cls.net.num_sectors(), 8.0);
        for (Variant v : {Variant::high_sinr, Variant::prop_fair}) {
            TiltProblem p(cls.net, v, {lin});
            std::size_t evaluated = 0;
            for (int i = 0; i < 20; ++i) {
                const auto t = random_tilts(rng, cls.net.num_sectors());
                const auto u = random_multipliers(rng, cls.net.num_users(), cls.net.num_sectors());
                const auto cmp = compare_with_finite_differences(p, t, u);
                if (!cmp.evaluated)
                    continue;
                ++evaluated;
                INFO(cls.name << " variant " << static_cast<int>(v));
                CHECK(cmp.worst_relative <= 1e-5);
            }
            CHECK(evaluated > 10);
        }
        TiltProblem plog(cls.net, Variant::high_sinr, {lin}, {UtilitySpec::Kind::log});
        for (int i = 0; i < 10; ++i) {
            // log utility needs R-hat > 0: start from tilts aimed at the served users
            auto t = random_tilts(rng, cls.net.num_sectors(), 7.0, 9.0);
            bool positive = true;
            for (const auto& term : plog.rate_terms(t))
                positive = positive && term.truncated > 0.0;
            if (!positive)
                continue;
            const auto u = random_multipliers(rng, cls.net.num_users(), cls.net.num_sectors());
            const auto cmp = compare_with_finite_differences(plog, t, u);
            if (cmp.evaluated)
                CHECK(cmp.worst_relative <= 1e-5);
        }
    }
}

TEST_CASE("dual subgradients are the constraint values")
{
    const Network net = two_by_two();
    TiltProblem p(net, Variant::high_sinr, {{8.0, 8.0}});
    const TiltVector t{5.0, 20.0};
    const auto sub = full_subgradients(p, t, Multipliers::zeros(2, 2));
    CHECK(sub.dual.lower[0] == 0.0);   // active lower bound
    CHECK(sub.dual.upper[1] == 0.0);   // active upper bound
    CHECK(sub.dual.lower[1] == -15.0);
    const auto terms = p.rate_terms(t);
    CHECK(sub.dual.rate[0] == doctest::Approx((0.5 - terms[0].truncated) / 10.0).epsilon(1e-14));
}

TEST_CASE("capped users contribute no subgradient")
{
    Network net = two_by_two();
    net.rate_max_mbps = 1e-3;  // every user on the cap
    net.rate_min_mbps = 0.0;
    for (Variant v : {Variant::high_sinr, Variant::prop_fair}) {
        if (v == Variant::prop_fair)
            net.rate_min_mbps = 1e-4;
        TiltProblem p(net, v, {{8.0, 8.0}});
        const TiltVector t{9.0, 13.0};
        const Multipliers m{{0.5, 0.5}, {0.25, 0.0}, {0.0, 0.75}};
        const auto sub = full_subgradients(p, t, m);
        CHECK(sub.tilt[0] == doctest::Approx(-0.25).epsilon(1e-15));
        CHECK(sub.tilt[1] == doctest::Approx(0.75).epsilon(1e-15));
    }
}

TEST_CASE("KKT points of a one-sector problem")
{
    SUBCASE("interior optimum at the user's pointing angle")
    {
        Network net = toy_network({{0, 0}}, {{0.1, 0.0}}, {0});  // pointing 14.04 deg
        net.rate_max_mbps = 1e6;
        net.rate_min_mbps = 0.01;
        TiltProblem p(net, Variant::high_sinr, {{8.0}});
        const double peak = p.links().pointing(0, 0);
        const TiltVector t{peak};
        const auto sub = full_subgradients(p, t, Multipliers::zeros(1, 1));
        CHECK(sub.tilt[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
        CHECK(sub.dual.rate[0] <= 0.0);
        CHECK(sub.dual.lower[0] <= 0.0);
        CHECK(sub.dual.upper[0] <= 0.0);
    }
    SUBCASE("optimum on the upper bound, multiplier from the balance condition")
    {
        Network net = toy_network({{0, 0}}, {{0.04, 0.0}}, {0});  // pointing 32.0 deg
        net.rate_max_mbps = 1e6;
        net.rate_min_mbps = 0.01;
        TiltProblem p(net, Variant::high_sinr, {{8.0}});
        const double peak = p.links().pointing(0, 0);
        // d(R-hat/w)/d theta at theta = 20 is k (peak - 20); lambda^3 must cancel it
        double lo = 0.0, hi = 10.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            const Multipliers m{{0.0}, {0.0}, {mid}};
            std::vector<double> g(1);
            p.lagrangian_gradient(TiltVector{20.0}, m.flatten(), g);
            (g[0] < 0.0 ? lo : hi) = mid;
        }
        CHECK(lo == doctest::Approx(k_curv * (peak - 20.0)).epsilon(1e-12));

        const Multipliers star{{0.0}, {0.0}, {k_curv * (peak - 20.0)}};
        const auto sub = full_subgradients(p, TiltVector{20.0}, star);
        CHECK(sub.tilt[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(sub.dual.upper[0] == 0.0);
        CHECK(star.upper[0] * sub.dual.upper[0] == 0.0);
    }
}

TEST_CASE("feasibility report")
{
    Network net = two_by_two();
    net.rate_min_mbps = 0.0;
    TiltProblem p(net, Variant::high_sinr, {{8.0, 8.0}});
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
        const auto t = random_tilts(rng, 2, 5.0, 20.0);
        const auto rep = feasibility_check(p, t);
        // high-SINR rates can go negative far from the lobe, so only the bounds are guaranteed
        CHECK(rep.bound_violations == 0);
    }
    net.rate_min_mbps = 0.5;
    TiltProblem q(net, Variant::prop_fair, {{8.0, 8.0}});
    const auto rep = feasibility_check(q, TiltVector{3.0, 12.0});
    REQUIRE(rep.bound_violations == 1);
    CHECK(rep.violations.front().find("sector 0") != std::string::npos);
    CHECK(feasibility_check(q, TiltVector{4.8, 12.0}, 0.5).bound_violations == 0);

    Network starved = two_by_two();
    starved.rate_min_mbps = 500.0;
    TiltProblem r(starved, Variant::prop_fair, {{8.0, 8.0}});
    const auto bad = feasibility_check(r, TiltVector{8.0, 8.0});
    CHECK(bad.rate_violations == 2);
    CHECK(bad.worst_rate_shortfall > 0.0);
}

TEST_CASE("proportional-fair problem needs a positive minimum rate")
{
    Network net = two_by_two();
    net.rate_min_mbps = 0.0;
    CHECK_THROWS_AS(TiltProblem(net, Variant::prop_fair, {{8.0, 8.0}}), ConfigError);
}

TEST_CASE("optimiser does not depend on the bandwidth")
{
    Network base = build_hex_scenario(pair_scenario_spec(), 1);
    base.rate_max_mbps = 1e6;
    base.rate_min_mbps = 1e-6;
    Network scaled = base;
    scaled.bandwidth_mhz *= 3.0;

    RunOptions opt;
    opt.iterations = 2000;
    for (Variant v : {Variant::high_sinr, Variant::prop_fair}) {
        const TiltVector t0(2, 8.0);
        const auto u0 = Multipliers::zeros(base.num_users(), 2).flatten();
        TiltProblem a(base, v, {t0});
        TiltProblem b(scaled, v, {t0});
        const auto ta = run(a, t0, u0, opt).records.back().x;
        const auto tb = run(b, t0, u0, opt).records.back().x;
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(ta[i] == doctest::Approx(tb[i]).epsilon(1e-9));
    }
}

TEST_CASE("utility derivative is positive and nonincreasing")
{
    for (auto kind : {UtilitySpec::Kind::linear, UtilitySpec::Kind::log}) {
        UtilitySpec u{kind};
        double prev = u.derivative(1e-3);
        for (double r = 1e-3; r < 100.0; r *= 1.3) {
            CHECK(u.derivative(r) > 0.0);
            CHECK(u.derivative(r) <= prev);
            prev = u.derivative(r);
            const double h = 1e-6 * r;
            CHECK((u.value(r + h) - u.value(r - h)) / (2 * h) == doctest::Approx(u.derivative(r)).epsilon(1e-6));
        }
    }
}

TEST_CASE("multipliers flatten and unflatten")
{
    const Multipliers m{{1, 2, 3}, {4, 5}, {6, 7}};
    const auto flat = m.flatten();
    CHECK(flat == std::vector<double>{1, 2, 3, 4, 5, 6, 7});
    const auto back = Multipliers::unflatten(flat, 3, 2);
    CHECK(back.rate == m.rate);
    CHECK(back.lower == m.lower);
    CHECK(back.upper == m.upper);
    CHECK_THROWS_AS(Multipliers::unflatten(flat, 2, 2), std::invalid_argument);
}
