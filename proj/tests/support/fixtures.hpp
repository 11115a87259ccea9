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

// Shared by the unit and acceptance binaries: scenario classes, random points, and the
// finite-difference and midpoint oracles. Nothing here calls the analytic gradient code.

#ifndef TILTOPT_TEST_FIXTURES_HPP
#define TILTOPT_TEST_FIXTURES_HPP

#include "tiltopt/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace tiltopt::testing {

/// Hand-built network: unit-gain sectors at the given sites (azimuth 0, no horizontal pattern),
/// users served explicitly. Powers and gains default to 1 so received power is easy to recompute.
inline Network toy_network(const std::vector<Position>& sites, const std::vector<Position>& users,
                           const std::vector<int>& serving, double rho0 = 1.0, double beta = 3.0)
{
    Network net;
    net.rho0 = rho0;
    net.beta = beta;
    for (std::size_t b = 0; b < sites.size(); ++b) {
        Sector s;
        s.id = static_cast<int>(b);
        s.site = static_cast<int>(b);
        s.position = sites[b];
        s.power_mw = 1.0;
        s.max_gain = 1.0;
        net.sectors.push_back(s);
    }
    for (std::size_t u = 0; u < users.size(); ++u) {
        User x;
        x.id = static_cast<int>(u);
        x.position = users[u];
        x.reported = users[u];
        x.noise_mw = {1e-3};
        net.users.push_back(x);
    }
    net.serving = serving;
    return net;
}

struct ScenarioClass {
    std::string name;
    Network net;
};

/// The three geometries every suite runs over: two single-sector sites, the clustered
/// three-site layout, and a reduced urban layout with shadowing.
inline std::vector<ScenarioClass> scenario_classes(int urban_users = 300)
{
    return {{"pair", build_hex_scenario(pair_scenario_spec(), 1)},
            {"cluster", build_hex_scenario(cluster_scenario_spec(), 1)},
            {"urban", build_hex_scenario(urban_scenario_spec(urban_users), 1)}};
}

inline TiltVector random_tilts(std::mt19937_64& rng, std::size_t sectors, double lo = 3.0, double hi = 22.0)
{
    std::uniform_real_distribution<double> d(lo, hi);
    TiltVector t(sectors);
    for (auto& x : t)
        x = d(rng);
    return t;
}

inline std::vector<double> random_multipliers(std::mt19937_64& rng, std::size_t users, std::size_t sectors)
{
    std::uniform_real_distribution<double> rate(0.0, 2.0), bound(0.0, 1.0);
    std::vector<double> u;
    for (std::size_t k = 0; k < users; ++k)
        u.push_back(rate(rng));
    for (std::size_t k = 0; k < 2 * sectors; ++k)
        u.push_back(bound(rng));
    return u;
}

struct FdComparison {
    bool evaluated = false;      // false when a rate-cap kink lies inside the stencil
    double worst_relative = 0.0;
};

/// Central differences of the problem's Lagrangian, component by component. A component is
/// compared relative to max(|analytic|, |fd|, 1e-4 * max(1, ||fd||_inf)), which keeps
/// round-off in the differenced values from dominating tiny components. Components whose
/// stencil changes any user's cap state are skipped; the point is skipped if all are.
inline FdComparison compare_with_finite_differences(const TiltProblem& problem, const TiltVector& tilts,
                                                    const std::vector<double>& u, double h = 1e-4)
{
    const std::size_t n = tilts.size();
    std::vector<double> analytic(n);
    problem.lagrangian_gradient(tilts, u, analytic);

    auto caps = [&](const TiltVector& t) {
        std::vector<bool> c;
        for (const auto& term : problem.rate_terms(t))
            c.push_back(term.capped);
        return c;
    };
    const auto caps0 = caps(tilts);

    std::vector<double> fd(n, 0.0);
    std::vector<bool> usable(n, false);
    for (std::size_t c = 0; c < n; ++c) {
        TiltVector plus = tilts, minus = tilts;
        plus[c] += h;
        minus[c] -= h;
        if (caps(plus) != caps0 || caps(minus) != caps0)
            continue;
        usable[c] = true;
        fd[c] = (problem.lagrangian(plus, u) - problem.lagrangian(minus, u)) / (2.0 * h);
    }

    double scale = 1.0;
    for (std::size_t c = 0; c < n; ++c)
        if (usable[c])
            scale = std::max(scale, std::abs(fd[c]));

    FdComparison out;
    for (std::size_t c = 0; c < n; ++c) {
        if (!usable[c])
            continue;
        out.evaluated = true;
        const double denom = std::max({std::abs(analytic[c]), std::abs(fd[c]), 1e-4 * scale});
        out.worst_relative = std::max(out.worst_relative, std::abs(analytic[c] - fd[c]) / denom);
    }
    return out;
}

/// f(mid) - (f(a) + f(b))/2: >= 0 for concave f, <= 0 for convex f.
template <class F>
double midpoint_gap(F&& f, const TiltVector& a, const TiltVector& b)
{
    TiltVector mid(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        mid[i] = 0.5 * (a[i] + b[i]);
    return f(mid) - 0.5 * (f(a) + f(b));
}

/// Slack for midpoint checks, 1e-9 relative to the magnitudes involved.
inline double midpoint_slack(double fa, double fb)
{
    return 1e-9 * std::max({1.0, std::abs(fa), std::abs(fb)});
}

inline double sum_ln_rate_per_user(const std::vector<double>& rates)
{
    double s = 0.0;
    for (double r : rates)
        s += std::log(r);
    return s / static_cast<double>(rates.size());
}

} // namespace tiltopt::testing

#endif
