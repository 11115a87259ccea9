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

#include "tiltopt/problems.hpp"

#include <cmath>
#include <sstream>

namespace tiltopt {

double UtilitySpec::value(double r) const
{
    return kind == Kind::linear ? r : std::log(r);
}

double UtilitySpec::derivative(double r) const
{
    return kind == Kind::linear ? 1.0 : 1.0 / r;
}

Multipliers Multipliers::zeros(std::size_t users, std::size_t sectors)
{
    return {std::vector<double>(users, 0.0), std::vector<double>(sectors, 0.0), std::vector<double>(sectors, 0.0)};
}

Multipliers Multipliers::unflatten(std::span<const double> u, std::size_t users, std::size_t sectors)
{
    if (u.size() != users + 2 * sectors)
        throw std::invalid_argument("multiplier vector has the wrong length");
    Multipliers m;
    m.rate.assign(u.begin(), u.begin() + users);
    m.lower.assign(u.begin() + users, u.begin() + users + sectors);
    m.upper.assign(u.begin() + users + sectors, u.end());
    return m;
}

std::vector<double> Multipliers::flatten() const
{
    std::vector<double> out;
    out.reserve(rate.size() + lower.size() + upper.size());
    out.insert(out.end(), rate.begin(), rate.end());
    out.insert(out.end(), lower.begin(), lower.end());
    out.insert(out.end(), upper.begin(), upper.end());
    return out;
}

// ---------------------------------------------------------------------------

double serving_log_sinr_slope(double tilt, double reported_pointing, double beamwidth)
{
    return vertical_gain_slope(tilt, reported_pointing, beamwidth);
}

double interferer_log_sinr_slope(double interferer_power, double reported_pointing, double lin_point,
                                 double beamwidth, double interference)
{
    return -interferer_power * linearized_gain_slope(reported_pointing, lin_point, beamwidth) / interference;
}

UserRateTerm user_rate_term(const Network& net, Variant variant, std::span<const double> sinr)
{
    const UserRate r = variant == Variant::high_sinr ? high_sinr_rate(net, sinr) : shannon_rate(net, sinr);
    return {r.raw, r.truncated, r.raw >= net.rate_max_mbps};
}

std::vector<double> rate_sensitivity_weights(const Network& net, Variant variant, std::span<const double> sinr)
{
    std::vector<double> w(sinr.size(), 0.0);
    const UserRateTerm term = user_rate_term(net, variant, sinr);
    if (term.capped)
        return w;
    const double per_carrier = 1.0 / static_cast<double>(sinr.size());
    for (std::size_t n = 0; n < sinr.size(); ++n) {
        if (variant == Variant::high_sinr) {
            w[n] = per_carrier;
        } else {
            const double kg = net.kappa * sinr[n];
            w[n] = net.bandwidth_mhz * per_carrier * kg / (1.0 + kg) / term.raw;
        }
    }
    return w;
}

double spectral_efficiency(const Network& net, Variant variant, const UserRateTerm& term)
{
    return variant == Variant::high_sinr ? term.truncated / net.bandwidth_mhz : term.truncated;
}

double rate_constraint_value(const Network& net, Variant variant, const UserRateTerm& term)
{
    if (variant == Variant::high_sinr)
        return (net.rate_min_mbps - term.truncated) / net.bandwidth_mhz;
    return std::log(net.rate_min_mbps) - std::log(term.truncated);
}

double user_gradient_coefficient(Variant variant, const UtilitySpec& utility, double rate_term, double lambda_rate)
{
    if (variant == Variant::high_sinr)
        return -(utility.derivative(rate_term) + lambda_rate);
    return -(1.0 + lambda_rate);
}

double user_tilt_term(double coefficient, std::span<const double> weights, std::span<const double> dlog_sinr)
{
    double s = 0.0;
    for (std::size_t n = 0; n < weights.size(); ++n)
        s += weights[n] * dlog_sinr[n];
    return coefficient * s;
}

// ---------------------------------------------------------------------------

TiltProblem::TiltProblem(const Network& net, Variant variant, LinearizationPoint lin, UtilitySpec utility)
    : links_(net, std::move(lin)), variant_(variant), utility_(utility)
{
    if (variant_ == Variant::prop_fair && !(net.rate_min_mbps > 0.0))
        throw ConfigError({"proportional-fair problem needs a minimum rate > 0 (its constraint is ln r_min)"});
}

std::vector<UserRateTerm> TiltProblem::rate_terms(std::span<const double> tilts) const
{
    const Network& net = network();
    std::vector<UserRateTerm> out(net.num_users());
    for (std::size_t u = 0; u < out.size(); ++u)
        out[u] = user_rate_term(net, variant_, measure_user(links_, u, tilts).sinr);
    return out;
}

double TiltProblem::objective(std::span<const double> tilts) const
{
    const double w = network().bandwidth_mhz;
    double f = 0.0;
    for (const auto& t : rate_terms(tilts))
        f -= variant_ == Variant::high_sinr ? utility_.value(t.truncated / w) : std::log(t.truncated);
    return f;
}

void TiltProblem::constraints(std::span<const double> tilts, std::span<double> g) const
{
    const Network& net = network();
    const std::size_t users = net.num_users();
    const std::size_t sectors = net.num_sectors();
    const auto terms = rate_terms(tilts);
    for (std::size_t u = 0; u < users; ++u)
        g[u] = rate_constraint_value(net, variant_, terms[u]);
    for (std::size_t b = 0; b < sectors; ++b) {
        g[users + b] = net.sectors[b].tilt_min_deg - tilts[b];
        g[users + sectors + b] = tilts[b] - net.sectors[b].tilt_max_deg;
    }
}

void TiltProblem::lagrangian_gradient(std::span<const double> tilts, std::span<const double> u,
                                      std::span<double> grad) const
{
    const Network& net = network();
    const std::size_t users = net.num_users();
    const std::size_t sectors = net.num_sectors();
    for (std::size_t c = 0; c < sectors; ++c)
        grad[c] = 0.0;

    std::vector<double> dlog(net.subcarriers);
    for (std::size_t k = 0; k < users; ++k) {
        const UserMeasurement m = measure_user(links_, k, tilts);
        const UserRateTerm term = user_rate_term(net, variant_, m.sinr);
        if (term.capped)
            continue;
        const auto weights = rate_sensitivity_weights(net, variant_, m.sinr);
        const double coef = user_gradient_coefficient(variant_, utility_, spectral_efficiency(net, variant_, term), u[k]);
        for (std::size_t c = 0; c < sectors; ++c) {
            const double bw = net.sectors[c].beamwidth_deg;
            if (c == m.serving) {
                const double s = serving_log_sinr_slope(tilts[c], links_.reported_pointing(c, k), bw);
                std::fill(dlog.begin(), dlog.end(), s);
            } else {
                for (std::size_t n = 0; n < dlog.size(); ++n)
                    dlog[n] = interferer_log_sinr_slope(m.interferer_power[c], links_.reported_pointing(c, k),
                                                        links_.lin_point(c), bw, m.interference[n]);
            }
            grad[c] += user_tilt_term(coef, weights, dlog);
        }
    }
    for (std::size_t c = 0; c < sectors; ++c)
        grad[c] = grad[c] - u[users + c] + u[users + sectors + c];
}

Subgradients full_subgradients(const TiltProblem& problem, std::span<const double> tilts, const Multipliers& m)
{
    const Network& net = problem.network();
    const auto flat = m.flatten();
    Subgradients out;
    out.tilt.resize(net.num_sectors());
    problem.lagrangian_gradient(tilts, flat, out.tilt);
    std::vector<double> g(problem.dual_dim());
    problem.constraints(tilts, g);
    out.dual = Multipliers::unflatten(g, net.num_users(), net.num_sectors());
    return out;
}

FeasibilityReport feasibility_check(const TiltProblem& problem, std::span<const double> tilts,
                                    double bound_tolerance, double rate_tolerance)
{
    const Network& net = problem.network();
    FeasibilityReport rep;
    for (std::size_t b = 0; b < net.num_sectors(); ++b) {
        const auto& s = net.sectors[b];
        if (tilts[b] < s.tilt_min_deg - bound_tolerance || tilts[b] > s.tilt_max_deg + bound_tolerance) {
            std::ostringstream os;
            os << "sector " << s.id << ": tilt " << tilts[b] << " deg outside [" << s.tilt_min_deg << ", "
               << s.tilt_max_deg << "]";
            rep.violations.push_back(os.str());
            ++rep.bound_violations;
        }
    }
    const auto terms = problem.rate_terms(tilts);
    for (std::size_t u = 0; u < terms.size(); ++u) {
        const double shortfall = net.rate_min_mbps - terms[u].truncated;
        if (shortfall > rate_tolerance * std::max(net.rate_min_mbps, 1e-9)) {
            std::ostringstream os;
            os << "user " << net.users[u].id << ": rate " << terms[u].truncated << " Mbps below minimum "
               << net.rate_min_mbps;
            rep.violations.push_back(os.str());
            ++rep.rate_violations;
            rep.worst_rate_shortfall = std::max(rep.worst_rate_shortfall, shortfall);
        }
    }
    return rep;
}

bool suspect_infeasible(const TiltProblem& problem, const IterationTrace& trace, double rate_tolerance)
{
    if (trace.records.size() < 8)
        return false;
    const std::size_t users = problem.network().num_users();
    auto rate_multiplier_total = [&](const IterationRecord& r) {
        double s = 0.0;
        for (std::size_t k = 0; k < users; ++k)
            s += r.u[k];
        return s;
    };
    const auto& last = trace.back();
    const auto& quarter = trace.records[trace.records.size() * 3 / 4];
    const auto rep = feasibility_check(problem, last.x, 1e9, rate_tolerance);
    return rep.rate_violations > 0 && rate_multiplier_total(last) > rate_multiplier_total(quarter);
}

} // namespace tiltopt
