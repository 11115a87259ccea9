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

#include "tiltopt/radio.hpp"

#include "tiltopt/units.hpp"

#include <cmath>
#include <numbers>

namespace tiltopt {

namespace {

// 1.2 ln 10: the -12 dB at one beamwidth off boresight, in nats.
constexpr double kPatternCoef = 1.2 * std::numbers::ln10;

} // namespace

double vertical_attenuation(double tilt, double pointing, double beamwidth)
{
    const double x = (pointing - tilt) / beamwidth;
    return std::pow(10.0, -1.2 * x * x);
}

double vertical_gain_exponent(double tilt, double pointing, double beamwidth)
{
    const double x = (pointing - tilt) / beamwidth;
    return -kPatternCoef * x * x;
}

double vertical_gain_slope(double tilt, double pointing, double beamwidth)
{
    return 2.0 * kPatternCoef / (beamwidth * beamwidth) * (pointing - tilt);
}

double linearized_gain_exponent(double tilt, double pointing, double lin_point, double beamwidth)
{
    const double off = pointing - lin_point;
    return -kPatternCoef / (beamwidth * beamwidth) * (off * off - 2.0 * off * (tilt - lin_point));
}

double linearized_gain_slope(double pointing, double lin_point, double beamwidth)
{
    return 2.0 * kPatternCoef / (beamwidth * beamwidth) * (pointing - lin_point);
}

double path_loss(double d_km, double rho0, double beta)
{
    if (!(d_km > 0.0))
        throw GeometryError("degenerate geometry: path loss needs a positive distance");
    return rho0 * std::pow(d_km, -beta);
}

// ---------------------------------------------------------------------------

LinkTable::LinkTable(const Network& net, LinearizationPoint lin)
    : net_(&net), lin_(std::move(lin)), users_(net.num_users())
{
    if (lin_.tilt_deg.size() != net.num_sectors())
        throw ConfigError({"linearisation point needs one tilt per sector"});

    const std::size_t n = net.num_sectors() * users_;
    base_.resize(n);
    pointing_.resize(n);
    reported_.resize(n);
    for (std::size_t c = 0; c < net.num_sectors(); ++c) {
        const Sector& s = net.sectors[c];
        for (std::size_t u = 0; u < users_; ++u) {
            const User& usr = net.users[u];
            const double d = distance(s, usr);
            const double horizontal = net.horizontal.attenuation(bearing_offset(s, usr));
            base_[idx(c, u)] = s.max_gain * horizontal * db_to_linear(net.shadow(c, u)) *
                               path_loss(d, net.rho0, net.beta) * s.power_mw;
            pointing_[idx(c, u)] = pointing_angle(s, usr, net);
            reported_[idx(c, u)] = pointing_angle(s, usr, net, true);
        }
    }
}

double LinkTable::received_power_exact(std::size_t c, std::size_t u, double tilt) const
{
    const double bw = net_->sectors[c].beamwidth_deg;
    return base_power(c, u) * std::exp(vertical_gain_exponent(tilt, pointing(c, u), bw));
}

double LinkTable::received_power_linearized(std::size_t c, std::size_t u, double tilt) const
{
    const double bw = net_->sectors[c].beamwidth_deg;
    return base_power(c, u) * std::exp(linearized_gain_exponent(tilt, pointing(c, u), lin_point(c), bw));
}

UserMeasurement measure_user(const LinkTable& links, std::size_t u, std::span<const double> tilts)
{
    const Network& net = links.network();
    UserMeasurement m;
    m.user = u;
    m.serving = static_cast<std::size_t>(net.serving[u]);
    m.serving_power = links.received_power_exact(m.serving, u, tilts[m.serving]);
    m.interferer_power.assign(net.num_sectors(), 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < net.num_sectors(); ++c) {
        if (c == m.serving)
            continue;
        m.interferer_power[c] = links.received_power_linearized(c, u, tilts[c]);
        total += m.interferer_power[c];
    }
    const auto& noise = net.users[u].noise_mw;
    m.interference.resize(noise.size());
    m.sinr.resize(noise.size());
    for (std::size_t n = 0; n < noise.size(); ++n) {
        m.interference[n] = total + noise[n];
        m.sinr[n] = m.serving_power / m.interference[n];
    }
    return m;
}

double sinr(const LinkTable& links, std::size_t u, std::size_t n, std::span<const double> tilts)
{
    return measure_user(links, u, tilts).sinr.at(n);
}

UserRate shannon_rate(const Network& net, std::span<const double> sinr)
{
    double sum = 0.0;
    for (double g : sinr)
        sum += std::log1p(net.kappa * g);
    const double r = net.bandwidth_mhz / static_cast<double>(sinr.size()) * sum;
    return {r, std::min(net.rate_max_mbps, r)};
}

UserRate high_sinr_rate(const Network& net, std::span<const double> sinr)
{
    double sum = 0.0;
    for (double g : sinr)
        sum += std::log(net.kappa * g);
    const double r = net.bandwidth_mhz / static_cast<double>(sinr.size()) * sum;
    return {r, std::min(net.rate_max_mbps, r)};
}

UserRate rate(const LinkTable& links, std::size_t u, std::span<const double> tilts)
{
    return shannon_rate(links.network(), measure_user(links, u, tilts).sinr);
}

UserRate rate_high_sinr(const LinkTable& links, std::size_t u, std::span<const double> tilts)
{
    return high_sinr_rate(links.network(), measure_user(links, u, tilts).sinr);
}

std::vector<double> user_rates(const LinkTable& links, std::span<const double> tilts)
{
    std::vector<double> out(links.network().num_users());
    for (std::size_t u = 0; u < out.size(); ++u)
        out[u] = rate(links, u, tilts).truncated;
    return out;
}

std::size_t count_linearization_sign_flips(const LinkTable& links, std::span<const double> tilts)
{
    const Network& net = links.network();
    std::size_t flips = 0;
    for (std::size_t u = 0; u < net.num_users(); ++u)
        for (std::size_t c = 0; c < net.num_sectors(); ++c) {
            if (static_cast<int>(c) == net.serving[u])
                continue;
            const double p = links.pointing(c, u);
            const double now = p - tilts[c];
            const double ref = p - links.lin_point(c);
            if ((now > 0.0 && ref < 0.0) || (now < 0.0 && ref > 0.0))
                ++flips;
        }
    return flips;
}

} // namespace tiltopt
