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


#include "tiltopt/mmse.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

namespace tiltopt {

Network with_drop_shadowing(const Network& net, double sigma_db, std::uint64_t seed)
{
    Network out = net;
    if (!net.shadow_db.empty() || sigma_db <= 0.0)
        return out;
    int sites = 0;
    for (const auto& s : net.sectors)
        sites = std::max(sites, s.site + 1);
    const std::size_t users = net.num_users();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma_db);
    // co-sited sectors share a propagation path
    std::vector<double> per_site(static_cast<std::size_t>(sites) * users);
    for (auto& v : per_site)
        v = gauss(rng);
    out.shadow_db.resize(net.num_sectors() * users);
    for (std::size_t b = 0; b < net.num_sectors(); ++b)
        for (std::size_t u = 0; u < users; ++u)
            out.shadow_db[b * users + u] = per_site[net.sectors[b].site * users + u];
    return out;
}

ChannelSample make_sample(const LinkTable& links, std::size_t u, std::span<const double> tilts, std::size_t subcarrier,
                          const ComplexPair& q_serving, const ComplexPair& q_dominant)
{
    const Network& net = links.network();
    ChannelSample s;
    s.serving = static_cast<std::size_t>(net.serving.at(u));
    s.power = net.sectors[s.serving].power_mw;
    s.dominant = s.serving;

    const double h = links.received_power_exact(s.serving, u, tilts[s.serving]);
    s.k = std::sqrt(h / s.power) * q_serving;

    std::vector<double> p(net.num_sectors(), 0.0);
    for (std::size_t c = 0; c < net.num_sectors(); ++c) {
        if (c == s.serving)
            continue;
        p[c] = links.received_power_linearized(c, u, tilts[c]);
        if (s.dominant == s.serving || p[c] > p[s.dominant])
            s.dominant = c;
    }
    double rest = 0.0;
    for (std::size_t c = 0; c < net.num_sectors(); ++c)
        if (c != s.serving && c != s.dominant)
            rest += p[c];
    const double strongest = s.dominant != s.serving ? p[s.dominant] : 0.0;
    if (s.dominant != s.serving)
        s.v = std::sqrt(strongest) * q_dominant;
    s.n0 = rest + net.users[u].noise_mw.at(subcarrier);
    return s;
}

std::vector<ComplexPair> fading_stream(std::uint64_t seed, std::size_t u, std::size_t c, std::size_t n)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    std::vector<ComplexPair> out(n);
    for (auto& q : out) {
        const double a = gauss(rng), b = gauss(rng), x = gauss(rng), y = gauss(rng);
        q << Complex(a, b), Complex(x, y);
    }
    return out;
}

std::vector<ChannelSample> sample_channel(const LinkTable& links, std::size_t u, std::span<const double> tilts,
                                          std::uint64_t seed, std::size_t n_samples, std::size_t subcarrier)
{
    if (n_samples == 0)
        throw std::invalid_argument("need at least one fading sample");
    const ChannelSample shape = make_sample(links, u, tilts, subcarrier, ComplexPair::Zero(), ComplexPair::Zero());
    const auto qs = fading_stream(seed, u, shape.serving, n_samples);
    const auto qd = fading_stream(seed, u, shape.dominant, n_samples);
    std::vector<ChannelSample> out;
    out.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        out.push_back(make_sample(links, u, tilts, subcarrier, qs[i], qd[i]));
    return out;
}

ComplexPair mmse_weights(const ChannelSample& s)
{
    const Eigen::Matrix2cd phi = s.v * s.v.adjoint();
    const Eigen::Matrix2cd m = s.k * s.k.adjoint() + (phi + s.n0 * Eigen::Matrix2cd::Identity()) / s.power;
    const Eigen::RowVector2cd w = s.k.adjoint() * m.inverse();
    return w.transpose();
}

double post_sinr(const ChannelSample& s, const ComplexPair& w)
{
    const Complex phi11 = s.v(0) * std::conj(s.v(0));
    const Complex phi22 = s.v(1) * std::conj(s.v(1));
    const Complex phi12 = s.v(0) * std::conj(s.v(1));
    const double num = s.power * std::norm(w(0) * s.k(0) + w(1) * s.k(1));
    const double den = std::norm(w(0)) * phi11.real() + std::norm(w(1)) * phi22.real() +
                       2.0 * (w(0) * std::conj(w(1)) * phi12).real() + s.n0 * (std::norm(w(0)) + std::norm(w(1)));
    return num / den;
}

double single_antenna_sinr(const ChannelSample& s, int antenna)
{
    return s.power * std::norm(s.k(antenna)) / (std::norm(s.v(antenna)) + s.n0);
}

double epsilon_ratio(const LinkTable& links, std::size_t u, std::span<const double> tilts)
{
    const Network& net = links.network();
    if (net.num_sectors() < 2)
        throw std::domain_error("epsilon ratio needs at least one interferer");
    const auto b = static_cast<std::size_t>(net.serving.at(u));
    double strongest = 0.0, total = 0.0;
    for (std::size_t c = 0; c < net.num_sectors(); ++c) {
        if (c == b)
            continue;
        const double p = links.received_power_linearized(c, u, tilts[c]);
        strongest = std::max(strongest, p);
        total += p;
    }
    return strongest / total;
}

namespace {

double capped_rate(const Network& net, const std::vector<double>& mean_sinr)
{
    return shannon_rate(net, mean_sinr).truncated;
}

double mean_of(const std::vector<UserSimoResult>& users, double UserSimoResult::*field, double lo, double hi,
               bool first_bin, std::size_t* count)
{
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& r : users) {
        const bool in = first_bin ? (r.epsilon >= lo && r.epsilon <= hi) : (r.epsilon > lo && r.epsilon <= hi);
        if (!in)
            continue;
        s += r.*field;
        ++n;
    }
    if (count)
        *count = n;
    return n ? s / static_cast<double>(n) : 0.0;
}

double gain_pct(double before, double after)
{
    return before > 0.0 ? 100.0 * (after / before - 1.0) : 0.0;
}

double quantile(std::vector<double> v, double q)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const std::size_t j = std::min(i + 1, v.size() - 1);
    return v[i] + (pos - static_cast<double>(i)) * (v[j] - v[i]);
}

} // namespace

SimoReport evaluate_simo_throughput(const Network& net, std::span<const double> tilts_fixed,
                                    std::span<const double> tilts_opt, const SimoOptions& options)
{
    if (options.samples == 0)
        throw std::invalid_argument("need at least one fading sample");
    SimoReport rep;
    for (const auto& s : net.sectors)
        if (s.power_mw != net.sectors.front().power_mw) {
            rep.warnings.push_back("sectors transmit at different powers; the SIMO model assumes one common power");
            break;
        }

    const Network drop = with_drop_shadowing(net, options.shadow_sigma_db, options.seed);
    const LinkTable links(drop, {std::vector<double>(tilts_fixed.begin(), tilts_fixed.end())});
    const std::size_t n_sc = static_cast<std::size_t>(drop.subcarriers);
    const std::size_t samples = options.samples;

    for (std::size_t u = 0; u < drop.num_users(); ++u) {
        UserSimoResult r;
        r.user = drop.users[u].id;
        r.epsilon = drop.num_sectors() > 1 ? epsilon_ratio(links, u, tilts_fixed) : 0.0;

        std::map<std::size_t, std::vector<ComplexPair>> streams;
        auto stream = [&](std::size_t c) -> const std::vector<ComplexPair>& {
            auto it = streams.find(c);
            if (it == streams.end())
                it = streams.emplace(c, fading_stream(options.seed, u, c, samples)).first;
            return it->second;
        };

        for (int config = 0; config < 2; ++config) {
            const std::span<const double> tilts = config == 0 ? tilts_fixed : tilts_opt;
            std::vector<double> siso(n_sc, 0.0), simo(n_sc, 0.0);
            for (std::size_t n = 0; n < n_sc; ++n) {
                const ChannelSample shape =
                    make_sample(links, u, tilts, n, ComplexPair::Zero(), ComplexPair::Zero());
                const auto& qs = stream(shape.serving);
                const auto& qd = stream(shape.dominant);
                double a = 0.0, b = 0.0;
                for (std::size_t i = 0; i < samples; ++i) {
                    const ChannelSample s = make_sample(links, u, tilts, n, qs[i], qd[i]);
                    a += single_antenna_sinr(s);
                    b += post_sinr(s, mmse_weights(s));
                }
                siso[n] = a / static_cast<double>(samples);
                simo[n] = b / static_cast<double>(samples);
            }
            (config == 0 ? r.siso_fixed : r.siso_opt) = capped_rate(drop, siso);
            (config == 0 ? r.simo_fixed : r.simo_opt) = capped_rate(drop, simo);
        }
        rep.users.push_back(r);
    }

    struct Bin {
        const char* label;
        double lo, hi;
        bool first;
    };
    const Bin bins[] = {{"[0,0.5]", 0.0, 0.5, true}, {"(0.5,0.8]", 0.5, 0.8, false}, {"(0.8,1]", 0.8, 1.0, false},
                        {"all", 0.0, 1.0, true}};
    for (const auto& b : bins) {
        EpsilonBinGain g;
        g.label = b.label;
        g.lo = b.lo;
        g.hi = b.hi;
        const double sf = mean_of(rep.users, &UserSimoResult::siso_fixed, b.lo, b.hi, b.first, &g.users);
        const double so = mean_of(rep.users, &UserSimoResult::siso_opt, b.lo, b.hi, b.first, nullptr);
        const double mf = mean_of(rep.users, &UserSimoResult::simo_fixed, b.lo, b.hi, b.first, nullptr);
        const double mo = mean_of(rep.users, &UserSimoResult::simo_opt, b.lo, b.hi, b.first, nullptr);
        g.siso_gain_pct = gain_pct(sf, so);
        g.simo_gain_pct = gain_pct(mf, mo);
        rep.bins.push_back(g);
    }

    double lf = 0.0, lo = 0.0, mf = 0.0, mo = 0.0;
    for (const auto& r : rep.users) {
        lf += std::log(r.siso_fixed);
        lo += std::log(r.siso_opt);
        mf += std::log(r.simo_fixed);
        mo += std::log(r.simo_opt);
    }
    rep.siso_sumlog_gain_pct = lf != 0.0 ? 100.0 * (lo - lf) / std::abs(lf) : 0.0;
    rep.simo_sumlog_gain_pct = mf != 0.0 ? 100.0 * (mo - mf) / std::abs(mf) : 0.0;
    return rep;
}

void write_throughput_cdf_csv(std::ostream& os, const SimoReport& report)
{
    std::vector<double> cols[4];
    for (const auto& r : report.users) {
        cols[0].push_back(r.siso_fixed);
        cols[1].push_back(r.siso_opt);
        cols[2].push_back(r.simo_fixed);
        cols[3].push_back(r.simo_opt);
    }
    os << "quantile,siso_fixed_mbps,siso_opt_mbps,simo_fixed_mbps,simo_opt_mbps\n";
    os.precision(10);
    for (int i = 0; i <= 100; ++i) {
        const double q = i / 100.0;
        os << q;
        for (const auto& c : cols)
            os << ',' << quantile(c, q);
        os << '\n';
    }
}

std::string gains_json(const SimoReport& report)
{
    nlohmann::json j;
    for (const auto& b : report.bins)
        j["bins"][b.label] = {{"users", b.users}, {"siso_gain_pct", b.siso_gain_pct}, {"simo_gain_pct", b.simo_gain_pct}};
    j["sumlog"] = {{"siso_gain_pct", report.siso_sumlog_gain_pct}, {"simo_gain_pct", report.simo_sumlog_gain_pct}};
    j["warnings"] = report.warnings;
    return j.dump(2);
}

} // namespace tiltopt
