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


#ifndef TILTOPT_MMSE_HPP
#define TILTOPT_MMSE_HPP

#include "tiltopt/radio.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tiltopt {

using Complex = std::complex<double>;
using ComplexPair = Eigen::Vector2cd;

/// One fading realisation of a 1x2 link, y = k x + v + n with E|x|^2 = P. k is the serving
/// channel gain (received power over P), v the strongest interferer's received amplitude and N0
/// the remaining interferers plus thermal noise, treated as spatially white.
struct ChannelSample {
    ComplexPair k = ComplexPair::Zero();
    ComplexPair v = ComplexPair::Zero();
    double n0 = 0.0;       // mW per antenna
    double power = 0.0;    // P, mW
    std::size_t serving = 0;
    std::size_t dominant = 0;  // strongest interferer; equals serving when there is none
};

/// Frozen shadowing for one drop: the network's own field if it has one, otherwise a fresh
/// N(0, sigma^2) draw per (sector, user) link.
Network with_drop_shadowing(const Network& net, double sigma_db, std::uint64_t seed);

/// Builds a sample from given fading vectors. Shadowing is already inside the link powers.
ChannelSample make_sample(const LinkTable& links, std::size_t u, std::span<const double> tilts, std::size_t subcarrier,
                          const ComplexPair& q_serving, const ComplexPair& q_dominant);

/// i.i.d. CN(0,1) fading per antenna. Each (user, sector) link has its own stream derived from
/// the seed, so two tilt configurations see the same fading on the same link.
std::vector<ChannelSample> sample_channel(const LinkTable& links, std::size_t u, std::span<const double> tilts,
                                          std::uint64_t seed, std::size_t n_samples, std::size_t subcarrier = 0);

/// Unit-variance circular Gaussian pairs for one link.
std::vector<ComplexPair> fading_stream(std::uint64_t seed, std::size_t u, std::size_t c, std::size_t n);

/// Row vector k^H (k k^H + (Phi + N0 I)/P)^-1, returned as its two entries.
ComplexPair mmse_weights(const ChannelSample& s);

/// P |w1 k1 + w2 k2|^2 / (w Phi w^H + N0 |w|^2).
double post_sinr(const ChannelSample& s, const ComplexPair& w);

/// Antenna 1 alone: P |k1|^2 / (|v1|^2 + N0).
double single_antenna_sinr(const ChannelSample& s, int antenna = 0);

/// Strongest interferer over total interference, shadowing included. Throws if u has no interferer.
double epsilon_ratio(const LinkTable& links, std::size_t u, std::span<const double> tilts);

struct SimoOptions {
    std::size_t samples = 300;
    std::uint64_t seed = 1;
    double shadow_sigma_db = 6.0;  // only used when the network has no shadowing of its own
};

struct UserSimoResult {
    int user = 0;
    double epsilon = 0.0;      // at the fixed tilts
    double siso_fixed = 0.0;   // Mbps
    double siso_opt = 0.0;
    double simo_fixed = 0.0;
    double simo_opt = 0.0;
};

struct EpsilonBinGain {
    std::string label;
    double lo = 0.0;           // exclusive, except the first bin
    double hi = 0.0;           // inclusive
    std::size_t users = 0;
    double siso_gain_pct = 0.0;  // change in mean throughput from fixed to optimised tilts
    double simo_gain_pct = 0.0;
};

struct SimoReport {
    std::vector<UserSimoResult> users;
    std::vector<EpsilonBinGain> bins;  // [0,.5], (.5,.8], (.8,1], then all users
    double siso_sumlog_gain_pct = 0.0;
    double simo_sumlog_gain_pct = 0.0;
    std::vector<std::string> warnings;
};

/// Mean post-processing SINR over fading samples, turned into a rate per sub-carrier, for both
/// tilt configurations and both receivers. Interferers go through the linearised pattern about
/// the fixed tilts.
SimoReport evaluate_simo_throughput(const Network& net, std::span<const double> tilts_fixed,
                                    std::span<const double> tilts_opt, const SimoOptions& options = {});

/// Quantiles 0, 0.01, ..., 1 of each throughput column.
void write_throughput_cdf_csv(std::ostream& os, const SimoReport& report);

/// Gains keyed by epsilon bin label.
std::string gains_json(const SimoReport& report);

} // namespace tiltopt

#endif
