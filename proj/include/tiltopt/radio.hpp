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

#ifndef TILTOPT_RADIO_HPP
#define TILTOPT_RADIO_HPP

#include "tiltopt/model.hpp"

#include <span>
#include <vector>

namespace tiltopt {

/// Tilt per sector in degrees, indexed by sector index. Bounds are not enforced here.
using TiltVector = std::vector<double>;

/// Tilt about which each interferer's gain exponent is linearised. One entry per sector,
/// fixed for the duration of a run.
struct LinearizationPoint {
    std::vector<double> tilt_deg;
};

// Antenna pattern. All angles in degrees.

/// 10^(-1.2 ((pointing - tilt)/beamwidth)^2)
double vertical_attenuation(double tilt, double pointing, double beamwidth);

/// Natural log of vertical_attenuation.
double vertical_gain_exponent(double tilt, double pointing, double beamwidth);

/// d/d(tilt) of vertical_gain_exponent: (2.4 ln10 / beamwidth^2)(pointing - tilt).
double vertical_gain_slope(double tilt, double pointing, double beamwidth);

/// Tangent line of vertical_gain_exponent at lin_point, evaluated at tilt.
double linearized_gain_exponent(double tilt, double pointing, double lin_point, double beamwidth);

/// Slope of the tangent line; independent of tilt.
double linearized_gain_slope(double pointing, double lin_point, double beamwidth);

/// rho0 * d^-beta. Throws GeometryError for d <= 0.
double path_loss(double d_km, double rho0, double beta);

/// Tilt-independent constants for every (sector, user) link.
///
/// Holds a reference to the network, which must outlive the table.
class LinkTable {
public:
    LinkTable(const Network& net, LinearizationPoint lin);

    const Network& network() const { return *net_; }
    const LinearizationPoint& linearization() const { return lin_; }

    /// G0 * horizontal * shadow * path loss * P, i.e. received power with a 0 dB vertical pattern.
    double base_power(std::size_t c, std::size_t u) const { return base_[idx(c, u)]; }
    double pointing(std::size_t c, std::size_t u) const { return pointing_[idx(c, u)]; }
    double reported_pointing(std::size_t c, std::size_t u) const { return reported_[idx(c, u)]; }
    double lin_point(std::size_t c) const { return lin_.tilt_deg[c]; }

    /// H_u(theta_c) with the exact vertical pattern.
    double received_power_exact(std::size_t c, std::size_t u, double tilt) const;

    /// H-hat_u(theta_c) with the linearised gain exponent.
    double received_power_linearized(std::size_t c, std::size_t u, double tilt) const;

private:
    std::size_t idx(std::size_t c, std::size_t u) const { return c * users_ + u; }

    const Network* net_;
    LinearizationPoint lin_;
    std::size_t users_;
    std::vector<double> base_;
    std::vector<double> pointing_;
    std::vector<double> reported_;
};

/// What user u sees at a tilt configuration: serving power from the exact pattern,
/// interferers through the linearised pattern.
struct UserMeasurement {
    std::size_t user = 0;
    std::size_t serving = 0;
    double serving_power = 0.0;
    std::vector<double> interferer_power;  // per sector; 0 at the serving sector
    std::vector<double> interference;      // per sub-carrier: sum of interferers + noise
    std::vector<double> sinr;              // per sub-carrier
};

UserMeasurement measure_user(const LinkTable& links, std::size_t u, std::span<const double> tilts);

/// SINR of user u on sub-carrier n.
double sinr(const LinkTable& links, std::size_t u, std::size_t n, std::span<const double> tilts);

struct UserRate {
    double raw = 0.0;        // before the cap
    double truncated = 0.0;  // min(rate_max, raw)
};

/// (w/N) sum ln(1 + kappa gamma_n).
UserRate shannon_rate(const Network& net, std::span<const double> sinr);

/// (w/N) sum ln(kappa gamma_n). Never above shannon_rate.
UserRate high_sinr_rate(const Network& net, std::span<const double> sinr);

UserRate rate(const LinkTable& links, std::size_t u, std::span<const double> tilts);
UserRate rate_high_sinr(const LinkTable& links, std::size_t u, std::span<const double> tilts);

/// Exact truncated rates for every user.
std::vector<double> user_rates(const LinkTable& links, std::span<const double> tilts);

/// Interferer links whose (pointing - tilt) sign differs from (pointing - lin_point), i.e. the
/// linearisation is on the wrong side of the main lobe.
std::size_t count_linearization_sign_flips(const LinkTable& links, std::span<const double> tilts);

} // namespace tiltopt

#endif
