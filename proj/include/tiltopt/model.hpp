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

#ifndef TILTOPT_MODEL_HPP
#define TILTOPT_MODEL_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiltopt {

/// Raised for invalid scenario specifications or files. Carries every problem found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Raised when a base station and a user coincide (zero distance).
class GeometryError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Position {
    double x_km = 0.0;
    double y_km = 0.0;
};

/// One sector antenna. Every sector is a separate element of the base-station set.
struct Sector {
    int id = 0;
    int site = 0;
    Position position;
    double azimuth_deg = 0.0;   // counter-clockwise from the +x axis
    double tilt_min_deg = 5.0;
    double tilt_max_deg = 20.0;
    double power_mw = 0.0;      // per sub-carrier
    double max_gain = 1.0;      // linear
    double beamwidth_deg = 10.0; // vertical half-power beamwidth
};

struct User {
    int id = 0;
    Position position;
    Position reported;             // what localisation reports; equals position unless noise was injected
    std::vector<double> noise_mw;  // one entry per sub-carrier
};

/// Parabolic horizontal pattern with a floor. It does not depend on tilt, so it only scales
/// received powers by a constant per link.
struct HorizontalPattern {
    bool enabled = false;
    double beamwidth_deg = 70.0;
    double floor_db = 25.0;

    /// Linear attenuation for a bearing offset from boresight (degrees, any range).
    double attenuation(double offset_deg) const;
};

struct Network {
    std::vector<Sector> sectors;
    std::vector<User> users;
    std::vector<int> serving;   // user index -> sector index, -1 if unassigned

    double height_m = 25.0;     // network-wide height difference between antennas and users
    double rho0 = 0.0316;
    double beta = 3.76;
    double bandwidth_mhz = 10.0;
    int subcarriers = 1;
    double kappa = 1.0;
    double rate_min_mbps = 0.064;
    double rate_max_mbps = 10.0;
    HorizontalPattern horizontal;
    std::vector<double> shadow_db;  // sectors x users row-major; empty means no shadowing

    std::size_t num_sectors() const { return sectors.size(); }
    std::size_t num_users() const { return users.size(); }
    double shadow(std::size_t sector, std::size_t user) const
    {
        return shadow_db.empty() ? 0.0 : shadow_db[sector * users.size() + user];
    }
};

/// Every violated invariant, human readable. Empty when the network is valid.
std::vector<std::string> invariant_violations(const Network& net);

/// Throws ConfigError listing every violated invariant.
void validate(const Network& net);

double distance(const Sector& b, const User& u, bool use_reported = false);

/// Elevation from the sector down to the user, atan(h/d), in degrees.
double pointing_angle(const Sector& b, const User& u, const Network& net, bool use_reported = false);

/// Bearing from the sector to the user relative to its boresight, wrapped to (-180, 180].
double bearing_offset(const Sector& b, const User& u);

enum class AssociationPolicy { explicit_map, strongest_power };

/// Strongest-power needs one tilt per sector; ties go to the lowest sector index.
std::vector<int> associate_users(const Network& net, AssociationPolicy policy,
                                 std::span<const double> tilts = {});

// ---------------------------------------------------------------------------
// Scenario construction

/// Radio and optimisation constants at the configuration boundary (dB units allowed here).
struct RadioConstants {
    double max_gain_dbi = 15.0;
    double height_m = 25.0;
    double beamwidth_deg = 10.0;
    double power_dbm = 46.0;
    double beta = 3.76;
    double rho0 = 0.0316;
    double bandwidth_mhz = 10.0;
    int subcarriers = 1;
    double noise_dbm = -94.97;
    double tilt_min_deg = 5.0;
    double tilt_max_deg = 20.0;
    double rate_min_kbps = 64.0;
    double rate_max_mbps = 10.0;
    double kappa = 1.0;
};

struct UserGroup {
    enum class Kind { cluster, points, uniform };
    Kind kind = Kind::cluster;
    int count = 0;

    // cluster: centre given relative to a site, users uniform in a disc
    int site = 0;
    double bearing_deg = 0.0;
    double distance_m = 0.0;
    double radius_m = 0.0;

    // points: absolute positions
    std::vector<Position> points;

    // uniform: disc around the centroid of all sites
    double region_radius_m = 0.0;
    double min_distance_m = 10.0;

    // explicit association for the whole group; -1 defers to strongest power
    int serving_sector = -1;
};

struct ScenarioSpec {
    RadioConstants radio;
    int sites = 3;
    double isd_m = 500.0;
    int sectors_per_site = 3;
    int horizontal_pattern = -1;  // -1 auto (on for 3 sectors), 0 off, 1 on
    double horizontal_beamwidth_deg = 70.0;
    double horizontal_floor_db = 25.0;
    double shadow_sigma_db = 0.0;
    double association_tilt_deg = 8.0;
    std::vector<UserGroup> groups;
};

/// Site centres on a hexagonal lattice: site 0 at the origin, then ring 1 counter-clockwise
/// from the +x axis, then ring 2.
std::vector<Position> hex_site_positions(int sites, double isd_m);

/// Deterministic for a given (spec, seed).
Network build_hex_scenario(const ScenarioSpec& spec, std::uint64_t seed);

/// Three sites, three sectors each, the default radio constants, two 16-user clusters and
/// two users near the midpoint between sites 0 and 1.
ScenarioSpec cluster_scenario_spec();

/// Two single-sector sites and four users; small enough for exhaustive search.
ScenarioSpec pair_scenario_spec();

/// Larger urban layout: seven sites, 800 m spacing, NLOS path loss and 6 dB shadowing.
ScenarioSpec urban_scenario_spec(int users = 630);

} // namespace tiltopt

#endif
