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


#ifndef TILTOPT_SCENARIO_IO_HPP
#define TILTOPT_SCENARIO_IO_HPP

#include "tiltopt/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace tiltopt {

inline constexpr const char* scenario_schema_id = "tiltopt-scenario/1";

/// Parses a scenario document. Unknown keys, missing keys and bad values are all collected and
/// reported together (with line numbers) in one ConfigError; so are violated network invariants.
///
///   schema: tiltopt-scenario/1
///   radio:        height_m, rho0, beta, bandwidth_mhz, subcarriers, kappa, horizontal_pattern
///   sites:        list of {site, x_km, y_km, sectors: [{id, azimuth_deg, power_mw|power_dbm,
///                 max_gain|max_gain_dbi, beamwidth_deg, tilt_min_deg, tilt_max_deg}]}
///   users:        {association: explicit|strongest_power, association_tilt_deg,
///                  list: [{id, x_km, y_km, [reported_x_km, reported_y_km],
///                          noise_mw|noise_dbm, [serving_sector]}],
///                  [shadowing_db: one row of per-user values per sector]}
///   optimisation: rate_min_mbps|rate_min_kbps, rate_max_mbps
Network parse_scenario(const std::string& text, const std::string& source = "<string>");

Network load_scenario(const std::filesystem::path& path);

/// Linear units, 17 significant digits: loading the output gives back an identical network.
void save_scenario(const Network& net, std::ostream& os);
void save_scenario(const Network& net, const std::filesystem::path& path);

} // namespace tiltopt

#endif
