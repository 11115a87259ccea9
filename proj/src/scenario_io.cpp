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


#include "tiltopt/scenario_io.hpp"

#include "tiltopt/units.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace tiltopt {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    std::vector<std::string> problems;

    std::string at(const YAML::Node& n) const
    {
        const auto m = n.Mark();
        if (m.line < 0)
            return source_;
        return source_ + ":" + std::to_string(m.line + 1);
    }

    void fail(const YAML::Node& n, const std::string& msg) { problems.push_back(at(n) + ": " + msg); }

    bool expect_map(const YAML::Node& n, const std::string& ctx)
    {
        if (!n.IsMap()) {
            fail(n, ctx + " must be a mapping");
            return false;
        }
        return true;
    }

    void allow_keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const std::string& ctx)
    {
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
                fail(kv.first, "unknown key '" + key + "' in " + ctx);
        }
    }

    std::optional<double> number(const YAML::Node& map, const char* key, const std::string& ctx, bool required)
    {
        const YAML::Node v = map[key];
        if (!v) {
            if (required)
                fail(map, ctx + ": missing '" + key + "'");
            return std::nullopt;
        }
        try {
            const double x = v.as<double>();
            if (!std::isfinite(x)) {
                fail(v, ctx + ": '" + key + "' must be finite");
                return std::nullopt;
            }
            return x;
        } catch (const YAML::Exception&) {
            fail(v, ctx + ": '" + key + "' must be a number");
            return std::nullopt;
        }
    }

    double number_or(const YAML::Node& map, const char* key, const std::string& ctx, double fallback)
    {
        return number(map, key, ctx, false).value_or(fallback);
    }

    std::optional<long> integer(const YAML::Node& map, const char* key, const std::string& ctx, bool required)
    {
        const YAML::Node v = map[key];
        if (!v) {
            if (required)
                fail(map, ctx + ": missing '" + key + "'");
            return std::nullopt;
        }
        try {
            return v.as<long>();
        } catch (const YAML::Exception&) {
            fail(v, ctx + ": '" + key + "' must be an integer");
            return std::nullopt;
        }
    }

    /// Exactly one of a linear key and a dB key.
    std::optional<double> linear_or_db(const YAML::Node& map, const char* lin_key, const char* db_key,
                                       const std::string& ctx)
    {
        const bool has_lin = static_cast<bool>(map[lin_key]);
        const bool has_db = static_cast<bool>(map[db_key]);
        if (has_lin && has_db) {
            fail(map, ctx + ": give either '" + lin_key + "' or '" + db_key + "', not both");
            return std::nullopt;
        }
        if (!has_lin && !has_db) {
            fail(map, ctx + ": missing '" + lin_key + "' (or '" + db_key + "')");
            return std::nullopt;
        }
        if (has_lin)
            return number(map, lin_key, ctx, true);
        const auto db = number(map, db_key, ctx, true);
        return db ? std::optional<double>(db_to_linear(*db)) : std::nullopt;
    }

private:
    std::string source_;
};

void read_radio(Reader& rd, const YAML::Node& n, Network& net)
{
    if (!rd.expect_map(n, "[radio]"))
        return;
    rd.allow_keys(n, {"height_m", "rho0", "beta", "bandwidth_mhz", "subcarriers", "kappa", "horizontal_pattern"},
                  "[radio]");
    net.height_m = rd.number(n, "height_m", "[radio]", true).value_or(net.height_m);
    net.rho0 = rd.number(n, "rho0", "[radio]", true).value_or(net.rho0);
    net.beta = rd.number(n, "beta", "[radio]", true).value_or(net.beta);
    net.bandwidth_mhz = rd.number(n, "bandwidth_mhz", "[radio]", true).value_or(net.bandwidth_mhz);
    net.subcarriers = static_cast<int>(rd.integer(n, "subcarriers", "[radio]", false).value_or(1));
    net.kappa = rd.number_or(n, "kappa", "[radio]", 1.0);

    const YAML::Node h = n["horizontal_pattern"];
    net.horizontal.enabled = false;
    if (h) {
        if (!rd.expect_map(h, "[radio].horizontal_pattern"))
            return;
        rd.allow_keys(h, {"enabled", "beamwidth_deg", "floor_db"}, "[radio].horizontal_pattern");
        try {
            net.horizontal.enabled = h["enabled"] ? h["enabled"].as<bool>() : true;
        } catch (const YAML::Exception&) {
            rd.fail(h["enabled"], "[radio].horizontal_pattern: 'enabled' must be true or false");
        }
        net.horizontal.beamwidth_deg = rd.number_or(h, "beamwidth_deg", "[radio].horizontal_pattern", 70.0);
        net.horizontal.floor_db = rd.number_or(h, "floor_db", "[radio].horizontal_pattern", 25.0);
    }
}

void read_sites(Reader& rd, const YAML::Node& n, Network& net)
{
    if (!n.IsSequence()) {
        rd.fail(n, "[sites] must be a list");
        return;
    }
    for (const auto& site : n) {
        if (!rd.expect_map(site, "site"))
            continue;
        rd.allow_keys(site, {"site", "x_km", "y_km", "sectors"}, "[sites]");
        const int sid = static_cast<int>(rd.integer(site, "site", "site", true).value_or(0));
        const std::string ctx = "site " + std::to_string(sid);
        const Position pos{rd.number(site, "x_km", ctx, true).value_or(0.0),
                           rd.number(site, "y_km", ctx, true).value_or(0.0)};
        const YAML::Node sectors = site["sectors"];
        if (!sectors || !sectors.IsSequence()) {
            rd.fail(site, ctx + ": 'sectors' must be a list");
            continue;
        }
        for (const auto& s : sectors) {
            if (!rd.expect_map(s, ctx + " sector"))
                continue;
            rd.allow_keys(s,
                          {"id", "azimuth_deg", "power_mw", "power_dbm", "max_gain", "max_gain_dbi", "beamwidth_deg",
                           "tilt_min_deg", "tilt_max_deg"},
                          "[sites] sector");
            Sector sec;
            sec.id = static_cast<int>(rd.integer(s, "id", ctx + " sector", true).value_or(-1));
            const std::string sctx = "sector " + std::to_string(sec.id);
            sec.site = sid;
            sec.position = pos;
            sec.azimuth_deg = rd.number(s, "azimuth_deg", sctx, true).value_or(0.0);
            sec.power_mw = rd.linear_or_db(s, "power_mw", "power_dbm", sctx).value_or(1.0);
            sec.max_gain = rd.linear_or_db(s, "max_gain", "max_gain_dbi", sctx).value_or(1.0);
            sec.beamwidth_deg = rd.number(s, "beamwidth_deg", sctx, true).value_or(10.0);
            sec.tilt_min_deg = rd.number(s, "tilt_min_deg", sctx, true).value_or(0.0);
            sec.tilt_max_deg = rd.number(s, "tilt_max_deg", sctx, true).value_or(0.0);
            net.sectors.push_back(sec);
        }
    }
    std::stable_sort(net.sectors.begin(), net.sectors.end(), [](const Sector& a, const Sector& b) { return a.id < b.id; });
}

void read_users(Reader& rd, const YAML::Node& n, Network& net)
{
    if (!rd.expect_map(n, "[users]"))
        return;
    rd.allow_keys(n, {"association", "association_tilt_deg", "list", "shadowing_db"}, "[users]");

    bool explicit_map = true;
    if (n["association"]) {
        const auto a = n["association"].as<std::string>();
        if (a == "strongest_power")
            explicit_map = false;
        else if (a != "explicit")
            rd.fail(n["association"], "[users]: association must be 'explicit' or 'strongest_power'");
    }
    const double assoc_tilt = rd.number_or(n, "association_tilt_deg", "[users]", 8.0);

    const YAML::Node list = n["list"];
    if (!list || !list.IsSequence()) {
        rd.fail(n, "[users]: 'list' must be a list");
        return;
    }
    std::vector<bool> pinned;
    for (const auto& u : list) {
        if (!rd.expect_map(u, "user"))
            continue;
        rd.allow_keys(u, {"id", "x_km", "y_km", "reported_x_km", "reported_y_km", "noise_mw", "noise_dbm",
                          "serving_sector"},
                      "[users] entry");
        User usr;
        usr.id = static_cast<int>(rd.integer(u, "id", "user", true).value_or(-1));
        const std::string ctx = "user " + std::to_string(usr.id);
        usr.position = {rd.number(u, "x_km", ctx, true).value_or(0.0), rd.number(u, "y_km", ctx, true).value_or(0.0)};
        usr.reported = {rd.number_or(u, "reported_x_km", ctx, usr.position.x_km),
                        rd.number_or(u, "reported_y_km", ctx, usr.position.y_km)};

        const bool has_mw = static_cast<bool>(u["noise_mw"]);
        const bool has_dbm = static_cast<bool>(u["noise_dbm"]);
        if (has_mw == has_dbm) {
            rd.fail(u, ctx + ": give exactly one of 'noise_mw' and 'noise_dbm'");
        } else {
            const YAML::Node v = has_mw ? u["noise_mw"] : u["noise_dbm"];
            try {
                std::vector<double> vals = v.IsSequence() ? v.as<std::vector<double>>()
                                                          : std::vector<double>(net.subcarriers, v.as<double>());
                if (has_dbm)
                    for (auto& x : vals)
                        x = dbm_to_mw(x);
                usr.noise_mw = std::move(vals);
            } catch (const YAML::Exception&) {
                rd.fail(v, ctx + ": noise must be a number or a list of numbers");
            }
        }

        int serving = -1;
        if (u["serving_sector"])
            serving = static_cast<int>(rd.integer(u, "serving_sector", ctx, true).value_or(-1));
        else if (explicit_map)
            rd.fail(u, ctx + ": missing 'serving_sector' (association is explicit)");
        pinned.push_back(serving >= 0);
        net.users.push_back(std::move(usr));
        net.serving.push_back(serving);
    }

    const YAML::Node sh = n["shadowing_db"];
    if (sh) {
        try {
            const auto rows = sh.as<std::vector<std::vector<double>>>();
            if (rows.size() != net.sectors.size()) {
                rd.fail(sh, "[users]: shadowing_db needs one row per sector");
            } else {
                net.shadow_db.clear();
                for (const auto& row : rows) {
                    if (row.size() != net.users.size()) {
                        rd.fail(sh, "[users]: every shadowing_db row needs one value per user");
                        net.shadow_db.clear();
                        break;
                    }
                    net.shadow_db.insert(net.shadow_db.end(), row.begin(), row.end());
                }
            }
        } catch (const YAML::Exception&) {
            rd.fail(sh, "[users]: shadowing_db must be a list of lists of numbers");
        }
    }

    if (!explicit_map && rd.problems.empty() && !net.sectors.empty()) {
        const std::vector<double> tilts(net.sectors.size(), assoc_tilt);
        const auto strongest = associate_users(net, AssociationPolicy::strongest_power, tilts);
        for (std::size_t k = 0; k < net.users.size(); ++k)
            if (!pinned[k])
                net.serving[k] = strongest[k];
    }
}

void read_optimisation(Reader& rd, const YAML::Node& n, Network& net)
{
    if (!rd.expect_map(n, "[optimisation]"))
        return;
    rd.allow_keys(n, {"rate_min_mbps", "rate_min_kbps", "rate_max_mbps"}, "[optimisation]");
    if (n["rate_min_mbps"] && n["rate_min_kbps"])
        rd.fail(n, "[optimisation]: give either 'rate_min_mbps' or 'rate_min_kbps', not both");
    else if (n["rate_min_kbps"])
        net.rate_min_mbps = rd.number(n, "rate_min_kbps", "[optimisation]", true).value_or(0.0) / kbps_per_mbps;
    else
        net.rate_min_mbps = rd.number(n, "rate_min_mbps", "[optimisation]", true).value_or(0.0);
    net.rate_max_mbps = rd.number(n, "rate_max_mbps", "[optimisation]", true).value_or(net.rate_max_mbps);
}

} // namespace

Network parse_scenario(const std::string& text, const std::string& source)
{
    YAML::Node doc;
    try {
        doc = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError({source + ":" + std::to_string(e.mark.line + 1) + ": parse error: " + e.msg});
    }

    Reader rd(source);
    Network net;
    if (!doc.IsMap())
        throw ConfigError({source + ": scenario must be a mapping"});
    rd.allow_keys(doc, {"schema", "radio", "sites", "users", "optimisation"}, "scenario");

    if (!doc["schema"])
        rd.fail(doc, "missing 'schema' (expected " + std::string(scenario_schema_id) + ")");
    else if (doc["schema"].as<std::string>() != scenario_schema_id)
        rd.fail(doc["schema"], "unsupported schema '" + doc["schema"].as<std::string>() + "' (expected " +
                                   scenario_schema_id + ")");

    for (const char* section : {"radio", "sites", "users", "optimisation"})
        if (!doc[section])
            rd.fail(doc, std::string("missing section [") + section + "]");

    if (doc["radio"])
        read_radio(rd, doc["radio"], net);
    if (doc["sites"])
        read_sites(rd, doc["sites"], net);
    if (doc["users"])
        read_users(rd, doc["users"], net);
    if (doc["optimisation"])
        read_optimisation(rd, doc["optimisation"], net);

    if (!rd.problems.empty())
        throw ConfigError(rd.problems);
    auto bad = invariant_violations(net);
    if (!bad.empty()) {
        for (auto& b : bad)
            b = source + ": " + b;
        throw ConfigError(bad);
    }
    return net;
}

Network load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({path.string() + ": cannot open scenario file"});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

void save_scenario(const Network& net, std::ostream& os)
{
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "schema" << YAML::Value << scenario_schema_id;

    out << YAML::Key << "radio" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "height_m" << YAML::Value << net.height_m;
    out << YAML::Key << "rho0" << YAML::Value << net.rho0;
    out << YAML::Key << "beta" << YAML::Value << net.beta;
    out << YAML::Key << "bandwidth_mhz" << YAML::Value << net.bandwidth_mhz;
    out << YAML::Key << "subcarriers" << YAML::Value << net.subcarriers;
    out << YAML::Key << "kappa" << YAML::Value << net.kappa;
    out << YAML::Key << "horizontal_pattern" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "enabled" << YAML::Value << net.horizontal.enabled;
    out << YAML::Key << "beamwidth_deg" << YAML::Value << net.horizontal.beamwidth_deg;
    out << YAML::Key << "floor_db" << YAML::Value << net.horizontal.floor_db;
    out << YAML::EndMap << YAML::EndMap;

    // sites in order of first appearance
    std::vector<int> order;
    std::map<int, std::vector<const Sector*>> by_site;
    for (const auto& s : net.sectors) {
        if (!by_site.count(s.site))
            order.push_back(s.site);
        by_site[s.site].push_back(&s);
    }
    out << YAML::Key << "sites" << YAML::Value << YAML::BeginSeq;
    for (int site : order) {
        const auto& secs = by_site[site];
        out << YAML::BeginMap;
        out << YAML::Key << "site" << YAML::Value << site;
        out << YAML::Key << "x_km" << YAML::Value << secs.front()->position.x_km;
        out << YAML::Key << "y_km" << YAML::Value << secs.front()->position.y_km;
        out << YAML::Key << "sectors" << YAML::Value << YAML::BeginSeq;
        for (const Sector* s : secs) {
            out << YAML::BeginMap;
            out << YAML::Key << "id" << YAML::Value << s->id;
            out << YAML::Key << "azimuth_deg" << YAML::Value << s->azimuth_deg;
            out << YAML::Key << "power_mw" << YAML::Value << s->power_mw;
            out << YAML::Key << "max_gain" << YAML::Value << s->max_gain;
            out << YAML::Key << "beamwidth_deg" << YAML::Value << s->beamwidth_deg;
            out << YAML::Key << "tilt_min_deg" << YAML::Value << s->tilt_min_deg;
            out << YAML::Key << "tilt_max_deg" << YAML::Value << s->tilt_max_deg;
            out << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "users" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "association" << YAML::Value << "explicit";
    out << YAML::Key << "list" << YAML::Value << YAML::BeginSeq;
    for (std::size_t k = 0; k < net.users.size(); ++k) {
        const auto& u = net.users[k];
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << u.id;
        out << YAML::Key << "x_km" << YAML::Value << u.position.x_km;
        out << YAML::Key << "y_km" << YAML::Value << u.position.y_km;
        if (u.reported.x_km != u.position.x_km || u.reported.y_km != u.position.y_km) {
            out << YAML::Key << "reported_x_km" << YAML::Value << u.reported.x_km;
            out << YAML::Key << "reported_y_km" << YAML::Value << u.reported.y_km;
        }
        out << YAML::Key << "noise_mw" << YAML::Value << YAML::Flow << u.noise_mw;
        out << YAML::Key << "serving_sector" << YAML::Value << net.serving[k];
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    if (!net.shadow_db.empty()) {
        out << YAML::Key << "shadowing_db" << YAML::Value << YAML::BeginSeq;
        const std::size_t users = net.users.size();
        for (std::size_t b = 0; b < net.sectors.size(); ++b) {
            std::vector<double> row(net.shadow_db.begin() + b * users, net.shadow_db.begin() + (b + 1) * users);
            out << YAML::Flow << row;
        }
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;

    out << YAML::Key << "optimisation" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "rate_min_mbps" << YAML::Value << net.rate_min_mbps;
    out << YAML::Key << "rate_max_mbps" << YAML::Value << net.rate_max_mbps;
    out << YAML::EndMap;

    out << YAML::EndMap;
    os << out.c_str() << '\n';
}

void save_scenario(const Network& net, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    save_scenario(net, out);
}

} // namespace tiltopt
