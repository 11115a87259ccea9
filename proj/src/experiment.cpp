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


#include "tiltopt/experiment.hpp"

#include "tiltopt/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace tiltopt {

namespace {

const std::map<std::string, ExperimentKind> kind_names = {
    {"optimize-P1", ExperimentKind::optimize_p1},
    {"optimize-P2", ExperimentKind::optimize_p2},
    {"fixed-tilt-baseline", ExperimentKind::fixed_tilt_baseline},
    {"minrate-sweep", ExperimentKind::minrate_sweep},
    {"location-noise-sweep", ExperimentKind::location_noise_sweep},
    {"simo-mmse-eval", ExperimentKind::simo_mmse_eval},
    {"grid-search-oracle", ExperimentKind::grid_search_oracle},
};

double median_of(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json metrics_json(const RateMetrics& m)
{
    return {{"normalized_sum_throughput_mbps", m.sum_rate},
            {"normalized_sum_log_throughput", m.sum_log},
            {"normalized_sum_high_sinr_throughput_mbps", m.sum_rate_high_sinr},
            {"median_throughput_mbps", m.median_rate}};
}

nlohmann::json feasibility_json(const FeasibilityReport& r, bool suspect)
{
    return {{"feasible", r.feasible()},
            {"violations", r.violations},
            {"worst_rate_shortfall_mbps", r.worst_rate_shortfall},
            {"suspect_infeasible", suspect}};
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name)
{
    std::ofstream out(dir / name);
    if (!out)
        throw std::runtime_error("cannot write " + (dir / name).string());
    out.precision(17);
    return out;
}

void write_rates_csv(const std::filesystem::path& dir, const Network& net, const RateMetrics& before,
                     const RateMetrics& after)
{
    auto out = open_output(dir, "rates.csv");
    out << "user,serving_sector,rate_initial_mbps,rate_final_mbps\n";
    for (std::size_t u = 0; u < net.num_users(); ++u)
        out << net.users[u].id << ',' << net.serving[u] << ',' << before.rates[u] << ',' << after.rates[u] << '\n';
}

RunOptions run_options(const ExperimentSpec& spec)
{
    RunOptions o;
    o.alpha = spec.alpha;
    o.iterations = spec.iterations;
    o.stop.kind = spec.stop_on_convergence ? StopRule::Kind::converged : StopRule::Kind::fixed_iterations;
    o.stop.tolerance = spec.tolerance_deg;
    return o;
}

nlohmann::json certificate_json(const TiltProblem& problem, const IterationTrace& trace)
{
    // The optimum is unknown; the final iterate stands in for it.
    const auto& ref = trace.back();
    const auto cert = gap_certificate(problem, trace, ref.x, ref.u);
    const auto slack = lyapunov_slack(problem, trace, ref.x, ref.u);
    const double worst = slack.empty() ? 0.0 : *std::min_element(slack.begin(), slack.end());
    return {{"reference", "final iterate"},
            {"averaged_gap", cert.averaged_gap.empty() ? 0.0 : cert.averaged_gap.back()},
            {"gap_bound", cert.bound.empty() ? 0.0 : cert.bound.back()},
            {"bound_holds", cert.bound_holds},
            {"worst_lyapunov_slack", worst}};
}

ExitCode optimisation_exit(const Outcome& o)
{
    if (o.trace.diverged)
        return ExitCode::diverged;
    if (!o.feasibility.feasible())
        return ExitCode::infeasible;
    return ExitCode::success;
}

} // namespace

std::string to_string(ExperimentKind kind)
{
    for (const auto& [name, k] : kind_names)
        if (k == kind)
            return name;
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name)
{
    const auto it = kind_names.find(name);
    if (it == kind_names.end())
        throw std::invalid_argument("unknown experiment kind '" + name + "'");
    return it->second;
}

Network resolve_scenario(const std::string& ref, std::uint64_t seed, int users)
{
    if (ref == "builtin:cluster")
        return build_hex_scenario(cluster_scenario_spec(), seed);
    if (ref == "builtin:urban")
        return build_hex_scenario(users > 0 ? urban_scenario_spec(users) : urban_scenario_spec(), seed);
    if (ref == "builtin:pair")
        return build_hex_scenario(pair_scenario_spec(), seed);
    if (ref.rfind("builtin:", 0) == 0)
        throw ConfigError({"unknown built-in scenario '" + ref + "' (cluster, urban, pair)"});
    return load_scenario(ref);
}

std::string scenario_fingerprint(const Network& net)
{
    std::ostringstream os;
    save_scenario(net, os);
    // FNV-1a
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

std::vector<std::string> spec_problems(const ExperimentSpec& spec)
{
    std::vector<std::string> out;
    if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha))
        out.push_back("alpha must be > 0");
    if (spec.iterations == 0)
        out.push_back("iterations must be >= 1");
    if (!(spec.tolerance_deg > 0.0))
        out.push_back("tolerance must be > 0");
    if (!(spec.bound_tolerance_deg >= 0.0))
        out.push_back("bound tolerance must be >= 0");
    if (spec.drop_probability < 0.0 || spec.drop_probability > 1.0)
        out.push_back("drop probability must be in [0, 1]");
    if (spec.interference_floor < 0.0)
        out.push_back("interference floor must be >= 0");
    if (spec.samples == 0)
        out.push_back("samples must be >= 1");
    if (!(spec.grid_step_deg > 0.0))
        out.push_back("grid step must be > 0");
    if (spec.rate_min_mbps && *spec.rate_min_mbps < 0.0)
        out.push_back("minimum rate must be >= 0");
    if (spec.kind == ExperimentKind::location_noise_sweep) {
        if (spec.noise_seeds == 0)
            out.push_back("noise seeds must be >= 1");
        for (double s : spec.sweep_values)
            if (s < 0.0)
                out.push_back("location noise sigma must be >= 0");
    }
    if (spec.kind == ExperimentKind::minrate_sweep)
        for (double r : spec.sweep_values)
            if (r < 0.0)
                out.push_back("swept minimum rate must be >= 0");
    if (spec.scenario.rfind("builtin:", 0) != 0 && !std::filesystem::exists(spec.scenario))
        out.push_back("scenario file '" + spec.scenario + "' does not exist");
    return out;
}

RateMetrics rate_metrics(const LinkTable& links, std::span<const double> tilts)
{
    const Network& net = links.network();
    RateMetrics m;
    m.rates = user_rates(links, tilts);
    const double n = static_cast<double>(std::max<std::size_t>(1, net.num_users()));
    for (std::size_t u = 0; u < net.num_users(); ++u) {
        m.sum_rate += m.rates[u];
        m.sum_log += std::log(m.rates[u]);
        m.sum_rate_high_sinr += rate_high_sinr(links, u, tilts).truncated;
    }
    m.sum_rate /= n;
    m.sum_log /= n;
    m.sum_rate_high_sinr /= n;
    m.median_rate = median_of(m.rates);
    return m;
}

Outcome optimize(const Network& net, Variant variant, UtilitySpec utility, const RunOptions& options,
                 double initial_tilt_deg, double bound_tolerance_deg)
{
    const TiltVector x0(net.num_sectors(), initial_tilt_deg);
    const TiltProblem problem(net, variant, {x0}, utility);
    Outcome o;
    o.trace = run(problem, x0, Multipliers::zeros(net.num_users(), net.num_sectors()).flatten(), options);
    o.tilts = o.trace.back().x;
    o.initial = rate_metrics(problem.links(), x0);
    o.final = rate_metrics(problem.links(), o.tilts);
    o.feasibility = feasibility_check(problem, o.tilts, bound_tolerance_deg);
    o.suspect_infeasible = suspect_infeasible(problem, o.trace);
    return o;
}

GridSearchResult grid_search(const TiltProblem& problem, double step_deg)
{
    const Network& net = problem.network();
    const std::size_t n = net.num_sectors();
    if (n > 3)
        throw std::invalid_argument("grid search is limited to three sectors");
    std::vector<std::vector<double>> axes(n);
    for (std::size_t b = 0; b < n; ++b) {
        const auto& s = net.sectors[b];
        const auto cells = static_cast<std::size_t>(std::floor((s.tilt_max_deg - s.tilt_min_deg) / step_deg + 1e-9));
        for (std::size_t i = 0; i <= cells; ++i)
            axes[b].push_back(s.tilt_min_deg + static_cast<double>(i) * step_deg);
    }

    GridSearchResult best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(n, 0);
    TiltVector x(n);
    std::vector<double> g(problem.dual_dim());
    const std::size_t users = net.num_users();
    for (;;) {
        for (std::size_t b = 0; b < n; ++b)
            x[b] = axes[b][idx[b]];
        ++best.evaluated;
        problem.constraints(x, g);
        const bool ok = std::all_of(g.begin(), g.begin() + users, [](double v) { return v <= 0.0; });
        if (ok) {
            ++best.feasible;
            const double f = problem.objective(x);
            if (f < best.objective) {
                best.objective = f;
                best.tilts = x;
            }
        }
        std::size_t b = 0;
        while (b < n && ++idx[b] == axes[b].size())
            idx[b++] = 0;
        if (b == n)
            break;
    }
    return best;
}

std::vector<SweepPoint> minrate_sweep(const Network& net, std::span<const double> rate_min_mbps,
                                      const RunOptions& options, double initial_tilt_deg, double bound_tolerance_deg)
{
    std::vector<SweepPoint> out;
    for (double r : rate_min_mbps) {
        Network copy = net;
        copy.rate_min_mbps = r;
        const Outcome o = optimize(copy, Variant::high_sinr, {}, options, initial_tilt_deg, bound_tolerance_deg);
        SweepPoint p;
        p.value = r;
        p.metrics = o.final;
        p.feasible = o.feasibility.feasible();
        p.suspect_infeasible = o.suspect_infeasible;
        p.diverged = o.trace.diverged;
        p.tilts = o.tilts;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<NoisePoint> location_noise_sweep(const Network& net, std::span<const double> sigmas_m,
                                             std::size_t seeds, std::uint64_t base_seed, const RunOptions& options,
                                             double initial_tilt_deg)
{
    std::vector<NoisePoint> out;
    for (double sigma : sigmas_m) {
        NoisePoint p;
        p.sigma_m = sigma;
        for (std::size_t k = 0; k < seeds; ++k) {
            const Network noisy = with_reported_positions(net, inject_location_noise(net, sigma, base_seed + k));
            const Outcome o = optimize(noisy, Variant::high_sinr, {}, options, initial_tilt_deg);
            p.per_seed.push_back(o.final.sum_rate);
        }
        for (double v : p.per_seed)
            p.mean_sum_rate += v;
        p.mean_sum_rate /= static_cast<double>(std::max<std::size_t>(1, p.per_seed.size()));
        out.push_back(std::move(p));
    }
    return out;
}

nlohmann::json compare_runs(const nlohmann::json& a, const nlohmann::json& b)
{
    const auto fa = a.at("scenario").at("fingerprint").get<std::string>();
    const auto fb = b.at("scenario").at("fingerprint").get<std::string>();
    if (fa != fb)
        throw std::invalid_argument("runs use different scenarios (" + fa + " vs " + fb + ")");

    const auto& ma = a.at("final");
    const auto& mb = b.at("final");
    const double ra = ma.at("normalized_sum_throughput_mbps"), rb = mb.at("normalized_sum_throughput_mbps");
    const double la = ma.at("normalized_sum_log_throughput"), lb = mb.at("normalized_sum_log_throughput");
    const auto rates_a = a.at("rates_mbps").get<std::vector<double>>();
    const auto rates_b = b.at("rates_mbps").get<std::vector<double>>();
    if (rates_a.size() != rates_b.size())
        throw std::invalid_argument("runs have different user counts");

    nlohmann::json out;
    out["a"] = {{"kind", a.at("kind")}, {"sum_throughput", ra}, {"sum_log_throughput", la}};
    out["b"] = {{"kind", b.at("kind")}, {"sum_throughput", rb}, {"sum_log_throughput", lb}};
    out["sum_throughput_diff"] = rb - ra;
    out["sum_log_throughput_diff"] = lb - la;
    out["sum_throughput_order"] = ra > rb ? "a>b" : (ra < rb ? "a<b" : "a=b");
    out["sum_log_throughput_order"] = la > lb ? "a>b" : (la < lb ? "a<b" : "a=b");
    std::vector<double> delta(rates_a.size());
    for (std::size_t u = 0; u < delta.size(); ++u)
        delta[u] = rates_b[u] - rates_a[u];
    out["per_user_rate_delta_mbps"] = delta;
    return out;
}

// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    if (auto bad = spec_problems(spec); !bad.empty())
        throw ConfigError(std::move(bad));

    Network net = resolve_scenario(spec.scenario, spec.scenario_seed, spec.scenario_users);
    if (spec.rate_min_mbps)
        net.rate_min_mbps = *spec.rate_min_mbps;
    validate(net);

    const bool write = !spec.output_dir.empty();
    if (write)
        std::filesystem::create_directories(spec.output_dir);

    ExperimentResult res;
    nlohmann::json& s = res.summary;
    s["schema"] = summary_schema_id;
    s["kind"] = to_string(spec.kind);
    s["scenario"] = {{"source", spec.scenario},
                     {"seed", spec.scenario_seed},
                     {"fingerprint", scenario_fingerprint(net)},
                     {"sectors", net.num_sectors()},
                     {"users", net.num_users()},
                     {"horizontal_pattern_extension", net.horizontal.enabled}};
    s["parameters"] = {{"alpha", spec.alpha},
                       {"iterations", spec.iterations},
                       {"initial_tilt_deg", spec.initial_tilt_deg},
                       {"bound_tolerance_deg", spec.bound_tolerance_deg},
                       {"utility", spec.utility == UtilitySpec::Kind::linear ? "linear" : "log"},
                       {"rate_min_mbps", net.rate_min_mbps},
                       {"rate_max_mbps", net.rate_max_mbps},
                       {"seed", spec.seed}};
    s["units"] = {{"throughput", "Mbps-equivalent (natural log)"}, {"angles", "degrees"}};

    const RunOptions options = run_options(spec);
    const TiltVector x0(net.num_sectors(), spec.initial_tilt_deg);
    const UtilitySpec utility{spec.utility};

    try {
        switch (spec.kind) {
        case ExperimentKind::fixed_tilt_baseline: {
            const LinkTable links(net, {x0});
            const RateMetrics m = rate_metrics(links, x0);
            s["tilts_deg"] = x0;
            s["final"] = metrics_json(m);
            s["rates_mbps"] = m.rates;
            if (write)
                write_rates_csv(spec.output_dir, net, m, m);
            break;
        }
        case ExperimentKind::optimize_p1:
        case ExperimentKind::optimize_p2: {
            const Variant variant = spec.kind == ExperimentKind::optimize_p1 ? Variant::high_sinr : Variant::prop_fair;
            const TiltProblem problem(net, variant, {x0}, utility);
            if (spec.distributed) {
                DistributedOptions d;
                d.alpha = spec.alpha;
                d.rounds = spec.iterations;
                d.reports.interference_floor = spec.interference_floor;
                d.drop_probability = spec.drop_probability;
                d.seed = spec.seed;
                std::ofstream log;
                if (write) {
                    log = open_output(spec.output_dir, "messages.jsonl");
                    d.message_log = &log;
                }
                const auto r = run_distributed(problem, x0, Multipliers::zeros(net.num_users(), net.num_sectors()), d);
                const TiltVector x = agent_tilts(r.agents);
                const RateMetrics before = rate_metrics(problem.links(), x0);
                const RateMetrics after = rate_metrics(problem.links(), x);
                const auto feas = feasibility_check(problem, x, spec.bound_tolerance_deg);
                s["engine"] = "distributed";
                s["tilts_deg"] = x;
                s["initial"] = metrics_json(before);
                s["final"] = metrics_json(after);
                s["rates_mbps"] = after.rates;
                s["feasibility"] = feasibility_json(feas, false);
                s["messages"] = {{"sent", r.messages},
                                 {"dropped", r.dropped},
                                 {"entries", r.entries},
                                 {"omitted_links", r.omitted_links},
                                 {"max_omitted_share", r.max_omitted_share},
                                 {"staleness", r.staleness}};
                if (write) {
                    write_rates_csv(spec.output_dir, net, before, after);
                    auto out = open_output(spec.output_dir, "tilts.csv");
                    out << "round";
                    for (std::size_t b = 0; b < net.num_sectors(); ++b)
                        out << ",theta_" << b;
                    out << '\n';
                    for (std::size_t t = 0; t < r.tilt_history.size(); ++t) {
                        out << t;
                        for (double v : r.tilt_history[t])
                            out << ',' << v;
                        out << '\n';
                    }
                }
                if (!feas.feasible())
                    res.exit_code = ExitCode::infeasible;
                break;
            }
            const Outcome o = optimize(net, variant, utility, options, spec.initial_tilt_deg, spec.bound_tolerance_deg);
            s["engine"] = "centralized";
            s["tilts_deg"] = o.tilts;
            s["converged_at"] = o.trace.converged_at ? nlohmann::json(*o.trace.converged_at) : nlohmann::json();
            s["diverged"] = o.trace.diverged;
            s["iterations_run"] = o.trace.iterations();
            s["objective"] = {{"initial", problem.objective(x0)}, {"final", problem.objective(o.tilts)}};
            s["initial"] = metrics_json(o.initial);
            s["final"] = metrics_json(o.final);
            s["rates_mbps"] = o.final.rates;
            s["feasibility"] = feasibility_json(o.feasibility, o.suspect_infeasible);
            s["linearization_sign_flips"] = count_linearization_sign_flips(problem.links(), o.tilts);
            if (!o.trace.diverged)
                s["certificate"] = certificate_json(problem, o.trace);
            if (write) {
                auto out = open_output(spec.output_dir, "trace.csv");
                write_trace_csv(out, o.trace);
                write_rates_csv(spec.output_dir, net, o.initial, o.final);
            }
            res.exit_code = optimisation_exit(o);
            break;
        }
        case ExperimentKind::minrate_sweep: {
            std::vector<double> values = spec.sweep_values;
            if (values.empty())
                values = {0.0, 0.064, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0};
            const auto points = minrate_sweep(net, values, options, spec.initial_tilt_deg, spec.bound_tolerance_deg);
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& p : points)
                arr.push_back({{"rate_min_mbps", p.value},
                               {"metrics", metrics_json(p.metrics)},
                               {"feasible", p.feasible},
                               {"suspect_infeasible", p.suspect_infeasible},
                               {"diverged", p.diverged},
                               {"tilts_deg", p.tilts}});
            s["sweep"] = arr;
            if (write) {
                auto out = open_output(spec.output_dir, "sweep.csv");
                out << "rate_min_mbps,normalized_sum_throughput_mbps,normalized_sum_high_sinr_throughput_mbps,feasible,"
                       "suspect_infeasible\n";
                for (const auto& p : points)
                    out << p.value << ',' << p.metrics.sum_rate << ',' << p.metrics.sum_rate_high_sinr << ','
                        << p.feasible << ',' << p.suspect_infeasible << '\n';
            }
            break;
        }
        case ExperimentKind::location_noise_sweep: {
            std::vector<double> values = spec.sweep_values;
            if (values.empty())
                values = {0.0, 10.0, 25.0, 50.0};
            const auto points = location_noise_sweep(net, values, spec.noise_seeds, spec.seed, options,
                                                     spec.initial_tilt_deg);
            nlohmann::json arr = nlohmann::json::array();
            const double reference = points.front().mean_sum_rate;
            for (const auto& p : points)
                arr.push_back({{"sigma_m", p.sigma_m},
                               {"mean_normalized_sum_throughput_mbps", p.mean_sum_rate},
                               {"loss_vs_first_pct", reference > 0.0 ? 100.0 * (1.0 - p.mean_sum_rate / reference) : 0.0},
                               {"per_seed", p.per_seed}});
            s["sweep"] = arr;
            if (write) {
                auto out = open_output(spec.output_dir, "sweep.csv");
                out << "sigma_m,mean_normalized_sum_throughput_mbps\n";
                for (const auto& p : points)
                    out << p.sigma_m << ',' << p.mean_sum_rate << '\n';
            }
            break;
        }
        case ExperimentKind::simo_mmse_eval: {
            const Outcome o = optimize(net, Variant::prop_fair, {}, options, spec.initial_tilt_deg);
            SimoOptions so;
            so.samples = spec.samples;
            so.seed = spec.seed;
            const SimoReport rep = evaluate_simo_throughput(net, x0, o.tilts, so);
            s["tilts_deg"] = o.tilts;
            s["gains"] = nlohmann::json::parse(gains_json(rep));
            if (write) {
                auto out = open_output(spec.output_dir, "cdf.csv");
                write_throughput_cdf_csv(out, rep);
                auto g = open_output(spec.output_dir, "gains.json");
                g << gains_json(rep) << '\n';
            }
            break;
        }
        case ExperimentKind::grid_search_oracle: {
            const TiltProblem problem(net, Variant::high_sinr, {x0}, utility);
            const Outcome o = optimize(net, Variant::high_sinr, utility, options, spec.initial_tilt_deg);
            const auto grid = grid_search(problem, spec.grid_step_deg);
            double max_diff = 0.0;
            for (std::size_t b = 0; b < o.tilts.size() && !grid.tilts.empty(); ++b)
                max_diff = std::max(max_diff, std::abs(o.tilts[b] - grid.tilts[b]));
            const double f_alg = problem.objective(o.tilts);
            s["tilts_deg"] = o.tilts;
            s["grid"] = {{"tilts_deg", grid.tilts},
                         {"objective", grid.objective},
                         {"evaluated", grid.evaluated},
                         {"feasible_points", grid.feasible},
                         {"step_deg", spec.grid_step_deg}};
            s["objective"] = {{"algorithm", f_alg}, {"grid", grid.objective}};
            s["max_tilt_difference_deg"] = max_diff;
            s["relative_objective_difference"] =
                grid.objective != 0.0 ? std::abs(f_alg - grid.objective) / std::abs(grid.objective) : 0.0;
            s["final"] = metrics_json(o.final);
            s["rates_mbps"] = o.final.rates;
            res.exit_code = optimisation_exit(o);
            break;
        }
        }
    } catch (const NonFiniteError& e) {
        s["diverged"] = true;
        s["error"] = e.what();
        res.exit_code = ExitCode::diverged;
    }

    s["exit_code"] = static_cast<int>(res.exit_code);
    if (write) {
        auto out = open_output(spec.output_dir, "summary.json");
        out << s.dump(2) << '\n';
    }
    return res;
}

} // namespace tiltopt
