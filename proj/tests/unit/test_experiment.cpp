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


#include "doctest.h"

#include "fixtures.hpp"
#include "tiltopt/experiment.hpp"
#include "tiltopt/scenario_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace tiltopt;
using namespace tiltopt::testing;

namespace {

ExperimentSpec pair_run(ExperimentKind kind)
{
    ExperimentSpec spec;
    spec.kind = kind;
    spec.scenario = "builtin:pair";
    spec.stop_on_convergence = true;
    return spec;
}

} // namespace

TEST_CASE("experiment kinds round-trip through their names")
{
    for (auto k : {ExperimentKind::optimize_p1, ExperimentKind::optimize_p2, ExperimentKind::fixed_tilt_baseline,
                   ExperimentKind::minrate_sweep, ExperimentKind::location_noise_sweep,
                   ExperimentKind::simo_mmse_eval, ExperimentKind::grid_search_oracle})
        CHECK(parse_experiment_kind(to_string(k)) == k);
    CHECK(to_string(ExperimentKind::optimize_p2) == "optimize-P2");
    CHECK_THROWS(parse_experiment_kind("optimise"));
}

TEST_CASE("rate metrics")
{
    const Network net = build_hex_scenario(cluster_scenario_spec(), 1);
    const TiltVector t(9, 8.0);
    LinkTable links(net, {t});
    const auto m = rate_metrics(links, t);
    REQUIRE(m.rates.size() == net.num_users());
    double sum = 0.0, logs = 0.0, hat = 0.0;
    for (std::size_t u = 0; u < net.num_users(); ++u) {
        CHECK(m.rates[u] == rate(links, u, t).truncated);
        sum += m.rates[u];
        logs += std::log(m.rates[u]);
        hat += rate_high_sinr(links, u, t).truncated;
    }
    const double n = static_cast<double>(net.num_users());
    CHECK(m.sum_rate == doctest::Approx(sum / n).epsilon(1e-14));
    CHECK(m.sum_log == doctest::Approx(logs / n).epsilon(1e-14));
    CHECK(m.sum_rate_high_sinr == doctest::Approx(hat / n).epsilon(1e-14));
    auto sorted = m.rates;
    std::sort(sorted.begin(), sorted.end());
    CHECK(m.median_rate == doctest::Approx(0.5 * (sorted[16] + sorted[17])).epsilon(1e-14));
}

TEST_CASE("pair scenario optimum")
{
    const auto res = run_experiment(pair_run(ExperimentKind::optimize_p1));
    const auto& s = res.summary;
    CHECK(res.exit_code == ExitCode::success);
    CHECK(s.at("schema") == summary_schema_id);
    CHECK(s.at("engine") == "centralized");
    REQUIRE_FALSE(s.at("converged_at").is_null());
    CHECK(s.at("converged_at").get<int>() < 1500);
    const auto t = s.at("tilts_deg").get<std::vector<double>>();
    REQUIRE(t.size() == 2);
    CHECK(t[0] == doctest::Approx(15.26).epsilon(2e-3));
    CHECK(t[1] == doctest::Approx(12.44).epsilon(2e-3));
    CHECK(s.at("objective").at("final").get<double>() < s.at("objective").at("initial").get<double>());
    CHECK(s.at("certificate").at("bound_holds").get<bool>());
    CHECK(s.at("feasibility").at("feasible").get<bool>());
}

TEST_CASE("experiments are deterministic")
{
    for (auto kind : {ExperimentKind::optimize_p1, ExperimentKind::optimize_p2, ExperimentKind::fixed_tilt_baseline}) {
        auto spec = pair_run(kind);
        spec.scenario = "builtin:cluster";
        spec.stop_on_convergence = false;
        spec.iterations = 200;
        CHECK(run_experiment(spec).summary.dump() == run_experiment(spec).summary.dump());
    }
}

TEST_CASE("output files")
{
    const auto dir = std::filesystem::temp_directory_path() / "tiltopt_experiment_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto spec = pair_run(ExperimentKind::optimize_p2);
    spec.output_dir = dir;
    const auto res = run_experiment(spec);
    for (const char* f : {"summary.json", "trace.csv", "rates.csv"})
        CHECK(std::filesystem::exists(dir / f));
    std::ifstream in(dir / "summary.json");
    CHECK(nlohmann::json::parse(in) == res.summary);

    spec.distributed = true;
    spec.iterations = 50;
    run_experiment(spec);
    CHECK(std::filesystem::exists(dir / "messages.jsonl"));
    CHECK(std::filesystem::exists(dir / "tilts.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("distributed engine agrees with the centralised one through the runner")
{
    auto spec = pair_run(ExperimentKind::optimize_p1);
    spec.stop_on_convergence = false;
    spec.iterations = 300;
    spec.interference_floor = 0.0;
    const auto central = run_experiment(spec).summary;
    spec.distributed = true;
    const auto dist = run_experiment(spec).summary;
    CHECK(dist.at("engine") == "distributed");
    CHECK(dist.at("tilts_deg") == central.at("tilts_deg"));
}

TEST_CASE("comparing runs")
{
    auto spec = pair_run(ExperimentKind::fixed_tilt_baseline);
    const auto base = run_experiment(spec).summary;
    spec.kind = ExperimentKind::optimize_p1;
    const auto opt = run_experiment(spec).summary;
    const auto cmp = compare_runs(base, opt);
    CHECK(cmp.at("sum_throughput_order") == "a<b");
    const auto delta = cmp.at("per_user_rate_delta_mbps").get<std::vector<double>>();
    const auto ra = base.at("rates_mbps").get<std::vector<double>>();
    const auto rb = opt.at("rates_mbps").get<std::vector<double>>();
    for (std::size_t u = 0; u < delta.size(); ++u)
        CHECK(delta[u] == rb[u] - ra[u]);
    CHECK(compare_runs(opt, opt).at("sum_log_throughput_order") == "a=b");

    spec.scenario = "builtin:cluster";
    CHECK_THROWS_AS(compare_runs(base, run_experiment(spec).summary), std::invalid_argument);
}

TEST_CASE("spec validation")
{
    ExperimentSpec ok;
    CHECK(spec_problems(ok).empty());
    ExperimentSpec bad;
    bad.alpha = -1.0;
    bad.iterations = 0;
    bad.drop_probability = 2.0;
    bad.scenario = "/nonexistent/scenario.yaml";
    CHECK(spec_problems(bad).size() == 4);
    bad = {};
    bad.kind = ExperimentKind::minrate_sweep;
    bad.sweep_values = {0.1, -1.0};
    CHECK(spec_problems(bad).size() == 1);
}

TEST_CASE("scenario resolution")
{
    CHECK(resolve_scenario("builtin:pair", 1).num_sectors() == 2);
    CHECK(resolve_scenario("builtin:urban", 1, 90).num_users() == 90);
    CHECK_THROWS(resolve_scenario("builtin:nowhere", 1));

    const Network net = resolve_scenario("builtin:cluster", 1);
    const auto path = std::filesystem::temp_directory_path() / "tiltopt_resolve.yaml";
    save_scenario(net, path);
    const Network back = resolve_scenario(path.string(), 99);
    CHECK(scenario_fingerprint(back) == scenario_fingerprint(net));
    std::filesystem::remove(path);

    CHECK(scenario_fingerprint(net) != scenario_fingerprint(resolve_scenario("builtin:pair", 1)));
    CHECK(scenario_fingerprint(net).size() == 16);
}

TEST_CASE("infeasible minimum rate gives the infeasible exit code")
{
    auto spec = pair_run(ExperimentKind::optimize_p2);
    spec.rate_min_mbps = 500.0;
    spec.stop_on_convergence = false;
    spec.iterations = 300;
    const auto res = run_experiment(spec);
    CHECK(res.exit_code == ExitCode::infeasible);
    CHECK_FALSE(res.summary.at("feasibility").at("feasible").get<bool>());
}

TEST_CASE("a step size far too large is reported as divergence")
{
    auto spec = pair_run(ExperimentKind::optimize_p1);
    spec.stop_on_convergence = false;
    spec.alpha = 1e4;
    spec.iterations = 2000;
    const auto res = run_experiment(spec);
    CHECK(res.exit_code == ExitCode::diverged);
    CHECK(res.summary.at("diverged").get<bool>());
}

TEST_CASE("grid search")
{
    const Network net = build_hex_scenario(pair_scenario_spec(), 1);
    TiltProblem p(net, Variant::high_sinr, {TiltVector(2, 8.0)});
    const auto g = grid_search(p, 0.5);
    CHECK(g.evaluated == 31 * 31);
    CHECK(g.feasible <= g.evaluated);
    // the returned point is the best one on the grid
    for (double a = 5.0; a <= 20.0; a += 0.5)
        for (double b = 5.0; b <= 20.0; b += 0.5)
            if (feasibility_check(p, TiltVector{a, b}, 0.0).feasible())
                CHECK(p.objective(TiltVector{a, b}) >= g.objective);
    const Network big = build_hex_scenario(cluster_scenario_spec(), 1);
    TiltProblem q(big, Variant::high_sinr, {TiltVector(9, 8.0)});
    CHECK_THROWS_AS(grid_search(q, 0.5), std::invalid_argument);
}
