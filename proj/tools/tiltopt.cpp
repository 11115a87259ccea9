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

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace tiltopt;

namespace {

void add_spec_options(CLI::App* cmd, ExperimentSpec& spec, std::string& utility)
{
    cmd->add_option("--scenario", spec.scenario, "scenario file or builtin:cluster|urban|pair")
        ->capture_default_str();
    cmd->add_option("--scenario-seed", spec.scenario_seed, "seed for built-in scenarios")->capture_default_str();
    cmd->add_option("--users", spec.scenario_users, "user count for builtin:urban");
    cmd->add_option("--alpha", spec.alpha, "step size")->capture_default_str();
    cmd->add_option("--iterations", spec.iterations, "iterations (or rounds)")->capture_default_str();
    cmd->add_flag("--stop-on-convergence", spec.stop_on_convergence, "stop once iterates settle");
    cmd->add_option("--tolerance", spec.tolerance_deg, "convergence tolerance, degrees")->capture_default_str();
    cmd->add_option("--bound-tolerance", spec.bound_tolerance_deg, "allowed tilt overshoot when judging feasibility")
        ->capture_default_str();
    cmd->add_option("--initial-tilt", spec.initial_tilt_deg, "starting and linearisation tilt, degrees")
        ->capture_default_str();
    cmd->add_option("--utility", utility, "linear or log (P1 only)")
        ->check(CLI::IsMember({"linear", "log"}))
        ->capture_default_str();
    cmd->add_option("--rate-min", spec.rate_min_mbps, "minimum rate, Mbps (overrides the scenario)");
    cmd->add_flag("--distributed", spec.distributed, "run the message-passing agents instead");
    cmd->add_option("--drop-probability", spec.drop_probability, "per-message loss probability")
        ->capture_default_str();
    cmd->add_option("--interference-floor", spec.interference_floor, "report cut-off as a share of I+N")
        ->capture_default_str();
    cmd->add_option("--seed", spec.seed, "seed for noise, drops and fading")->capture_default_str();
    cmd->add_option("--samples", spec.samples, "fading samples per user")->capture_default_str();
    cmd->add_option("--grid-step", spec.grid_step_deg, "grid spacing, degrees")->capture_default_str();
    cmd->add_option("--out", spec.output_dir, "output directory");
}

int finish(const ExperimentResult& r, bool quiet)
{
    if (!quiet)
        std::cout << r.summary.dump(2) << '\n';
    const auto code = static_cast<int>(r.exit_code);
    if (r.exit_code == ExitCode::infeasible) {
        std::cerr << "infeasible:";
        if (r.summary.contains("feasibility"))
            for (const auto& v : r.summary["feasibility"]["violations"])
                std::cerr << "\n  " << v.get<std::string>();
        std::cerr << '\n';
    } else if (r.exit_code == ExitCode::diverged) {
        std::cerr << "diverged\n";
    }
    return code;
}

nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return nlohmann::json::parse(in);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"tiltopt: joint antenna tilt optimisation"};
    app.require_subcommand(1);

    ExperimentSpec spec;
    std::string kind = "optimize-P1";
    std::string utility = "linear";
    bool quiet = false;

    auto* run_cmd = app.add_subcommand("run", "run one experiment");
    run_cmd->add_option("--kind", kind, "experiment kind")
        ->check(CLI::IsMember({"optimize-P1", "optimize-P2", "fixed-tilt-baseline", "minrate-sweep",
                               "location-noise-sweep", "simo-mmse-eval", "grid-search-oracle"}))
        ->capture_default_str();
    add_spec_options(run_cmd, spec, utility);
    run_cmd->add_flag("--quiet", quiet, "do not print the summary");

    std::string sweep_kind = "minrate-sweep";
    auto* sweep_cmd = app.add_subcommand("sweep", "minimum-rate or location-noise sweep");
    sweep_cmd->add_option("--kind", sweep_kind, "sweep kind")
        ->check(CLI::IsMember({"minrate-sweep", "location-noise-sweep"}))
        ->capture_default_str();
    sweep_cmd->add_option("--values", spec.sweep_values, "swept values: r_min in Mbps or sigma in m")
        ->delimiter(',');
    sweep_cmd->add_option("--noise-seeds", spec.noise_seeds, "seeds per sigma")->capture_default_str();
    add_spec_options(sweep_cmd, spec, utility);
    sweep_cmd->add_flag("--quiet", quiet, "do not print the summary");

    std::string run_a, run_b, compare_out;
    auto* cmp_cmd = app.add_subcommand("compare", "compare two run summaries");
    cmp_cmd->add_option("run_a", run_a, "summary.json of the first run")->required();
    cmp_cmd->add_option("run_b", run_b, "summary.json of the second run")->required();
    cmp_cmd->add_option("--out", compare_out, "write the report here instead of stdout");

    std::string preset = "cluster", gen_out;
    std::uint64_t gen_seed = 1;
    int gen_users = 0;
    auto* gen_cmd = app.add_subcommand("gen-scenario", "write a built-in scenario to a file");
    gen_cmd->add_option("--preset", preset, "cluster, urban or pair")
        ->check(CLI::IsMember({"cluster", "urban", "pair"}))
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
    gen_cmd->add_option("--users", gen_users, "user count (urban)");
    gen_cmd->add_option("--out", gen_out, "output file")->required();

    std::string validate_path;
    auto* val_cmd = app.add_subcommand("validate", "check a scenario file");
    val_cmd->add_option("file", validate_path, "scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd || *sweep_cmd) {
            spec.kind = parse_experiment_kind(*run_cmd ? kind : sweep_kind);
            spec.utility = utility == "log" ? UtilitySpec::Kind::log : UtilitySpec::Kind::linear;
            return finish(run_experiment(spec), quiet);
        }
        if (*cmp_cmd) {
            const auto report = compare_runs(read_json(run_a), read_json(run_b));
            if (compare_out.empty()) {
                std::cout << report.dump(2) << '\n';
            } else {
                std::ofstream out(compare_out);
                out << report.dump(2) << '\n';
            }
            return 0;
        }
        if (*gen_cmd) {
            const Network net = resolve_scenario("builtin:" + preset, gen_seed, gen_users);
            save_scenario(net, std::filesystem::path(gen_out));
            std::cout << "wrote " << gen_out << " (" << net.num_sectors() << " sectors, " << net.num_users()
                      << " users)\n";
            return 0;
        }
        if (*val_cmd) {
            const Network net = load_scenario(validate_path);
            std::cout << validate_path << ": ok (" << net.num_sectors() << " sectors, " << net.num_users()
                      << " users)\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
