// Command line front end for the random-access detection laboratory.
//
// Each subcommand runs one scenario.  Settings come from an optional key=value
// config file, then --seed/--out, then repeatable --override flags (last one
// wins).  Outputs land in the --out directory next to a manifest.json that
// records the merged configuration.

#include <exception>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ralab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation laboratory for early preamble detection"};
    app.require_subcommand(1);

    const std::vector<ralab::Scenario> scenarios = {
        ralab::Scenario::train_denoiser, ralab::Scenario::eval_denoiser,
        ralab::Scenario::detect_once,    ralab::Scenario::sweep_snr,
        ralab::Scenario::sweep_m,        ralab::Scenario::throughput,
        ralab::Scenario::dynamic_groups, ralab::Scenario::bench_time,
        ralab::Scenario::oracle_checks,
    };
    const std::map<ralab::Scenario, std::string> descriptions = {
        {ralab::Scenario::train_denoiser, "train the denoising layer and save its parameters"},
        {ralab::Scenario::eval_denoiser, "evaluate a saved denoising layer on a fresh corpus"},
        {ralab::Scenario::detect_once, "run every configured detector on a single frame"},
        {ralab::Scenario::sweep_snr, "sweep SNR and tabulate detection metrics"},
        {ralab::Scenario::sweep_m, "sweep the number of active devices"},
        {ralab::Scenario::throughput, "sweep SNR and report throughput statistics"},
        {ralab::Scenario::dynamic_groups, "sweep SNR with two independently drawn device groups"},
        {ralab::Scenario::bench_time, "time each detector on a fixed frame"},
        {ralab::Scenario::oracle_checks, "run the numerical self checks and exit nonzero on failure"},
    };

    struct SubState {
        ralab::Scenario scenario;
        std::string config_path;
        std::string seed;
        std::string out;
        std::vector<std::string> overrides;
    };
    std::vector<std::shared_ptr<SubState>> states;

    for (const ralab::Scenario scenario : scenarios) {
        auto state = std::make_shared<SubState>();
        state->scenario = scenario;
        states.push_back(state);
        CLI::App* sub =
            app.add_subcommand(ralab::scenario_name(scenario), descriptions.at(scenario));
        sub->add_option("--config", state->config_path, "key=value config file");
        sub->add_option("--seed", state->seed, "base seed (unsigned integer)");
        sub->add_option("--out", state->out, "output directory");
        sub->add_option("--override", state->overrides, "extra key=value setting (repeatable)");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& state : states) {
            const std::string name = ralab::scenario_name(state->scenario);
            if (!app.get_subcommand(name)->parsed()) continue;
            std::map<std::string, std::string> entries;
            if (!state->config_path.empty())
                entries = ralab::read_config_file(state->config_path);
            if (!state->seed.empty()) entries["seed"] = state->seed;
            if (!state->out.empty()) entries["out"] = state->out;
            for (const std::string& assignment : state->overrides)
                ralab::apply_override(entries, assignment);
            const ralab::ExperimentConfig cfg = ralab::make_config(state->scenario, entries);
            return ralab::run(cfg, entries);
        }
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 2;
    }
    return 0;
}
