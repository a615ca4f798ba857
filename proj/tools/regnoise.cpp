#include "regnoise/errors.hpp"
#include "regnoise/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace regnoise;

namespace {

struct Overrides {
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    bool dump_paths = false;
    std::optional<std::string> out;
};

ExperimentPlan load(const std::string& file, const Overrides& o) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentPlan plan = parse_config(ss.str());
    if (o.paths) {
        if (*o.paths < 1) throw ParseError("--paths", "must be >= 1");
        plan.ensemble.n_paths = *o.paths;
    }
    if (o.seed) plan.ensemble.master_seed = *o.seed;
    if (o.dump_paths) plan.dump_paths = true;
    if (o.out) plan.output_dir = *o.out;
    return plan;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--paths", o.paths, "number of paths");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_flag("--dump-paths", o.dump_paths, "write one trajectory CSV per path");
    cmd->add_option("--out", o.out, "output directory");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo experiments for SPDEs with nonlinear multiplicative noise"};
    app.require_subcommand(1);

    std::string config;
    Overrides sim_o, ens_o, chk_o;

    auto* simulate = app.add_subcommand("simulate", "run a single path and dump it");
    simulate->add_option("config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
    add_overrides(simulate, sim_o);

    auto* ensemble = app.add_subcommand("ensemble", "run the experiment's analyses");
    ensemble->add_option("config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
    add_overrides(ensemble, ens_o);

    auto* check = app.add_subcommand("check", "evaluate the assumption system only");
    check->add_option("config", config, "experiment JSON")->required()->check(CLI::ExistingFile);
    add_overrides(check, chk_o);

    std::string figure;
    std::uint64_t fig_seed = 1;
    std::string fig_out = ".";
    auto* fig = app.add_subcommand("figure", "emit sample-path data for fig1..fig5");
    fig->add_option("figure", figure, "fig1..fig5")->required();
    fig->add_option("--seed", fig_seed, "path seed");
    fig->add_option("--out", fig_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            const auto plan = load(config, sim_o);
            const auto rec = simulate_path(plan);
            std::cout << to_string(rec.status);
            if (rec.status != PathStatus::completed) std::cout << " at t = " << format_number(rec.event_time);
            std::cout << '\n';
            return 0;
        }
        if (*ensemble) {
            const auto plan = load(config, ens_o);
            const auto res = run_experiment(plan);
            for (const auto& o : res.outcomes)
                std::cout << to_string(o.analysis) << ": " << to_string(o.verdict) << " - " << o.summary << '\n';
            return res.exit_code;
        }
        if (*check) {
            const auto plan = load(config, chk_o);
            std::cout << conditions_json(plan) << '\n';
            return 0;
        }
        if (*fig) {
            const auto id = figure_from_string(figure);
            const auto rec = emit_figure_data(id, fig_seed, fig_out);
            std::cout << figure << ": " << to_string(rec.status);
            if (rec.status != PathStatus::completed) std::cout << " at t = " << format_number(rec.event_time);
            std::cout << '\n';
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
