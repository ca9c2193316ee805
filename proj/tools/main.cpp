// Command-line driver. Every subcommand fills one RunConfig and hands it to
// run(), which owns all file output. Exit codes: 0 success, 1 a solver module
// threw (the error name lands in report.json), 2 bad configuration.
#include <cstdio>
#include <exception>

#include "CLI11.hpp"
#include "multibump/report.hpp"

int main(int argc, char** argv) {
    multibump::RunConfig cfg;

    CLI::App app{
        "Segregated multi-bump solver for linearly coupled Schrodinger "
        "systems: ground state, coupling corrections, interaction constants, "
        "ring landscapes, and assembled 3D fields."};
    app.require_subcommand(1);
    app.set_config("--config");
    app.fallthrough();

    app.add_option("--epsilon", cfg.epsilon, "coupling strength");
    app.add_option("--epsilons", cfg.epsilons,
                   "strictly decreasing coupling ladder (verify-scaling)")
        ->delimiter(',');
    app.add_option("--ell", cfg.ell, "bumps per ring");
    app.add_option("--mu", cfg.mu, "window margin parameter");
    app.add_option("--system", cfg.system, "two or three components")
        ->check(CLI::IsMember({"two", "three"}));
    app.add_option("--r-max", cfg.r_max, "radial grid extent");
    app.add_option("--radial-n", cfg.radial_n, "radial grid nodes");
    app.add_option("--grid-n", cfg.grid_n, "box nodes per axis (assemble)");
    app.add_option("--landscape-n", cfg.landscape_n,
                   "landscape samples per axis");
    app.add_option("--output-dir", cfg.output_dir, "report and artifact root");

    app.add_subcommand("ground-state",
                       "solve the scalar ground-state profile");
    app.add_subcommand("corrections",
                       "build the coupling-power correction family");
    app.add_subcommand("constants", "measure the interaction constants");
    app.add_subcommand("landscape", "tabulate the reduced energy landscape");
    app.add_subcommand("optimize", "locate the landscape maximizer");
    app.add_subcommand("assemble", "sample the multi-bump ansatz on a box");
    app.add_subcommand("verify-scaling",
                       "check residual and radius scaling laws");
    app.add_subcommand("three-system",
                       "three-component battery across ring sizes");
    app.add_subcommand("coefficient-table",
                       "predicted vs fitted radius coefficients");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    cfg.mode = app.get_subcommands().front()->get_name();

    try {
        return multibump::run(cfg);
    } catch (const multibump::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fatal: %s\n", e.what());
        return 1;
    }
}
