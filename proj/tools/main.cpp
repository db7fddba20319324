#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tamesde/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Tamed explicit Euler simulator for jump SDEs with "
                 "super-linear coefficients"};
    app.require_subcommand(1);

    std::string config_file, preset;
    tamesde::CliOverrides overrides;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "config file (dotted-key text)");
        sub->add_option("--preset", preset,
                        "builtin preset: table1-desk | table1-full");
        sub->add_option("--seed", overrides.seed, "master seed override");
        sub->add_option("--paths", overrides.paths, "path count override");
        sub->add_option("--threads", overrides.threads,
                        "worker threads (never affects results)");
        sub->add_option("--out", overrides.out, "output file (default stdout)");
    };

    CLI::App* converge = app.add_subcommand(
        "converge", "coupled strong-error table and rate fit");
    add_common(converge);

    long long sim_n = 64;
    std::uint64_t sim_path_index = 0;
    bool zero_noise = false;
    CLI::App* simulate =
        app.add_subcommand("simulate", "dump one trajectory as CSV");
    add_common(simulate);
    simulate->add_option("--n", sim_n, "steps per unit time (default 64)");
    simulate->add_option("--path-index", sim_path_index,
                         "which driving path to integrate (default 0)");
    simulate->add_flag("--zero-noise", zero_noise,
                       "integrate the deterministic skeleton (dW = 0, no jumps)");

    CLI::App* moments = app.add_subcommand(
        "moments", "sup-over-grid moment probe across step counts");
    add_common(moments);

    CLI::App* audit =
        app.add_subcommand("audit", "numerical assumption audits");
    add_common(audit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        const tamesde::RunConfig cfg =
            tamesde::load_cli_config(config_file, preset, overrides);
        if (converge->parsed()) return tamesde::cmd_converge(cfg);
        if (simulate->parsed())
            return tamesde::cmd_simulate(cfg, sim_n, sim_path_index, zero_noise);
        if (moments->parsed()) return tamesde::cmd_moments(cfg);
        if (audit->parsed()) return tamesde::cmd_audit(cfg);
        std::fprintf(stderr, "error: no subcommand\n");
        return 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
