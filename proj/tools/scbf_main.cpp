#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "scbf/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Stochastic Brinkman-Forchheimer data assimilation toolkit"};
    app.set_version_flag("--version", std::string(scbf::kVersion));
    app.require_subcommand(1);
    std::string config_path;
    const char* names[] = {"check", "simulate-truth", "assimilate", "ensemble", "estimate-c0", "fit"};
    const char* help[] = {"evaluate nudging thresholds (exit 2 if no guarantee applies)",
                          "run the truth system and write truth.csv",
                          "run the truth/assimilated pair and write trajectory.csv + summary.json",
                          "run a Monte Carlo ensemble and write ensemble.csv + ensemble.json",
                          "estimate the interpolant constant c0",
                          "fit a decay rate to a CSV column"};
    for (int i = 0; i < 6; ++i) {
        auto* sub = app.add_subcommand(names[i], help[i]);
        sub->add_option("config", config_path, "JSON run configuration")->required();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : scbf::kExitConfig;
    }
    return scbf::run_command(app.get_subcommands().front()->get_name(), config_path, std::cout, std::cerr);
}
