// Command-line driver: run, validate and ladder over INI configurations or
// shipped scenario presets.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pflow/errors.hpp"
#include "pflow/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generalized porous-medium flows with gradient-flow checks"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::string> out;
    std::optional<int> store_every;
    std::optional<unsigned long long> seed;
    for (auto* sub : {app.add_subcommand("run", "integrate and check, write CSV artifacts"),
                      app.add_subcommand("validate", "clause report for the model hypotheses"),
                      app.add_subcommand("ladder", "refinement study over verify.refinement_factors")}) {
        sub->add_option("config", config, "config file or scenario name")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--store-every", store_every, "store every N-th step")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "seed for randomized probe sets");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    pflow::RunConfig cfg;
    try {
        cfg = pflow::load_config(config);
    } catch (const pflow::ParseError& e) {
        std::cerr << config << ": " << e.what() << '\n';
        return 2;
    }
    if (out) cfg.output_dir = *out;
    if (store_every) cfg.time.store_every = *store_every;
    if (seed) cfg.verify.seed = *seed;

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "run") return pflow::cmd_run(cfg, std::cout);
        if (cmd == "validate") return pflow::cmd_validate(cfg, std::cout);
        return pflow::cmd_ladder(cfg, std::cout);
    } catch (const pflow::ParseError& e) {
        std::cerr << config << ": " << e.what() << '\n';
        return 2;
    } catch (const pflow::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
