#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"

int main(int argc, char** argv) {
    using namespace qlert::cli;

    CLI::App app{"qlert: quasilinear conduction solver, limit sweeps, oracles and monotonicity tomography"};
    std::string command, config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("command", command, "solve | sweep | oracle | tomo")
        ->required()
        ->check(CLI::IsMember({"solve", "sweep", "oracle", "tomo"}));
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    auto* seed_opt = app.add_option("--seed", seed, "noise seed (overrides task.tomo.seed)");
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 256));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const Command cmd = parse_command(command);
        const RunConfig cfg = load_config(config_path, cmd);
        RunOptions opt;
        opt.out = out_dir;
        opt.threads = threads;
        if (*seed_opt) opt.seed = seed;
        return run_command(cfg, opt, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "qlert: " << e.what() << '\n';
        return exit_code_for(e);
    }
}
