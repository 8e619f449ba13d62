/**
 * @file poroplate.cpp
 * @brief Command-line driver: poroplate <command> --config FILE [--out DIR] [--strict].
 */
#include <CLI11.hpp>

#include <iostream>

#include "poroplate/app.hpp"

int main(int argc, char** argv) {
    using namespace poroplate;
    CLI::App app{"Poroelastic plate laboratory: slab and limit solvers, thickness sweeps and verification"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    bool strict = false;
    for (const auto& [cmd, name] : command_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " command");
        sub->add_option("-c,--config", config_path, "INI configuration file (defaults apply when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--out", out_dir, "output directory (overrides [output] directory)");
        sub->add_flag("--strict", strict, "exit with status 1 when any acceptance verdict fails");
    }
    CLI11_PARSE(app, argc, argv);

    try {
        const std::string name = app.get_subcommands().front()->get_name();
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const auto& [cmd, n] : command_names())
            if (n == name) cfg.command = cmd;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        const auto root = resolve_output_dir(cfg);
        const RunResult res = run(cfg, root, std::clog);
        for (const auto& v : res.verdicts) std::cout << v.line() << "\n";
        std::clog << res.files.size() << " files written below " << root.string() << "\n";
        return strict && !res.all_pass() ? 1 : 0;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
