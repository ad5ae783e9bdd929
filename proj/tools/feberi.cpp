// Command-line front end: run, validate and list scenarios.

#include <chrono>
#include <iostream>

#include "CLI11.hpp"
#include "feberi/scenarios.hpp"

namespace {

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const feberi::ConfigError*>(&e)) return 2;
    return 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resonant excitation of a two-level system by free-electron wavepackets"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int jobs = 1;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "Run a scenario and write its result bundle");
    run->add_option("config", config_path, "Scenario configuration (INI)")->required();
    run->add_option("--jobs", jobs, "Worker threads for independent sweep points")->check(CLI::PositiveNumber);
    auto* seed_opt = run->add_option("--seed", seed, "Override the configured seed");
    run->add_option("--out", out_dir, "Override the configured output directory");

    auto* val = app.add_subcommand("validate", "Check a configuration without running it");
    val->add_option("config", config_path, "Scenario configuration (INI)")->required();

    auto* list = app.add_subcommand("scenarios", "List built-in scenarios");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& s : feberi::scenario_catalog()) std::cout << s.name << "\n    " << s.summary << "\n";
        return 0;
    }

    feberi::ScenarioConfig cfg;
    try {
        cfg = feberi::parse_config_file(config_path);
    } catch (const feberi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        if (val->parsed()) std::cout << "invalid\n  error: " << e.what() << "\n";
        return 2;
    }

    if (val->parsed()) {
        try {
            const feberi::ValidationReport rep = feberi::validate(cfg);
            std::cout << (rep.valid() ? "valid" : "invalid") << "\n";
            for (const auto& e : rep.errors) std::cout << "  error: " << e << "\n";
            for (const auto& w : rep.warnings) std::cout << "  warning: " << w << "\n";
            for (const auto& n : rep.notes) std::cout << "  note: " << n << "\n";
            return rep.valid() ? 0 : 2;
        } catch (const std::exception& e) {
            std::cout << "invalid\n  error: " << e.what() << "\n";
            return 2;
        }
    }

    if (seed_opt->count() > 0) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    try {
        const auto start = std::chrono::steady_clock::now();
        std::cerr << "running " << feberi::to_string(cfg.scenario) << " with " << jobs << " job(s)\n";
        const feberi::ResultBundle b = feberi::run_scenario(cfg, {jobs, &std::cerr});
        feberi::write_bundle(b, cfg.output_dir);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cerr << "wrote " << cfg.output_dir << " in " << secs << " s\n";
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        std::cerr << (code == 2 ? "config error: " : "numerical failure: ") << e.what() << "\n";
        return code;
    }
    return 0;
}
