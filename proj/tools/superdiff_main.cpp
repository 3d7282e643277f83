#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "superdiff/lab.hpp"

namespace {

void print_checks(const superdiff::lab::Report& report) {
    for (const auto& c : report.checks)
        std::cout << (c.pass ? "[pass] " : "[FAIL] ") << c.name << ": target " << c.target
                  << ", obtained " << c.obtained
                  << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
    for (const auto& [name, value] : report.scalars)
        std::cout << "  " << name << " = " << value << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superdiff: simulation and estimation toolkit for measure-valued "
                 "branching diffusions"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::size_t replicas = 0;
    std::string out_dir;
    int threads = 0;
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--replicas", replicas, "override the config replica count");
    app.add_option("--out", out_dir, "output directory (report.json, tables/*.csv)");
    app.add_option("--threads", threads, "worker-pool cap (also SUPERDIFF_THREADS)");

    std::string run_config, validate_config_path, reproduce_name;
    auto* run_cmd = app.add_subcommand("run", "run one experiment config");
    run_cmd->add_option("config", run_config, "experiment config JSON")->required();
    auto* rep_cmd = app.add_subcommand("reproduce", "run a catalog example's check bundle");
    rep_cmd->add_option("name", reproduce_name, "catalog example name")->required();
    auto* list_cmd = app.add_subcommand("list-examples", "list catalog example names");
    auto* val_cmd = app.add_subcommand("validate", "validate a config against the schema");
    val_cmd->add_option("config", validate_config_path, "experiment config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    if (threads > 0) setenv("SUPERDIFF_THREADS", std::to_string(threads).c_str(), 1);

    superdiff::lab::Overrides overrides;
    if (app.count("--seed")) overrides.seed = seed;
    if (app.count("--replicas")) overrides.replicas = replicas;
    if (!out_dir.empty()) overrides.output_dir = out_dir;

    try {
        if (list_cmd->parsed()) {
            for (const auto& name : superdiff::lab::list_examples()) std::cout << name << "\n";
            return 0;
        }
        if (val_cmd->parsed()) {
            std::ifstream is(validate_config_path);
            if (!is) {
                std::cerr << "error: cannot open " << validate_config_path << "\n";
                return 1;
            }
            nlohmann::json config;
            try {
                is >> config;
            } catch (const nlohmann::json::parse_error& err) {
                std::cerr << "config error: invalid JSON: " << err.what() << "\n";
                return 1;
            }
            superdiff::lab::validate_config(config);
            std::cout << "ok\n";
            return 0;
        }
        if (run_cmd->parsed()) {
            const auto result = superdiff::lab::run_experiment_file(run_config, overrides);
            print_checks(result.report);
            std::cout << (result.exit_code == 0 ? "ok" : "tolerance check failed") << " ("
                      << result.report.wall_seconds << "s)\n";
            return result.exit_code;
        }
        if (rep_cmd->parsed()) {
            const auto result = superdiff::lab::reproduce(reproduce_name, overrides);
            print_checks(result.report);
            std::cout << (result.exit_code == 0 ? "all checks pass" : "some checks failed")
                      << " (" << result.report.wall_seconds << "s)\n";
            return result.exit_code;
        }
    } catch (const superdiff::lab::SchemaError& err) {
        std::cerr << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
