#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "degen/classifier.hpp"
#include "degen/config.hpp"
#include "degen/models.hpp"
#include "degen/runner.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_runtime = 2;

degen::ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw degen::ConfigError("<file>", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return degen::parse_config_text(ss.str());
}

int report(const degen::Error& e) {
    std::cerr << degen::error_record(e).dump() << "\n";
    return e.code() == degen::ErrorCode::ConfigError ? exit_config : exit_runtime;
}

int list_models() {
    std::printf("%-8s %-12s %10s %10s  %s\n", "name", "verdict", "alpha_bar", "beta_bar", "coefficients");
    for (const auto& e : degen::models::catalog()) {
        degen::ClassificationReport r = degen::classify(e.model);
        std::printf("%-8s %-12s %10.6f %10.6f  %s\n", e.name.c_str(), degen::to_string(r.verdict), r.alpha_bar,
                    r.beta_bar, e.description.c_str());
    }
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degenerate-boundary perturbation laboratory"};
    app.require_subcommand(1);
    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment config and write its artifacts");
    run->add_option("config", config_path, "Path to the JSON config")->required();
    auto* validate = app.add_subcommand("validate", "Parse and validate a config without running it");
    validate->add_option("config", config_path, "Path to the JSON config")->required();
    auto* list = app.add_subcommand("list-models", "Print the built-in models with their classification");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }
    try {
        if (list->parsed()) return list_models();
        degen::ExperimentConfig cfg = load(config_path);
        if (validate->parsed()) {
            std::cout << "ok " << degen::sha256_hex(cfg.to_json_text()) << "\n";
            return exit_ok;
        }
        if (run->parsed()) {
            degen::RunResult r = degen::run_experiment(cfg);
            std::cout << r.output_dir.string() << "\n";
            return exit_ok;
        }
    } catch (const degen::Error& e) {
        return report(e);
    } catch (const std::exception& e) {
        std::cerr << degen::json{{"error", "RuntimeError"}, {"message", e.what()}}.dump() << "\n";
        return exit_runtime;
    }
    return exit_runtime;
}
