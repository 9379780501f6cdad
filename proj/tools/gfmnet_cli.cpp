// gfmnet <command> --config <path> [--out <dir>] [--set key=value ...]

#include <gfmnet/gfmnet.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Small-signal analysis of hybrid AC/DC networks with dual-port grid-forming converters"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> sets;
    std::optional<gfmnet::Command> command;

    const std::pair<gfmnet::Command, const char*> commands[] = {
        {gfmnet::Command::Poles, "closed-loop poles with structural tags"},
        {gfmnet::Command::Bode, "frequency response per channel"},
        {gfmnet::Command::Step, "discretized step response"},
        {gfmnet::Command::Steady, "steady-state deviations and load sharing"},
        {gfmnet::Command::Sweep, "parameter grid: stability and resonance peaks"},
        {gfmnet::Command::Spectrum, "FFT magnitude of a step response"},
        {gfmnet::Command::Check, "network assumptions and gain-bound checks"},
    };
    for (const auto& [c, help] : commands) {
        auto* sub = app.add_subcommand(std::string(gfmnet::command_name(c)), help);
        sub->add_option("--config,-c", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out,-o", out_dir, "output directory (overrides the config)");
        sub->add_option("--set,-s", sets, "parameter override key=value, key as JSON pointer or dotted path");
        sub->callback([c, &command] { command = c; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        std::vector<std::pair<std::string, std::string>> kv;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0)
                gfmnet::fail(gfmnet::ErrorCode::ValidationError, "--set expects key=value, got '" + s + "'");
            kv.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        gfmnet::RunConfig cfg = gfmnet::load_config(config_path, kv, command);
        if (!out_dir.empty()) cfg.out = out_dir;
        const int rc = gfmnet::run(cfg);
        if (rc == 0) std::cout << "wrote " << cfg.out << "/manifest.json\n";
        return rc;
    } catch (const gfmnet::Error& e) {
        const int rc = gfmnet::is_validation_error(e.code()) ? 1 : 2;
        std::cerr << "error: " << gfmnet::code_name(e.code()) << ": " << e.detail() << "\n";
        // config errors: record them where the run would have written
        if (!out_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(out_dir, ec);
            std::ofstream f(std::filesystem::path(out_dir) / "error.json");
            f << gfmnet::json{{"code", gfmnet::code_name(e.code())}, {"category", rc == 1 ? "validation" : "numeric"},
                              {"message", e.detail()}, {"exit_status", rc}}.dump(2)
              << "\n";
        }
        return rc;
    }
}
