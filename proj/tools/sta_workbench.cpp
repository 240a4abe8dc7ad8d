// sta-workbench: batch front-end for the counter-diabatic qubit workbench.
//
//   sta-workbench <fields|eigenenergies|populations|moments|qgt|verify> --config <path> [--plot] [--workers N]
//
// Exit codes: 0 success, 1 criterion failure, 2 config error, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sta/acceptance.hpp"
#include "sta/commands.hpp"
#include "sta/config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCriterion = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

int run_verify(const sta::RunConfig& cfg, const std::filesystem::path& dir) {
    sta::AcceptanceSuite suite(cfg);
    const auto results = suite.run_all([](const sta::CriterionResult& r) {
        std::cout << sta::format_result_line(r) << std::endl;
    });
    sta::ensure_directory(dir);
    sta::verify_report(results).write(dir / "verify_report.csv");
    bool all = true;
    for (const auto& r : results) all = all && r.passed;
    std::cout << (all ? "all criteria passed" : "some criteria failed") << '\n';
    return all ? kExitOk : kExitCriterion;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counter-diabatic qubit work-statistics workbench"};
    std::string command;
    std::string config_path;
    bool plot = false;
    int workers = 1;
    app.add_option("command", command, "fields | eigenenergies | populations | moments | qgt | verify")
        ->required()
        ->check(CLI::IsMember({"fields", "eigenenergies", "populations", "moments", "qgt", "verify"}));
    app.add_option("--config", config_path, "flat key = value configuration file")->required();
    app.add_flag("--plot", plot, "also write an SVG line chart next to each CSV");
    app.add_option("--workers", workers, "concurrent sweep cells")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        const auto cfg = sta::load_config(config_path);
        const auto dir = sta::output_directory(cfg);
        if (command == "verify") return run_verify(cfg, dir);
        const auto files = sta::build_command(command, cfg, workers);
        for (const auto& p : sta::write_outputs(files, dir, plot)) std::cout << p.string() << '\n';
        return kExitOk;
    } catch (const sta::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const sta::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const sta::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
