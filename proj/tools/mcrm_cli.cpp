#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mcrm/scenario.hpp"

namespace {

int run_command(const std::string& scenario_path, const std::string& report_path, const std::string& format,
                double override_tol, int override_trials) {
    mcrm::Scenario scenario = mcrm::parse_scenario(scenario_path);
    for (auto& check : scenario.checks) {
        if (override_tol > 0.0) check.tol = override_tol;
        if (override_trials > 0) check.trials = override_trials;
    }
    const mcrm::Report report = mcrm::run(scenario);
    mcrm::ReportFormat fmt = mcrm::ReportFormat::Json;
    if (format == "text") fmt = mcrm::ReportFormat::Text;
    if (format == "csv") fmt = mcrm::ReportFormat::Csv;
    mcrm::emit(report, fmt, report_path);
    return report.all_matched() ? 0 : 1;
}

int validate_command(const std::string& scenario_path) {
    const mcrm::Scenario scenario = mcrm::parse_scenario(scenario_path);
    std::cout << "ok: " << scenario.digest << " (" << scenario.checks.size() << " checks, "
              << scenario.crms.size() << " risk measures, " << scenario.families.size() << " families)\n";
    return 0;
}

int demo_command(const std::string& kind, const std::string& out_path) {
    const std::string text = mcrm::demo_scenario(kind);
    if (out_path.empty()) {
        std::cout << text << "\n";
        return 0;
    }
    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "error: cannot open '" << out_path << "'\n";
        return 2;
    }
    out << text << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-space engine for consistent multivariate conditional risk measures"};
    app.require_subcommand(1);

    std::string scenario_path, report_path, format = "json", demo_kind, demo_out;
    double override_tol = -1.0;
    int override_trials = -1;

    auto* run_cmd = app.add_subcommand("run", "run the checks of a scenario file");
    run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run_cmd->add_option("--report", report_path, "report output path (stdout when omitted)");
    run_cmd->add_option("--format", format, "json, text or csv")
        ->check(CLI::IsMember({"json", "text", "csv"}));
    run_cmd->add_option("--override-tol", override_tol, "override every check tolerance");
    run_cmd->add_option("--override-trials", override_trials, "override every check trial count");

    auto* validate_cmd = app.add_subcommand("validate", "parse and build a scenario without running checks");
    validate_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();

    auto* demo_cmd = app.add_subcommand("demo", "emit a ready-made scenario");
    demo_cmd->add_option("kind", demo_kind, "spatial, dynamic or cce")->required();
    demo_cmd->add_option("--out", demo_out, "output path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return run_command(scenario_path, report_path, format, override_tol, override_trials);
        if (validate_cmd->parsed()) return validate_command(scenario_path);
        return demo_command(demo_kind, demo_out);
    } catch (const mcrm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
