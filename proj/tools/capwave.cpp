// Command-line front end: run configs, aggregate manifests, and drive the
// diagnostic campaigns. Exit code 0 means every check passed.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "capwave/runner.hpp"

namespace {

bool print_checks(const std::vector<capwave::CheckResult>& checks) {
    bool ok = true;
    for (const auto& c : checks) {
        std::printf("  %s  %-28s measured=%-12.6g", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.measured);
        if (!std::isnan(c.expected)) std::printf(" expected=%-12.6g", c.expected);
        std::printf(" tol=%g\n", c.tolerance);
        ok = ok && c.pass;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral vortex-sheet lab for deep-water capillary waves"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Execute one run from a config file");
    run_cmd->add_option("config", config_path, "key = value config file")->required();

    std::vector<std::string> manifests;
    auto* report_cmd = app.add_subcommand("report", "Aggregate manifests into a pass/fail table");
    report_cmd->add_option("manifests", manifests, "manifest.json paths")->required();

    int kmax = 4;
    std::string disp_root = "runs";
    auto* disp_cmd =
        app.add_subcommand("dispersion", "Measure oscillation frequencies of modes 1..kmax");
    disp_cmd->add_option("--kmax", kmax, "highest mode");
    disp_cmd->add_option("--output-root", disp_root, "output root directory");

    unsigned seed = 1;
    auto* ops_cmd = app.add_subcommand("operators-test", "Singular-operator oracle battery");
    ops_cmd->add_option("--seed", seed, "seed for the random draws");

    int gain_k = 1;
    auto* gain_cmd = app.add_subcommand("gain", "Gain-of-regularity refinement campaign");
    gain_cmd->add_option("--k", gain_k, "diagnostic order (1 or 2)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const capwave::RunConfig cfg = capwave::load_config(config_path);
            const capwave::RunManifest man = capwave::run(cfg);
            std::printf("run %s [%s]\n", man.directory.c_str(), man.termination.c_str());
            if (man.termination != "completed")
                std::printf("  abort at t=%g value=%g: %s\n", man.abort_time, man.abort_value,
                            man.abort_detail.c_str());
            const bool checks_ok = print_checks(man.checks);
            return (man.termination == "completed" && checks_ok) ? 0 : 1;
        }
        if (*report_cmd) {
            const capwave::ReportSummary sum = capwave::report(manifests);
            std::fputs(sum.text.c_str(), stdout);
            return sum.all_pass ? 0 : 1;
        }
        if (*disp_cmd) {
            const auto checks = capwave::dispersion_campaign(kmax, disp_root);
            std::printf("dispersion campaign, modes 1..%d\n", kmax);
            return print_checks(checks) ? 0 : 1;
        }
        if (*ops_cmd) {
            const auto checks = capwave::operators_test(seed);
            std::printf("operator battery, seed %u\n", seed);
            return print_checks(checks) ? 0 : 1;
        }
        if (*gain_cmd) {
            const auto checks = capwave::gain_campaign(gain_k);
            std::printf("gain campaign, k = %d\n", gain_k);
            return print_checks(checks) ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
