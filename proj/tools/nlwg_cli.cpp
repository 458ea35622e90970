// nlwg: command-line runner for the waveguide experiments.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nlwg/experiments.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
    std::string figure;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--out", o.out, "output directory (overrides config 'output')");
    cmd->add_option("--set", o.sets, "override a config key, e.g. --set waveguide.nonlinearity=4")->take_all();
}

int fail(const std::string& kind, const std::string& message) {
    std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
    return kind == "validation" ? 2 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spins coupled to a Kerr-nonlinear phononic waveguide: band structure, pair decay, "
                 "subradiance and collective radiance experiments"};
    app.require_subcommand(1);

    Options o;
    const std::map<std::string, std::string> commands{
        {"band", "band"},           {"corr", "correlation"}, {"decay", "decay"},       {"subradiance", "subradiance"},
        {"lindblad", "lindblad"},   {"dicke", "dicke"},      {"grouped", "grouped"},   {"feasibility", "feasibility"}};
    const std::map<std::string, std::string> help{
        {"band", "bound-state band vs two-phonon exact diagonalization"},
        {"corr", "two-phonon correlation f_K(r) and pair rate tensors"},
        {"decay", "full spin + lattice decay with exponential fit"},
        {"subradiance", "pair master equation with dark-state analysis"},
        {"lindblad", "pair master equation for the configured spins"},
        {"dicke", "Dicke-ladder supercorrelated radiance / superradiance"},
        {"grouped", "grouped superradiance at positions [0,0,4,4]"},
        {"feasibility", "physical-units report for a diamond beam"}};
    std::map<CLI::App*, std::string> which;
    for (const auto& [name, experiment] : commands) {
        auto* cmd = app.add_subcommand(name, help.at(name));
        add_common(cmd, o);
        which[cmd] = experiment;
    }
    auto* repro = app.add_subcommand("reproduce", "reproduce a figure's data set (fig2..fig8)");
    repro->add_option("figure", o.figure, "fig2..fig8")->required()->check(
        CLI::IsMember({"fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"}));
    add_common(repro, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("validation", e.what());
    }

    std::string experiment;
    for (const auto& [cmd, name] : which)
        if (cmd->parsed()) experiment = name;
    if (repro->parsed()) experiment = o.figure;

    try {
        std::optional<std::filesystem::path> file;
        if (!o.config.empty()) file = o.config;
        auto sets = o.sets;
        if (!o.out.empty()) sets.push_back("output=" + nlohmann::json(o.out).dump());
        const auto cfg = nlwg::resolve_config(experiment, file, sets);
        const auto res = nlwg::run(experiment, cfg);
        std::cout << nlohmann::json{{"status", "complete"},
                                    {"experiment", experiment},
                                    {"output", res.output.string()},
                                    {"files", res.files},
                                    {"summary", res.summary}}
                         .dump(2)
                  << "\n";
    } catch (const nlwg::Error& e) {
        return fail(e.kind(), e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
