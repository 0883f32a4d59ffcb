#include "chatterbar/commands.hpp"
#include "chatterbar/error.hpp"
#include "chatterbar/scenario.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <optional>
#include <utility>

int main(int argc, char** argv)
{
    CLI::App app{"Spectral optimal control of a clamped nonhomogeneous bar"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> modes;
    std::optional<double> horizon;

    const std::pair<const char*, const char*> commands[] = {
        {"eigen", "Solve the eigenproblem and certify the spectrum"},
        {"simulate", "Run a schedule or feedback extremal and rebuild the field"},
        {"optimize", "Optimize bang-bang schedules for K = 0..max_switches"},
    };
    for (const auto& [name, help] : commands) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
        cmd->add_option("--out", out, "Output directory");
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_option("--modes", modes, "Number of retained modes");
        cmd->add_option("--horizon", horizon, "Time horizon T");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : chatterbar::kExitError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    chatterbar::Scenario scenario;
    try {
        scenario = chatterbar::load_scenario(scenario_path);
        if (out) scenario.output = *out;
        if (seed) scenario.seed = *seed;
        if (modes) scenario.n_modes = *modes;
        if (horizon) {
            if (!(*horizon > 0.0)) {
                throw chatterbar::Error(chatterbar::ErrorCode::config,
                                        fmt::format("horizon must be positive (got {})", *horizon));
            }
            scenario.horizon = *horizon;
        }
        chatterbar::validate_scenario(scenario);
    } catch (const std::exception& e) {
        fmt::print(stderr, "chatterbar: error: {}\n", e.what());
        return chatterbar::kExitError;
    }
    return chatterbar::run_command(command, scenario);
}
