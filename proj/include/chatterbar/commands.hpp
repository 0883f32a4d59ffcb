#pragma once

#include "chatterbar/scenario.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace chatterbar {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitWarning = 2;

struct CommandResult {
    int exit_code = kExitOk;
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> files;
};

/// basis.csv (j, lambda, omega, C, c), basis_grid.csv (x, h_1..h_N) and
/// certificate.json. Returns kExitWarning when a force coefficient vanishes
/// or the spectral gap is not positive.
CommandResult run_eigen(const Scenario& scenario);

/// trajectory.csv, chattering_report.json, field_summary.json and
/// (optionally) field.csv.
CommandResult run_simulate(const Scenario& scenario);

/// cost_vs_k.csv and schedules.json for K = 0..max_switches.
CommandResult run_optimize(const Scenario& scenario);

/// Dispatches on "eigen", "simulate" or "optimize"; errors are reported on
/// stderr and mapped to kExitError.
int run_command(const std::string& name, const Scenario& scenario);

}  // namespace chatterbar
