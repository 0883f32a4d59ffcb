#pragma once

#include "chatterbar/extremal.hpp"
#include "chatterbar/field.hpp"
#include "chatterbar/modal.hpp"
#include "chatterbar/oracle.hpp"
#include "chatterbar/profile.hpp"
#include "chatterbar/schedule.hpp"
#include "chatterbar/sturm_liouville.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace chatterbar {

struct ProfileSpec {
    std::string builtin = "constant";  // constant | exponential | affine | csv
    std::filesystem::path csv;         // columns x, p, k, f
    double length = 3.14159265358979323846;
    double p0 = 1.0;
    double k0 = 1.0;
    double rate = 1.0;
    double slope = 1.0;
};

struct InitialSpec {
    std::string displacement = "zero";  // parabola | mode:j | zero | csv
    double amplitude = 1.0;
    std::string velocity = "zero";      // mode:j | zero
    double velocity_amplitude = 1.0;
    std::filesystem::path csv;          // columns x, y0, y1
};

enum class ControllerKind { feedback, schedule, optimize };

struct ControllerSpec {
    ControllerKind kind = ControllerKind::feedback;
    /// Feedback: explicit adjoint start, or estimated from the oracle.
    bool psi_from_oracle = false;
    std::vector<double> psi1;
    std::vector<double> psi2;
    int oracle_switches = 10;
    std::filesystem::path schedule_file;
    int max_switches = 10;
    /// Optimize: allow a trailing u = 0 arc after the last switch.
    bool singular_tail = true;
};

struct ToleranceSpec {
    double atol = 1e-10;
    double rtol = 1e-10;
    FeedbackTolerances feedback{};
    double chattering_floor = 0.0;  // <= 0: default floor
    double event_time = 1e-12;
    double adjoint = 1e-4;
};

struct FieldSpec {
    int time_intervals = 1000;
    int x_stride = 0;  // 0: about 100 exported intervals
    bool export_csv = true;
};

/// Everything a command needs, after defaults and CLI overrides.
struct Scenario {
    ProfileSpec profile;
    std::string force = "sine";  // sine | clamped_quartic | mode:j | zero | csv
    InitialSpec initial;
    int n_modes = 0;              // 0: smallest N with tail below tail_target
    int max_modes = 32;
    double tail_target = 1e-6;
    int grid_size = 0;            // 0: automatic
    double horizon = 0.0;         // 0: 20 periods of mode 1
    ControllerSpec controller;
    ToleranceSpec tolerances;
    FieldSpec field;
    std::filesystem::path output = "out";
    std::uint64_t seed = 1;
};

/// Parses a scenario document; relative paths resolve against `base_dir`.
/// Throws Error{config} on malformed or inconsistent input.
Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Checks value ranges (positive tolerances, horizon, counts).
void validate_scenario(const Scenario& scenario);

/// The shared front half of every command: basis, force projection,
/// initial data and the rescaled modal state.
struct Problem {
    CoefficientProfile profile;
    SpectralBasis basis;      // n kept modes
    SpectralBasis extended;   // max(n, max_modes) modes for tail estimates
    ModalProjection extended_projection;
    ForceProjection force;
    InitialData initial;
    ModalProjection projection;
    ModalState state;
    double horizon = 0.0;
    double truncation_tail = 0.0;  // energy of discarded modes (extended basis)
    double total_energy = 0.0;
};

Problem prepare_problem(const Scenario& scenario);

/// Schedule JSON: {horizon, leading_sign, switch_times, singular_entry?}.
/// A document with a "schedules" array yields its last entry.
ControlSchedule load_schedule(const std::filesystem::path& path);

}  // namespace chatterbar
