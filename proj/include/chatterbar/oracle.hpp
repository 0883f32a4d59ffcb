#pragma once

#include "chatterbar/extremal.hpp"
#include "chatterbar/modal.hpp"
#include "chatterbar/schedule.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace chatterbar {

/// Exact rotation of every mode about its equilibrium (c_j u / omega_j, 0)
/// over dt (dt may be negative).
ModalState propagate_interval(const ModalState& state, double u, double dt);

/// int_0^dt sum_j s_j(t)^2 dt along the exact rotation.
double interval_cost(const ModalState& state, double u, double dt);

struct IntervalRecord {
    double t0 = 0.0;
    double t1 = 0.0;
    double u = 0.0;
    double cost = 0.0;
};

struct ScheduleEvaluation {
    ModalState final_state;
    double cost = 0.0;
    std::vector<IntervalRecord> intervals;
    /// sum_j (s_j^2 + tau_j^2) / 2 at the horizon: the average running cost of
    /// the free oscillation beyond it.
    double tail_cost_rate = 0.0;
};

ScheduleEvaluation evaluate_schedule(const ModalState& state0, const ControlSchedule& schedule);

/// Exact modal states at the requested (nondecreasing) times.
std::vector<ModalState> sample_schedule(const ModalState& state0, const ControlSchedule& schedule,
                                        std::span<const double> times);

struct OptimizerOptions {
    int starts = 8;
    std::uint64_t seed = 1;
    int max_sweeps = 200;           // coordinate-descent sweeps per start
    double rel_tol = 1e-12;         // sweep converged when no time moves more than this (relative to its bracket)
    bool singular_tail = true;      // trailing u = 0 arc after a free entry time
    bool grid_search = true;        // exhaustive grid for K <= 3
    long grid_budget = 4'000'000;   // max schedules per sign in the grid search
    int grid_steps = 2000;          // nominal resolution horizon / grid_steps
    bool polish = true;             // Newton polish of H1(t_i) = 0 after descent
};

struct OptimizationResult {
    ControlSchedule schedule;
    double cost = 0.0;
    /// Quad-precision cost minus `cost`: past a few chattering switches the
    /// improvement per extra switch is below one ulp of the cost.
    double cost_lo = 0.0;
    /// Cost decrease relative to the K-1 member of a family, from the
    /// quad-precision costs (0 for the first member).
    double cost_gain = 0.0;
    int n_switches = 0;
    int sweeps = 0;
    bool stagnated = false;
    bool from_grid = false;
};

/// Best alternating bang schedule with `n_switches` sign changes.
OptimizationResult optimize_switch_times(const ModalState& state0, int n_switches, double horizon,
                                         const OptimizerOptions& options = {},
                                         const OptimizationResult* previous = nullptr);

/// Results for K = 0..max_switches, each seeded from its predecessor so the
/// cost column is nonincreasing.
std::vector<OptimizationResult> optimize_family(const ModalState& state0, int max_switches,
                                                double horizon,
                                                const OptimizerOptions& options = {});

/// Default horizon: 20 periods of the slowest mode.
double default_horizon(const ModalState& state);

struct AdjointEstimate {
    ExtremalState z0;                 // psi(0) with the initial modal state
    std::vector<double> switch_times; // every interior switch including the singular entry
    std::vector<double> h1_at_switch;
    double h1_max = 0.0;              // max |H1| along the trajectory
    std::vector<int> violations;      // switch indices with |H1| > tol * h1_max
    std::vector<int> arc_violations;  // arcs with |u| < 1 on which H1 is not ~0
    double tolerance = 1e-4;

    bool stationary() const { return violations.empty() && arc_violations.empty(); }
};

/// Backward integration of the adjoint system from psi(T) = 0 along the
/// exact schedule trajectory.
AdjointEstimate discrete_adjoint(const ModalState& state0, const ControlSchedule& schedule,
                                 double tolerance = 1e-4);

}  // namespace chatterbar
