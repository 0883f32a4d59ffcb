#pragma once

#include "chatterbar/modal.hpp"
#include "chatterbar/ode.hpp"
#include "chatterbar/schedule.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace chatterbar {

/// Frequencies omega_j and scaled force coefficients c_j of the truncated
/// modal system.
struct ModalPlant {
    Eigen::VectorXd omega;
    Eigen::VectorXd c;

    static ModalPlant from(const ModalState& state);
    static ModalPlant from(const SpectralBasis& basis);
    Eigen::Index size() const { return omega.size(); }
};

/// z = (psi1, psi2, s, tau), each block of length N.
struct ExtremalState {
    Eigen::VectorXd psi1;
    Eigen::VectorXd psi2;
    Eigen::VectorXd s;
    Eigen::VectorXd tau;

    static ExtremalState zero(Eigen::Index n);
    /// Adjoint blocks zero, state blocks from the modal state.
    static ExtremalState from(const ModalState& state);
    static ExtremalState unpack(const Eigen::VectorXd& flat);
    Eigen::VectorXd pack() const;
    Eigen::Index size() const { return s.size(); }
    void check(Eigen::Index n) const;
};

struct SwitchingValues {
    double H0 = 0.0;
    double H1 = 0.0;
    double H2 = 0.0;
    double H3 = 0.0;
    double H4 = 0.0;
    double H = 0.0;  // H0 + u H1 for the u it was evaluated with
};

enum class Regime { bang, singular };

const char* to_string(Regime regime) noexcept;

/// Right-hand side of the state/adjoint system. Throws Error{control_bound}
/// for |u| > 1.
ExtremalState extremal_rhs(const ExtremalState& z, double u, const ModalPlant& plant);

SwitchingValues switching_values(const ExtremalState& z, const ModalPlant& plant, double u);

/// d^4 H1 / dt^4 along the system with control u.
double switching_fourth_derivative(const ExtremalState& z, const ModalPlant& plant, double u);

struct SingularControl {
    double value = 0.0;
    bool saturated = false;  // |u0| > 1: the arc cannot stay singular
};

/// u0 = sum c w^3 (psi2 w + 2 s) / sum c^2 w^2. Throws Error{degenerate_force}
/// when the denominator vanishes.
SingularControl singular_control(const ExtremalState& z, const ModalPlant& plant);

struct FeedbackTolerances {
    double h1 = 1e-12;
    double h2 = 1e-12;
    double h3 = 1e-12;
    double h4 = 1e-12;
};

struct FeedbackDecision {
    double u = 0.0;
    Regime regime = Regime::bang;
    bool saturated = false;
};

/// u = sign(H1) off the switching surface; otherwise the sign of the first
/// H2..H4 above tolerance (the direction H1 leaves zero); on Sigma the
/// clamped singular control.
FeedbackDecision feedback_control(const ExtremalState& z, const ModalPlant& plant,
                                  const FeedbackTolerances& tol = {});

/// Point on Sigma = {H1 = H2 = H3 = H4 = 0}. Starting from `free_params`,
/// the adjoint entries psi2 and psi1 of the first two modes with nonzero
/// c_j are solved for; everything else is kept. Throws
/// Error{seed_construction} if fewer than two usable modes exist.
ExtremalState singular_seed(const ModalPlant& plant, const ExtremalState& free_params);

/// Orthogonal projection of (psi1, psi2) onto {H1 = ... = H4 = 0} with (s, tau)
/// fixed; least-squares when the affine set is empty (N = 1 away from s = tau = 0).
ExtremalState project_to_singular_surface(const ExtremalState& z, const ModalPlant& plant);

struct IntegrationOptions {
    ode::Tolerances tol{1e-10, 1e-10};
    FeedbackTolerances feedback{};
    /// Minimum switch interval before the run is projected onto Sigma;
    /// <= 0 selects 1e-6 * 2 pi / omega_N.
    double chattering_floor = 0.0;
    double event_time_tol = 1e-12;
    /// After at least three successively halving switch intervals, an
    /// interval that grows again means the unstable forward run has left
    /// the chattering sequence; project onto Sigma at the previous switch.
    bool latch_on_divergence = true;
    double max_step = 0.0;  // <= 0: unlimited
    long max_steps = 5'000'000;
};

struct TrajectorySample {
    double t = 0.0;
    ExtremalState z;
    double u = 0.0;
    Regime regime = Regime::bang;
    SwitchingValues H;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<double> switch_times;
    double cost = 0.0;  // int sum_j s_j^2 dt

    std::vector<double> times() const;
};

struct ChatteringReport {
    std::vector<double> switch_times;
    std::vector<double> interval_ratios;
    double accumulation_estimate = 0.0;
    std::optional<double> entered_singular_at;
    double singular_residual = 0.0;  // max |H_i| over the singular phase
    bool saturated = false;
    bool floor_reached = false;
    std::vector<std::string> flags;
};

struct ExtremalRun {
    Trajectory trajectory;
    ChatteringReport report;
};

/// Integrates the extremal system on [0, horizon] with the feedback law,
/// locating every sign change of H1 on the dense output.
ExtremalRun integrate_extremal(const ExtremalState& z0, const ModalPlant& plant, double horizon,
                               const IntegrationOptions& options = {});

/// Same system driven by a fixed piecewise-constant control.
ExtremalRun integrate_extremal(const ExtremalState& z0, const ModalPlant& plant,
                               const ControlSchedule& schedule,
                               const IntegrationOptions& options = {});

/// max_t |H(t) - H(t_0)| / (1 + |H(t_0)|), with t_0 the start of the
/// constant-control arc containing t (H evaluated with that arc's control):
/// the integration error alone.
double hamiltonian_drift(const Trajectory& trajectory);

/// Largest relative |du H1| / (1 + |H|) across a switch. It vanishes on an
/// extremal (H1 = 0 at every switch) and measures du H1 on a prescribed
/// schedule that is not stationary.
double hamiltonian_jump(const Trajectory& trajectory);

/// Ratio statistics over the last `count` entries: std / mean.
double ratio_spread(const std::vector<double>& ratios, std::size_t count = 3);

}  // namespace chatterbar
