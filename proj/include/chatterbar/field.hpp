#pragma once

#include "chatterbar/extremal.hpp"
#include "chatterbar/modal.hpp"
#include "chatterbar/profile.hpp"
#include "chatterbar/sturm_liouville.hpp"

#include <Eigen/Core>
#include <span>
#include <vector>

namespace chatterbar {

/// y(t, x) = sum_j s_j(t) h_j(x) on a time grid and a (possibly strided)
/// copy of the basis grid. Rows of `y` are time levels.
struct FieldSolution {
    std::vector<double> t_grid;
    std::vector<double> x_grid;
    Eigen::MatrixXd y;
    std::vector<double> u_trace;
    std::vector<double> switch_times;
    /// sum_j C_j h_j on x_grid: the part of f / p the truncated modes carry.
    std::vector<double> projected_force;
    std::size_t x_stride = 1;
};

/// Exact modal sum on every `x_stride`-th basis node (both ends are always
/// kept, so the stride must divide the number of intervals). `s_rows[i]`
/// holds s_1..s_N at t_grid[i]; `u_trace` may be empty (u = 0).
FieldSolution reconstruct(const SpectralBasis& basis, std::span<const std::vector<double>> s_rows,
                          std::span<const double> t_grid, std::span<const double> u_trace = {},
                          std::span<const double> switch_times = {}, std::size_t x_stride = 1);

/// Modal amplitudes and control of a trajectory at `n_intervals + 1` uniform
/// times on [0, T], by cubic Hermite interpolation of the recorded samples
/// (s and ds/dt = omega tau). The control is taken right-continuous.
struct UniformSamples {
    std::vector<double> t;
    std::vector<std::vector<double>> s;
    std::vector<double> u;
};
UniformSamples resample_uniform(const Trajectory& trajectory, const ModalPlant& plant,
                                std::size_t n_intervals);

struct ResidualReport {
    double l2 = 0.0;            // discrete L2(Q_T) norm over evaluated interior points
    double max = 0.0;
    /// ||u (p sum_j C_j h_j - f)||: what remains at h -> 0 with N modes.
    double truncation_floor = 0.0;
    /// ||r - u (p sum C_j h_j - f)||: the finite-difference part, O(h^2).
    double discretization = 0.0;
    std::size_t evaluated_rows = 0;
    std::size_t masked_rows = 0;  // stencils straddling a control switch
};

/// r = p y_tt - (k y_x)_x - u f by second-order central differences on the
/// interior of uniform grids. Time levels whose three-point stencil contains
/// a switch are skipped: there y_tt jumps and the equation holds only almost
/// everywhere. Throws Error{resolution} with fewer than 4 interior points in
/// either direction and Error{domain} for non-uniform grids.
ResidualReport pde_residual(const FieldSolution& field, const CoefficientProfile& profile);

struct BoundaryInitialReport {
    double boundary = 0.0;              // max |y(t, 0)|, |y(t, l)|
    double initial_displacement = 0.0;  // max_x |y(0, x) - y0(x)|
    double initial_velocity = 0.0;      // max_x |y_t(0, x) - y1(x)|, one-sided O(h_t^2)
};

/// `data` is sampled on the full basis grid; the field's stride selects the
/// matching nodes. Requires t_grid to start at 0 with at least 3 levels.
BoundaryInitialReport check_boundary_initial(const FieldSolution& field, const InitialData& data);

/// sum_{j > n_kept} |a_j| max_x |h_j(x)|: a bound on the sup-norm error of
/// keeping only the first n_kept terms of sum_j a_j h_j (within the modes the
/// basis holds).
double projection_tail_sup(const SpectralBasis& basis, std::span<const double> coefficients,
                           std::size_t n_kept);

/// Composite Simpson double integral of p(x) y(t, x)^2 over Q_T.
double physical_cost(const FieldSolution& field, const CoefficientProfile& profile);

}  // namespace chatterbar
