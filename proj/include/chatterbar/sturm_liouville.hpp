#pragma once

#include "chatterbar/profile.hpp"

#include <array>
#include <string>
#include <vector>

namespace chatterbar {

struct SpectralMode {
    double lambda = 0.0;
    double omega = 0.0;      // sqrt(lambda)
    std::vector<double> h;   // eigenfunction on the basis grid, h(0) = h(l) = 0
    double C = 0.0;          // (f, h) without the p weight
    double c = 0.0;          // C / omega
};

/// Dirichlet eigenpairs of (k h')' + lambda p h = 0 on a uniform grid,
/// normalized so that the p-weighted Simpson integral of h^2 is one and
/// h'(0) > 0.
struct SpectralBasis {
    std::vector<double> grid;
    double spacing = 0.0;
    std::vector<double> weight_p;
    std::vector<SpectralMode> modes;

    std::size_t size() const { return modes.size(); }
    double length() const { return grid.back(); }
    std::vector<double> lambdas() const;
    std::vector<double> omegas() const;
    std::vector<double> force_coefficients() const;  // C_j
    std::vector<double> scaled_force() const;        // c_j
    /// Copy restricted to the first n modes.
    SpectralBasis truncated(std::size_t n) const;
};

struct EigenOptions {
    /// Refine each Richardson estimate by Pruefer-angle shooting.
    bool shooting_refinement = true;
    double lambda_rel_tol = 1e-12;
};

/// Solves for the first `n_modes` eigenpairs. `grid_size` is the number of
/// nodes including both ends and must be at least 20 * n_modes + 1.
/// Eigenfunctions are shot at the converged eigenvalue and C_j = (f, h_j) is
/// filled in without validity checks (see project_force for the checked form).
SpectralBasis solve_eigenpairs(const CoefficientProfile& profile, int n_modes, int grid_size,
                               const EigenOptions& options = {});

/// The lowest `count` eigenvalues of the second-order finite-difference
/// generalized eigenproblem with `intervals` uniform intervals.
std::vector<double> fd_eigenvalues(const CoefficientProfile& profile, int intervals, int count);

/// pi^2 (int_0^l sqrt(p/k) dx)^-2, the limit of lambda_j / j^2.
double eigenvalue_asymptote(const CoefficientProfile& profile);

struct SpectralCertificate {
    double asymptote = 0.0;       // lambda_n / n^2 for the highest computed n
    double gap_delta = 0.0;       // min_j omega_{j+1} - omega_j
    double growth_K = 0.0;        // max_j omega_j / j
    double decay_bound = 0.0;     // max_j |C_j| j^4
    double cj_omega4_tail = 0.0;  // sum_j (c_j omega_j^4)^2

    bool gap_ok() const { return gap_delta > 0.0; }
};

SpectralCertificate certify_spectrum(const SpectralBasis& basis);

/// Relative cutoff below which a force coefficient counts as zero.
inline constexpr double kZeroForceThreshold = 1e-10;

struct ForceProjection {
    std::vector<double> C;
    std::vector<int> zero_indices;  // 1-based modes with |C_j| below the cutoff
    bool warning() const { return !zero_indices.empty(); }
};

/// C_j = int_0^l f h_j dx by Simpson on the basis grid. Throws
/// Error{degenerate_force} if f vanishes on the whole grid.
ForceProjection project_force(const CoefficientProfile& profile, const SpectralBasis& basis);

struct DecayReport {
    std::vector<double> scaled;     // |C_j| j^4
    std::vector<int> zero_indices;  // excluded from the verdict
    /// f^(i)(0) and f^(i)(l), i = 0..3, estimated from a one-sided fit.
    std::array<double, 4> endpoint_left{};
    std::array<double, 4> endpoint_right{};
    bool hypothesis_ok = true;  // endpoint conditions hold numerically
    bool bounded = false;       // max_{j>=5} <= 3 * median_{j>=5}
    double tail_max = 0.0;
    double tail_median = 0.0;
    std::vector<std::string> warnings;

    /// The verdict is only meaningful when the endpoint hypotheses hold.
    bool reliable() const { return hypothesis_ok; }
};

DecayReport check_force_decay(const CoefficientProfile& profile, const SpectralBasis& basis);

}  // namespace chatterbar
