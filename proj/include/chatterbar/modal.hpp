#pragma once

#include "chatterbar/profile.hpp"
#include "chatterbar/sturm_liouville.hpp"

#include <span>
#include <vector>

namespace chatterbar {

/// Initial displacement y0 and velocity y1 sampled on a basis grid.
struct InitialData {
    std::vector<double> y0;
    std::vector<double> y1;

    /// Samples closed-form data on the grid; throws Error{domain} when y0
    /// does not vanish at both clamped ends.
    static InitialData sample(std::span<const double> grid, const ScalarFunction& y0,
                              const ScalarFunction& y1);
    /// amplitude * h_j for displacement, zero velocity.
    static InitialData mode(const SpectralBasis& basis, int j, double amplitude = 1.0);
    static InitialData zero(std::size_t nodes);
};

/// amplitude * x (l - x)
ScalarFunction parabola(double length, double amplitude);

struct ModalProjection {
    std::vector<double> alpha;  // (y0, h_j)_p
    std::vector<double> beta;   // (y1, h_j)_p
};

/// Rescaled first-order modal state: s_j, tau_j = s_j' / omega_j with the
/// forcing coefficients c_j = C_j / omega_j carried alongside.
struct ModalState {
    std::vector<double> s;
    std::vector<double> tau;
    std::vector<double> omega;
    std::vector<double> c;

    std::size_t size() const { return s.size(); }
    /// Throws Error{dimension} on length mismatch and Error{spectral_positivity}
    /// when omega is not positive and strictly increasing.
    void validate() const;
};

ModalProjection project_initial_data(const InitialData& data, const SpectralBasis& basis);

/// omega = sqrt(lambda), a = alpha, b = beta / omega, c = C / omega.
ModalState rescale(std::span<const double> alpha, std::span<const double> beta,
                   std::span<const double> C, std::span<const double> lambda);

/// Inverse of rescale: recovers (alpha, beta, C, lambda).
struct UnscaledModal {
    std::vector<double> alpha, beta, C, lambda;
};
UnscaledModal unrescale(const ModalState& state);

/// int_0^T sum_j s_j(t)^2 dt from samples with derivatives, integrating the
/// cubic Hermite interpolant on each interval exactly.
double modal_cost(std::span<const double> times, std::span<const std::vector<double>> s,
                  std::span<const std::vector<double>> sdot);

/// Energy sum_{j=N+1..M} (alpha_j^2 + (beta_j / omega_j)^2) of the discarded
/// modes. Requires M = alpha.size() > N.
double truncation_tail(std::span<const double> alpha, std::span<const double> beta,
                       std::span<const double> omega, std::size_t n_kept);

/// Smallest N <= max_modes whose tail is below rel_target of the total energy
/// (1 if the total energy vanishes).
std::size_t choose_truncation(std::span<const double> alpha, std::span<const double> beta,
                              std::span<const double> omega, double rel_target = 1e-6,
                              std::size_t max_modes = 32);

}  // namespace chatterbar
