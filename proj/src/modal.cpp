#include "chatterbar/modal.hpp"

#include "chatterbar/error.hpp"
#include "chatterbar/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace chatterbar {

InitialData InitialData::sample(std::span<const double> grid, const ScalarFunction& y0,
                                const ScalarFunction& y1)
{
    InitialData out;
    double peak = 0.0;
    for (double x : grid) {
        out.y0.push_back(y0(x));
        out.y1.push_back(y1(x));
        peak = std::max(peak, std::abs(out.y0.back()));
    }
    const double tol = 1e-12 * std::max(peak, 1.0);
    if (std::abs(out.y0.front()) > tol || std::abs(out.y0.back()) > tol) {
        throw Error(ErrorCode::domain,
                    fmt::format("initial displacement must vanish at clamped ends (y0(0) = {}, "
                                "y0(l) = {})",
                                out.y0.front(), out.y0.back()));
    }
    return out;
}

InitialData InitialData::mode(const SpectralBasis& basis, int j, double amplitude)
{
    if (j < 1 || static_cast<std::size_t>(j) > basis.size()) {
        throw Error(ErrorCode::dimension, fmt::format("mode {} not present in basis", j));
    }
    InitialData out;
    for (double v : basis.modes[static_cast<std::size_t>(j - 1)].h) {
        out.y0.push_back(amplitude * v);
    }
    out.y1.assign(out.y0.size(), 0.0);
    return out;
}

InitialData InitialData::zero(std::size_t nodes)
{
    return InitialData{std::vector<double>(nodes, 0.0), std::vector<double>(nodes, 0.0)};
}

ScalarFunction parabola(double length, double amplitude)
{
    return [length, amplitude](double x) { return amplitude * x * (length - x); };
}

void ModalState::validate() const
{
    const auto n = s.size();
    if (tau.size() != n || omega.size() != n || c.size() != n) {
        throw Error(ErrorCode::dimension, "modal state blocks differ in length");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!(omega[j] > 0.0) || (j > 0 && !(omega[j] > omega[j - 1]))) {
            throw Error(ErrorCode::spectral_positivity,
                        "omega must be positive and strictly increasing");
        }
    }
}

ModalProjection project_initial_data(const InitialData& data, const SpectralBasis& basis)
{
    const auto nodes = basis.grid.size();
    if (data.y0.size() != nodes || data.y1.size() != nodes) {
        throw Error(ErrorCode::dimension,
                    fmt::format("initial data has {}/{} samples, basis grid has {}",
                                data.y0.size(), data.y1.size(), nodes));
    }
    ModalProjection out;
    std::vector<double> a(nodes), b(nodes);
    for (const auto& mode : basis.modes) {
        for (std::size_t i = 0; i < nodes; ++i) {
            const double w = basis.weight_p[i] * mode.h[i];
            a[i] = w * data.y0[i];
            b[i] = w * data.y1[i];
        }
        out.alpha.push_back(quad::simpson(a, basis.spacing));
        out.beta.push_back(quad::simpson(b, basis.spacing));
    }
    return out;
}

ModalState rescale(std::span<const double> alpha, std::span<const double> beta,
                   std::span<const double> C, std::span<const double> lambda)
{
    const auto n = alpha.size();
    if (beta.size() != n || C.size() != n || lambda.size() != n) {
        throw Error(ErrorCode::dimension, "rescale: argument lengths differ");
    }
    ModalState out;
    for (std::size_t j = 0; j < n; ++j) {
        if (!(lambda[j] > 0.0)) {
            throw Error(ErrorCode::spectral_positivity,
                        fmt::format("lambda_{} = {} is not positive", j + 1, lambda[j]));
        }
        const double w = std::sqrt(lambda[j]);
        out.omega.push_back(w);
        out.s.push_back(alpha[j]);
        out.tau.push_back(beta[j] / w);
        out.c.push_back(C[j] / w);
    }
    return out;
}

UnscaledModal unrescale(const ModalState& state)
{
    UnscaledModal out;
    for (std::size_t j = 0; j < state.size(); ++j) {
        const double w = state.omega[j];
        out.alpha.push_back(state.s[j]);
        out.beta.push_back(state.tau[j] * w);
        out.C.push_back(state.c[j] * w);
        out.lambda.push_back(w * w);
    }
    return out;
}

double modal_cost(std::span<const double> times, std::span<const std::vector<double>> s,
                  std::span<const std::vector<double>> sdot)
{
    if (times.empty()) {
        throw Error(ErrorCode::domain, "modal_cost: empty trajectory");
    }
    if (s.size() != times.size() || sdot.size() != times.size()) {
        throw Error(ErrorCode::dimension, "modal_cost: sample counts differ");
    }
    // 4-point Gauss-Legendre integrates the squared cubic exactly.
    static constexpr double nodes[4] = {-0.8611363115940526, -0.3399810435848563,
                                        0.3399810435848563, 0.8611363115940526};
    static constexpr double weights[4] = {0.3478548451374538, 0.6521451548625461,
                                          0.6521451548625461, 0.3478548451374538};
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        const double h = times[i + 1] - times[i];
        if (h < 0.0) {
            throw Error(ErrorCode::domain, "modal_cost: times must be nondecreasing");
        }
        if (h == 0.0) continue;
        const auto& y0 = s[i];
        const auto& y1 = s[i + 1];
        const auto& f0 = sdot[i];
        const auto& f1 = sdot[i + 1];
        double interval = 0.0;
        for (int q = 0; q < 4; ++q) {
            const double u = 0.5 * (nodes[q] + 1.0);
            const double u2 = u * u, u3 = u2 * u;
            const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
            const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
            double sum = 0.0;
            for (std::size_t j = 0; j < y0.size(); ++j) {
                const double v = h00 * y0[j] + h10 * h * f0[j] + h01 * y1[j] + h11 * h * f1[j];
                sum += v * v;
            }
            interval += 0.5 * weights[q] * sum;
        }
        total += h * interval;
    }
    return total;
}

double truncation_tail(std::span<const double> alpha, std::span<const double> beta,
                       std::span<const double> omega, std::size_t n_kept)
{
    const auto m = alpha.size();
    if (beta.size() != m || omega.size() != m) {
        throw Error(ErrorCode::dimension, "truncation_tail: argument lengths differ");
    }
    if (m <= n_kept) {
        throw Error(ErrorCode::domain,
                    fmt::format("truncation_tail needs M = {} > N = {}", m, n_kept));
    }
    double tail = 0.0;
    for (std::size_t j = n_kept; j < m; ++j) {
        const double b = beta[j] / omega[j];
        tail += alpha[j] * alpha[j] + b * b;
    }
    return tail;
}

std::size_t choose_truncation(std::span<const double> alpha, std::span<const double> beta,
                              std::span<const double> omega, double rel_target,
                              std::size_t max_modes)
{
    const auto m = alpha.size();
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double b = beta[j] / omega[j];
        total += alpha[j] * alpha[j] + b * b;
    }
    const std::size_t limit = std::min(max_modes, m > 1 ? m - 1 : m);
    for (std::size_t n = 1; n <= limit; ++n) {
        if (n >= m || truncation_tail(alpha, beta, omega, n) <= rel_target * total) {
            return n;
        }
    }
    return limit;
}

}  // namespace chatterbar
