#include "chatterbar/sturm_liouville.hpp"

#include "chatterbar/error.hpp"
#include "chatterbar/ode.hpp"
#include "chatterbar/quadrature.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>

namespace chatterbar {

namespace {

std::vector<double> uniform_grid(double length, int nodes)
{
    std::vector<double> x(static_cast<std::size_t>(nodes));
    const double h = length / (nodes - 1);
    for (int i = 0; i < nodes; ++i) {
        x[static_cast<std::size_t>(i)] = h * i;
    }
    x.back() = length;
    return x;
}

/// Symmetric tridiagonal form P^{-1/2} A P^{-1/2} of the FD operator.
struct Tridiagonal {
    std::vector<double> diag;
    std::vector<double> off;  // off[i] couples i and i+1
};

Tridiagonal fd_operator(const CoefficientProfile& profile, int intervals)
{
    const double h = profile.length / intervals;
    const int n = intervals - 1;
    Tridiagonal t;
    t.diag.resize(static_cast<std::size_t>(n));
    t.off.resize(static_cast<std::size_t>(std::max(n - 1, 0)));
    std::vector<double> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        p[static_cast<std::size_t>(i)] = profile.p(h * (i + 1));
    }
    for (int i = 0; i < n; ++i) {
        const double x = h * (i + 1);
        const double k_minus = profile.k(x - 0.5 * h);
        const double k_plus = profile.k(x + 0.5 * h);
        t.diag[static_cast<std::size_t>(i)] =
            (k_minus + k_plus) / (h * h * p[static_cast<std::size_t>(i)]);
        if (i + 1 < n) {
            t.off[static_cast<std::size_t>(i)] =
                -k_plus /
                (h * h * std::sqrt(p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i + 1)]));
        }
    }
    return t;
}

/// Number of eigenvalues strictly below x (Sturm sequence via LDL^T).
int sturm_count(const Tridiagonal& t, double x)
{
    int count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < t.diag.size(); ++i) {
        const double e2 = i == 0 ? 0.0 : t.off[i - 1] * t.off[i - 1];
        q = t.diag[i] - x - (i == 0 ? 0.0 : e2 / q);
        if (q == 0.0) {
            q = -1e-300;
        }
        if (q < 0.0) {
            ++count;
        }
    }
    return count;
}

std::vector<double> tridiagonal_eigenvalues(const Tridiagonal& t, int count)
{
    double upper = 0.0;
    for (std::size_t i = 0; i < t.diag.size(); ++i) {
        const double left = i == 0 ? 0.0 : std::abs(t.off[i - 1]);
        const double right = i < t.off.size() ? std::abs(t.off[i]) : 0.0;
        upper = std::max(upper, t.diag[i] + left + right);
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j) {
        double lo = out.empty() ? 0.0 : out.back();
        double hi = upper;
        for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (sturm_count(t, mid) >= j) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push_back(0.5 * (lo + hi));
    }
    return out;
}

/// Pruefer angle theta(l) for the trial eigenvalue.
double pruefer_angle(const CoefficientProfile& profile, double lambda)
{
    auto rhs = [&](double x, const ode::Vector& y) {
        const double s = std::sin(y[0]);
        const double c = std::cos(y[0]);
        ode::Vector d(1);
        d[0] = c * c / profile.k(x) + lambda * profile.p(x) * s * s;
        return d;
    };
    const double end[] = {profile.length};
    const ode::Tolerances tol{1e-14, 1e-14};
    const auto out = ode::integrate_to(rhs, 0.0, ode::Vector::Zero(1), end, tol,
                                       profile.length / (20.0 * (1.0 + std::sqrt(lambda))));
    return out.front()[0];
}

double refine_by_shooting(const CoefficientProfile& profile, int j, double estimate,
                          double rel_tol)
{
    const double target = j * std::numbers::pi;
    auto g = [&](double lambda) { return pruefer_angle(profile, lambda) - target; };

    double width = 1e-6 * estimate;
    double lo = estimate - width;
    double hi = estimate + width;
    double g_lo = g(lo);
    double g_hi = g(hi);
    for (int expand = 0; expand < 40 && g_lo * g_hi > 0.0; ++expand) {
        width *= 4.0;
        if (g_lo > 0.0) {
            lo = std::max(estimate - width, 0.5 * lo);
            g_lo = g(lo);
        } else {
            hi = estimate + width;
            g_hi = g(hi);
        }
    }
    if (g_lo * g_hi > 0.0) {
        throw ConvergenceError(j, fmt::format("eigenvalue bracketing failed for mode {}", j));
    }
    if (g_lo == 0.0) {
        return lo;
    }
    if (g_hi == 0.0) {
        return hi;
    }

    std::uintmax_t max_iter = 200;
    auto stop = [rel_tol](double a, double b) { return std::abs(b - a) <= rel_tol * std::abs(b); };
    const auto [a, b] =
        boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, stop, max_iter);
    if (max_iter >= 200) {
        throw ConvergenceError(j, fmt::format("eigenvalue refinement did not converge for mode {}", j));
    }
    return 0.5 * (a + b);
}

/// Shoots (h, k h') from x = 0 with k h'(0) = 1 and samples h on the grid.
std::vector<double> shoot_eigenfunction(const CoefficientProfile& profile, double lambda,
                                        const std::vector<double>& grid, int j)
{
    auto rhs = [&](double x, const ode::Vector& y) {
        ode::Vector d(2);
        d[0] = y[1] / profile.k(x);
        d[1] = -lambda * profile.p(x) * y[0];
        return d;
    };
    ode::Vector y0(2);
    y0 << 0.0, 1.0;
    const double amplitude = 1.0 / std::sqrt(lambda * profile.p_floor * profile.k_floor);
    const ode::Tolerances tol{1e-14 * amplitude, 1e-13};
    const auto states = ode::integrate_to(rhs, 0.0, y0, grid, tol, grid[1] - grid[0]);

    std::vector<double> h(grid.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        h[i] = states[i][0];
        peak = std::max(peak, std::abs(h[i]));
    }
    if (std::abs(h.back()) > 1e-6 * peak) {
        throw ConvergenceError(
            j, fmt::format("mode {}: shooting residual h(l) = {:.3e} relative to peak {:.3e}", j,
                           h.back(), peak));
    }
    h.front() = 0.0;
    h.back() = 0.0;
    return h;
}

void check_smoothness(const CoefficientProfile& profile, int intervals)
{
    auto slope_bound = [&](const ScalarFunction& fn, int n) {
        const double h = profile.length / n;
        double bound = 0.0;
        double prev = fn(0.0);
        for (int i = 1; i <= n; ++i) {
            const double cur = fn(h * i);
            bound = std::max(bound, std::abs(cur - prev) / h);
            prev = cur;
        }
        return bound;
    };
    for (const auto* fn : {&profile.p, &profile.k}) {
        const double coarse = slope_bound(*fn, intervals);
        const double fine = slope_bound(*fn, 2 * intervals);
        if (!std::isfinite(coarse) || !std::isfinite(fine)) {
            throw Error(ErrorCode::coefficient_positivity,
                        "coefficient derivative estimate is not finite");
        }
        // A jump of size J gives slope J/h, doubling under refinement.
        const double scale = 1.0 / profile.length;
        if (fine > 1.5 * coarse && fine > 1e-6 * scale) {
            throw Error(ErrorCode::coefficient_positivity,
                        "coefficient appears discontinuous (difference quotient grows under "
                        "refinement)");
        }
    }
}

}  // namespace

std::vector<double> SpectralBasis::lambdas() const
{
    std::vector<double> out;
    for (const auto& m : modes) out.push_back(m.lambda);
    return out;
}

std::vector<double> SpectralBasis::omegas() const
{
    std::vector<double> out;
    for (const auto& m : modes) out.push_back(m.omega);
    return out;
}

std::vector<double> SpectralBasis::force_coefficients() const
{
    std::vector<double> out;
    for (const auto& m : modes) out.push_back(m.C);
    return out;
}

std::vector<double> SpectralBasis::scaled_force() const
{
    std::vector<double> out;
    for (const auto& m : modes) out.push_back(m.c);
    return out;
}

SpectralBasis SpectralBasis::truncated(std::size_t n) const
{
    if (n == 0 || n > modes.size()) {
        throw Error(ErrorCode::dimension,
                    fmt::format("cannot truncate basis of {} modes to {}", modes.size(), n));
    }
    SpectralBasis out = *this;
    out.modes.resize(n);
    return out;
}

std::vector<double> fd_eigenvalues(const CoefficientProfile& profile, int intervals, int count)
{
    if (intervals < 2 || count < 1 || count > intervals - 1) {
        throw Error(ErrorCode::resolution,
                    fmt::format("fd_eigenvalues: {} intervals cannot resolve {} modes", intervals,
                                count));
    }
    return tridiagonal_eigenvalues(fd_operator(profile, intervals), count);
}

SpectralBasis solve_eigenpairs(const CoefficientProfile& profile, int n_modes, int grid_size,
                               const EigenOptions& options)
{
    if (n_modes < 1) {
        throw Error(ErrorCode::domain, "solve_eigenpairs: n_modes must be at least 1");
    }
    if (grid_size < 20 * n_modes + 1) {
        throw Error(ErrorCode::resolution,
                    fmt::format("grid of {} nodes cannot resolve {} modes (need >= {})",
                                grid_size, n_modes, 20 * n_modes + 1));
    }
    SpectralBasis basis;
    basis.grid = uniform_grid(profile.length, grid_size);
    basis.spacing = profile.length / (grid_size - 1);
    profile.validate(basis.grid);
    check_smoothness(profile, grid_size - 1);

    const int intervals = grid_size - 1;
    const auto coarse = fd_eigenvalues(profile, intervals, n_modes);
    const auto fine = fd_eigenvalues(profile, 2 * intervals, n_modes);

    basis.weight_p.reserve(basis.grid.size());
    for (double x : basis.grid) {
        basis.weight_p.push_back(profile.p(x));
    }

    std::vector<double> integrand(basis.grid.size());
    for (int j = 1; j <= n_modes; ++j) {
        const auto idx = static_cast<std::size_t>(j - 1);
        double lambda = (4.0 * fine[idx] - coarse[idx]) / 3.0;
        if (options.shooting_refinement) {
            lambda = refine_by_shooting(profile, j, lambda, options.lambda_rel_tol);
        }
        if (!(lambda > 0.0)) {
            throw ConvergenceError(j, fmt::format("mode {} produced non-positive eigenvalue", j));
        }

        SpectralMode mode;
        mode.lambda = lambda;
        mode.omega = std::sqrt(lambda);
        mode.h = shoot_eigenfunction(profile, lambda, basis.grid, j);
        for (std::size_t i = 0; i < integrand.size(); ++i) {
            integrand[i] = basis.weight_p[i] * mode.h[i] * mode.h[i];
        }
        const double norm = std::sqrt(quad::simpson(integrand, basis.spacing));
        for (double& v : mode.h) {
            v /= norm;
        }
        for (std::size_t i = 0; i < integrand.size(); ++i) {
            integrand[i] = profile.f(basis.grid[i]) * mode.h[i];
        }
        mode.C = quad::simpson(integrand, basis.spacing);
        mode.c = mode.C / mode.omega;
        basis.modes.push_back(std::move(mode));
    }
    return basis;
}

double eigenvalue_asymptote(const CoefficientProfile& profile)
{
    const double travel = quad::adaptive(
        [&](double x) { return std::sqrt(profile.p(x) / profile.k(x)); }, 0.0, profile.length,
        1e-12);
    return std::numbers::pi * std::numbers::pi / (travel * travel);
}

SpectralCertificate certify_spectrum(const SpectralBasis& basis)
{
    if (basis.size() < 2) {
        throw Error(ErrorCode::domain, "certify_spectrum needs at least two modes");
    }
    SpectralCertificate cert;
    const auto n = basis.size();
    cert.asymptote = basis.modes.back().lambda / static_cast<double>(n * n);
    cert.gap_delta = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = basis.modes[i];
        const double j = static_cast<double>(i + 1);
        if (i + 1 < n) {
            cert.gap_delta = std::min(cert.gap_delta, basis.modes[i + 1].omega - m.omega);
        }
        cert.growth_K = std::max(cert.growth_K, m.omega / j);
        cert.decay_bound = std::max(cert.decay_bound, std::abs(m.C) * j * j * j * j);
        const double w4 = m.c * std::pow(m.omega, 4);
        cert.cj_omega4_tail += w4 * w4;
    }
    return cert;
}

ForceProjection project_force(const CoefficientProfile& profile, const SpectralBasis& basis)
{
    std::vector<double> fvals(basis.grid.size());
    double fmax = 0.0;
    for (std::size_t i = 0; i < fvals.size(); ++i) {
        fvals[i] = profile.f(basis.grid[i]);
        fmax = std::max(fmax, std::abs(fvals[i]));
    }
    if (!(fmax > 0.0)) {
        throw Error(ErrorCode::degenerate_force, "force profile vanishes on the whole grid");
    }

    ForceProjection out;
    std::vector<double> integrand(fvals.size());
    for (const auto& mode : basis.modes) {
        for (std::size_t i = 0; i < integrand.size(); ++i) {
            integrand[i] = fvals[i] * mode.h[i];
        }
        out.C.push_back(quad::simpson(integrand, basis.spacing));
    }
    double cmax = 0.0;
    for (double c : out.C) cmax = std::max(cmax, std::abs(c));
    for (std::size_t j = 0; j < out.C.size(); ++j) {
        if (std::abs(out.C[j]) < kZeroForceThreshold * cmax) {
            out.zero_indices.push_back(static_cast<int>(j + 1));
        }
    }
    return out;
}

namespace {

/// Derivatives 0..3 of the degree-7 interpolant through eight equispaced
/// samples starting at `origin` and stepping by `step` (which may be negative).
std::array<double, 4> endpoint_derivatives(const ScalarFunction& f, double origin, double step)
{
    constexpr int points = 8;
    Eigen::Matrix<double, points, points> vander;
    Eigen::Matrix<double, points, 1> values;
    for (int r = 0; r < points; ++r) {
        double pow = 1.0;
        for (int c = 0; c < points; ++c) {
            vander(r, c) = pow;
            pow *= r;
        }
        values[r] = f(origin + step * r);
    }
    const Eigen::Matrix<double, points, 1> coeff = vander.fullPivLu().solve(values);
    std::array<double, 4> out{};
    double factorial = 1.0;
    for (int i = 0; i < 4; ++i) {
        if (i > 0) factorial *= i;
        out[static_cast<std::size_t>(i)] = factorial * coeff[i] / std::pow(step, i);
    }
    return out;
}

}  // namespace

DecayReport check_force_decay(const CoefficientProfile& profile, const SpectralBasis& basis)
{
    DecayReport report;
    const auto projection = project_force(profile, basis);
    report.zero_indices = projection.zero_indices;

    double fmax = 0.0;
    for (double x : basis.grid) fmax = std::max(fmax, std::abs(profile.f(x)));

    const double l = profile.length;
    const double step = 1e-3 * l;
    report.endpoint_left = endpoint_derivatives(profile.f, 0.0, step);
    report.endpoint_right = endpoint_derivatives(profile.f, l, -step);
    for (int i = 0; i < 4; ++i) {
        const double scale = fmax / std::pow(l, i);
        const double left = report.endpoint_left[static_cast<std::size_t>(i)];
        const double right = report.endpoint_right[static_cast<std::size_t>(i)];
        if (std::abs(left) > 1e-6 * scale || std::abs(right) > 1e-6 * scale) {
            report.hypothesis_ok = false;
            report.warnings.push_back(fmt::format(
                "endpoint condition violated: f^({})(0) = {:.3e}, f^({})(l) = {:.3e}", i, left,
                i, right));
        }
    }

    std::vector<double> tail;
    for (std::size_t idx = 0; idx < projection.C.size(); ++idx) {
        const double j = static_cast<double>(idx + 1);
        const double v = std::abs(projection.C[idx]) * j * j * j * j;
        report.scaled.push_back(v);
        const bool is_zero = std::find(report.zero_indices.begin(), report.zero_indices.end(),
                                       static_cast<int>(idx + 1)) != report.zero_indices.end();
        if (idx + 1 >= 5 && !is_zero) {
            tail.push_back(v);
        }
    }
    if (!report.zero_indices.empty()) {
        report.warnings.push_back(
            fmt::format("{} force coefficients vanish; excluded from the decay verdict",
                        report.zero_indices.size()));
    }
    if (tail.size() < 3) {
        report.warnings.push_back("fewer than three nonzero coefficients with j >= 5");
        report.bounded = false;
        return report;
    }
    report.tail_max = *std::max_element(tail.begin(), tail.end());
    std::vector<double> sorted = tail;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    report.tail_median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    report.bounded = report.tail_max <= 3.0 * report.tail_median;
    return report;
}

}  // namespace chatterbar
