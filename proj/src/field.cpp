#include "chatterbar/field.hpp"

#include "chatterbar/error.hpp"
#include "chatterbar/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace chatterbar {

namespace {

void require_uniform(std::span<const double> grid, const char* what)
{
    if (grid.size() < 2) return;
    const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (std::abs(grid[i] - grid[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h))) {
            throw Error(ErrorCode::domain, fmt::format("{} grid is not uniform", what));
        }
    }
}

double spacing_of(std::span<const double> grid)
{
    return (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
}

}  // namespace

FieldSolution reconstruct(const SpectralBasis& basis, std::span<const std::vector<double>> s_rows,
                          std::span<const double> t_grid, std::span<const double> u_trace,
                          std::span<const double> switch_times, std::size_t x_stride)
{
    const std::size_t n = basis.size();
    if (s_rows.size() != t_grid.size()) {
        throw Error(ErrorCode::dimension, "reconstruct: one modal row per time level expected");
    }
    if (!u_trace.empty() && u_trace.size() != t_grid.size()) {
        throw Error(ErrorCode::dimension, "reconstruct: u_trace length differs from t_grid");
    }
    const std::size_t intervals = basis.grid.size() - 1;
    if (x_stride == 0 || intervals % x_stride != 0) {
        throw Error(ErrorCode::dimension,
                    fmt::format("reconstruct: stride {} does not divide {} grid intervals",
                                x_stride, intervals));
    }

    FieldSolution out;
    out.t_grid.assign(t_grid.begin(), t_grid.end());
    out.x_stride = x_stride;
    for (std::size_t m = 0; m <= intervals; m += x_stride) out.x_grid.push_back(basis.grid[m]);
    const auto nx = static_cast<Eigen::Index>(out.x_grid.size());

    Eigen::MatrixXd h(static_cast<Eigen::Index>(n), nx);
    out.projected_force.assign(out.x_grid.size(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (Eigen::Index c = 0; c < nx; ++c) {
            const double v = basis.modes[j].h[static_cast<std::size_t>(c) * x_stride];
            h(static_cast<Eigen::Index>(j), c) = v;
            out.projected_force[static_cast<std::size_t>(c)] += basis.modes[j].C * v;
        }
    }

    Eigen::MatrixXd s(static_cast<Eigen::Index>(t_grid.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < s_rows.size(); ++i) {
        if (s_rows[i].size() != n) {
            throw Error(ErrorCode::dimension,
                        fmt::format("reconstruct: row {} has {} modes, basis has {}", i,
                                    s_rows[i].size(), n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s_rows[i][j];
        }
    }
    out.y = s * h;
    // the basis vanishes at the clamped ends; keep them exactly zero
    out.y.col(0).setZero();
    out.y.col(nx - 1).setZero();

    if (u_trace.empty()) {
        out.u_trace.assign(t_grid.size(), 0.0);
    } else {
        out.u_trace.assign(u_trace.begin(), u_trace.end());
    }
    out.switch_times.assign(switch_times.begin(), switch_times.end());
    return out;
}

UniformSamples resample_uniform(const Trajectory& trajectory, const ModalPlant& plant,
                                std::size_t n_intervals)
{
    const auto& samples = trajectory.samples;
    if (samples.size() < 2 || n_intervals == 0) {
        throw Error(ErrorCode::resolution, "resample_uniform: trajectory too short");
    }
    const double t0 = samples.front().t;
    const double t1 = samples.back().t;
    const auto n = static_cast<std::size_t>(plant.size());
    UniformSamples out;
    std::size_t k = 0;
    for (std::size_t i = 0; i <= n_intervals; ++i) {
        const double t = i == n_intervals
                             ? t1
                             : t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n_intervals);
        while (k + 2 < samples.size() && samples[k + 1].t <= t) ++k;
        const auto& a = samples[k];
        const auto& b = samples[k + 1];
        const double h = b.t - a.t;
        std::vector<double> row(n);
        if (h <= 0.0) {
            for (std::size_t j = 0; j < n; ++j) row[j] = b.z.s[static_cast<Eigen::Index>(j)];
        } else {
            const double x = std::clamp((t - a.t) / h, 0.0, 1.0);
            const double x2 = x * x, x3 = x2 * x;
            const double h00 = 2 * x3 - 3 * x2 + 1, h10 = x3 - 2 * x2 + x;
            const double h01 = -2 * x3 + 3 * x2, h11 = x3 - x2;
            for (std::size_t j = 0; j < n; ++j) {
                const auto e = static_cast<Eigen::Index>(j);
                const double w = plant.omega[e];
                row[j] = h00 * a.z.s[e] + h10 * h * w * a.z.tau[e] + h01 * b.z.s[e] +
                         h11 * h * w * b.z.tau[e];
            }
        }
        out.t.push_back(t);
        out.s.push_back(std::move(row));
        // the sample closing a step carries the control used on that step
        out.u.push_back(t >= t1 ? samples.back().u : (t < b.t ? b.u : samples[std::min(k + 2, samples.size() - 1)].u));
    }
    return out;
}

ResidualReport pde_residual(const FieldSolution& field, const CoefficientProfile& profile)
{
    const std::size_t nt = field.t_grid.size();
    const std::size_t nx = field.x_grid.size();
    if (nt < 6 || nx < 6) {
        throw Error(ErrorCode::resolution,
                    fmt::format("pde_residual: need at least 4 interior points per direction "
                                "(got {} x {} nodes)", nt, nx));
    }
    require_uniform(field.t_grid, "time");
    require_uniform(field.x_grid, "space");
    if (field.u_trace.size() != nt || field.projected_force.size() != nx ||
        static_cast<std::size_t>(field.y.rows()) != nt || static_cast<std::size_t>(field.y.cols()) != nx) {
        throw Error(ErrorCode::dimension, "pde_residual: field arrays do not match its grids");
    }
    const double ht = spacing_of(field.t_grid);
    const double hx = spacing_of(field.x_grid);

    std::vector<double> p(nx), f(nx), k_half(nx - 1);
    for (std::size_t m = 0; m < nx; ++m) {
        p[m] = profile.p(field.x_grid[m]);
        f[m] = profile.f(field.x_grid[m]);
    }
    for (std::size_t m = 0; m + 1 < nx; ++m) {
        k_half[m] = profile.k(0.5 * (field.x_grid[m] + field.x_grid[m + 1]));
    }

    ResidualReport out;
    double sum_r = 0.0, sum_floor = 0.0, sum_disc = 0.0;
    std::size_t next_switch = 0;
    const auto& sw = field.switch_times;
    for (std::size_t i = 1; i + 1 < nt; ++i) {
        const double lo = field.t_grid[i - 1];
        const double hi = field.t_grid[i + 1];
        while (next_switch < sw.size() && sw[next_switch] <= lo) ++next_switch;
        // a switch strictly inside (t_{i-1}, t_{i+1}], or on a node where the
        // control differs from its neighbours, breaks the stencil
        const bool straddles = next_switch < sw.size() && sw[next_switch] < hi;
        if (straddles || field.u_trace[i - 1] != field.u_trace[i] ||
            field.u_trace[i] != field.u_trace[i + 1]) {
            ++out.masked_rows;
            continue;
        }
        ++out.evaluated_rows;
        const double u = field.u_trace[i];
        const auto r0 = static_cast<Eigen::Index>(i - 1);
        const auto r1 = static_cast<Eigen::Index>(i);
        const auto r2 = static_cast<Eigen::Index>(i + 1);
        for (std::size_t m = 1; m + 1 < nx; ++m) {
            const auto c = static_cast<Eigen::Index>(m);
            const double ytt = (field.y(r2, c) - 2.0 * field.y(r1, c) + field.y(r0, c)) / (ht * ht);
            const double flux = (k_half[m] * (field.y(r1, c + 1) - field.y(r1, c)) -
                                 k_half[m - 1] * (field.y(r1, c) - field.y(r1, c - 1))) /
                                (hx * hx);
            const double r = p[m] * ytt - flux - u * f[m];
            const double floor_term = u * (p[m] * field.projected_force[m] - f[m]);
            sum_r += r * r;
            sum_floor += floor_term * floor_term;
            sum_disc += (r - floor_term) * (r - floor_term);
            out.max = std::max(out.max, std::abs(r));
        }
    }
    const double cell = ht * hx;
    out.l2 = std::sqrt(sum_r * cell);
    out.truncation_floor = std::sqrt(sum_floor * cell);
    out.discretization = std::sqrt(sum_disc * cell);
    return out;
}

BoundaryInitialReport check_boundary_initial(const FieldSolution& field, const InitialData& data)
{
    BoundaryInitialReport out;
    const auto nx = static_cast<Eigen::Index>(field.x_grid.size());
    for (Eigen::Index i = 0; i < field.y.rows(); ++i) {
        out.boundary = std::max({out.boundary, std::abs(field.y(i, 0)), std::abs(field.y(i, nx - 1))});
    }
    if (field.t_grid.size() < 3 || field.t_grid.front() != 0.0) {
        throw Error(ErrorCode::resolution, "check_boundary_initial: field must start at t = 0 with 3 levels");
    }
    const std::size_t expected = (field.x_grid.size() - 1) * field.x_stride + 1;
    if (data.y0.size() != expected || data.y1.size() != expected) {
        throw Error(ErrorCode::dimension, "check_boundary_initial: data not sampled on the basis grid");
    }
    const double h0 = field.t_grid[1] - field.t_grid[0];
    const double h1 = field.t_grid[2] - field.t_grid[1];
    for (Eigen::Index c = 0; c < nx; ++c) {
        const std::size_t m = static_cast<std::size_t>(c) * field.x_stride;
        out.initial_displacement = std::max(out.initial_displacement, std::abs(field.y(0, c) - data.y0[m]));
        // second-order one-sided derivative on a possibly non-uniform start
        const double a = -(2 * h0 + h1) / (h0 * (h0 + h1));
        const double b = (h0 + h1) / (h0 * h1);
        const double d = -h0 / (h1 * (h0 + h1));
        const double yt = a * field.y(0, c) + b * field.y(1, c) + d * field.y(2, c);
        out.initial_velocity = std::max(out.initial_velocity, std::abs(yt - data.y1[m]));
    }
    return out;
}

double projection_tail_sup(const SpectralBasis& basis, std::span<const double> coefficients,
                           std::size_t n_kept)
{
    const std::size_t count = std::min(basis.size(), coefficients.size());
    double total = 0.0;
    for (std::size_t j = n_kept; j < count; ++j) {
        double sup = 0.0;
        for (double v : basis.modes[j].h) sup = std::max(sup, std::abs(v));
        total += std::abs(coefficients[j]) * sup;
    }
    return total;
}

double physical_cost(const FieldSolution& field, const CoefficientProfile& profile)
{
    const std::size_t nt = field.t_grid.size();
    const std::size_t nx = field.x_grid.size();
    if (nt < 6 || nx < 6) {
        throw Error(ErrorCode::resolution,
                    fmt::format("physical_cost: need at least 4 interior points per direction "
                                "(got {} x {} nodes)", nt, nx));
    }
    require_uniform(field.t_grid, "time");
    require_uniform(field.x_grid, "space");
    std::vector<double> p(nx);
    for (std::size_t m = 0; m < nx; ++m) p[m] = profile.p(field.x_grid[m]);
    std::vector<double> row(nx), per_time(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t m = 0; m < nx; ++m) {
            const double y = field.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m));
            row[m] = p[m] * y * y;
        }
        per_time[i] = quad::simpson(row, spacing_of(field.x_grid));
    }
    return quad::simpson(per_time, spacing_of(field.t_grid));
}

}  // namespace chatterbar
