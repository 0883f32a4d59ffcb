#include "chatterbar/error.hpp"
#include "chatterbar/field.hpp"
#include "chatterbar/modal.hpp"
#include "chatterbar/sturm_liouville.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace chatterbar;
using std::numbers::pi;

namespace {

const CoefficientProfile& sine_profile()
{
    static const CoefficientProfile p = CoefficientProfile::constant(pi).with_force(force::sine(pi));
    return p;
}

const SpectralBasis& sine_basis()
{
    static const SpectralBasis b = solve_eigenpairs(sine_profile(), 32, 1281);
    return b;
}

std::vector<double> uniform(double a, double b, std::size_t intervals)
{
    std::vector<double> g(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) g[i] = a + (b - a) * static_cast<double>(i) / intervals;
    return g;
}

/// Field sampled from a closed-form y(t, x) with u = 0 and no force.
FieldSolution analytic_field(std::size_t nt, std::size_t nx, double T,
                             const std::function<double(double, double)>& y)
{
    FieldSolution f;
    f.t_grid = uniform(0.0, T, nt);
    f.x_grid = uniform(0.0, pi, nx);
    f.y.resize(static_cast<Eigen::Index>(nt + 1), static_cast<Eigen::Index>(nx + 1));
    for (std::size_t i = 0; i <= nt; ++i) {
        for (std::size_t m = 0; m <= nx; ++m) {
            f.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = y(f.t_grid[i], f.x_grid[m]);
        }
    }
    f.u_trace.assign(nt + 1, 0.0);
    f.projected_force.assign(nx + 1, 0.0);
    return f;
}

/// s_1 = cos(omega_1 t) and all other modes at rest.
std::vector<std::vector<double>> first_mode_rows(const SpectralBasis& b, std::span<const double> t)
{
    std::vector<std::vector<double>> rows;
    for (double ti : t) {
        std::vector<double> r(b.size(), 0.0);
        r[0] = std::cos(b.modes[0].omega * ti);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST(Reconstruct, ZeroAndSingleMode)
{
    const auto& b = sine_basis();
    const auto t = uniform(0.0, 2 * pi, 200);
    const std::vector<std::vector<double>> zero(t.size(), std::vector<double>(b.size(), 0.0));
    const auto f0 = reconstruct(b, zero, t);
    EXPECT_EQ(f0.y.cwiseAbs().maxCoeff(), 0.0);

    const auto f1 = reconstruct(b, first_mode_rows(b, t), t, {}, {}, 8);
    ASSERT_EQ(f1.x_grid.size(), 161u);
    double err = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t m = 0; m < f1.x_grid.size(); ++m) {
            const double exact = std::cos(t[i]) * std::sqrt(2 / pi) * std::sin(f1.x_grid[m]);
            err = std::max(err, std::abs(f1.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) - exact));
        }
    }
    EXPECT_LE(err, 1e-9);
    for (Eigen::Index i = 0; i < f1.y.rows(); ++i) {
        EXPECT_EQ(f1.y(i, 0), 0.0);
        EXPECT_EQ(f1.y(i, f1.y.cols() - 1), 0.0);
    }
    // sum_j C_j h_j reproduces f = sin x for this force
    for (std::size_t m = 0; m < f1.x_grid.size(); ++m) {
        EXPECT_NEAR(f1.projected_force[m], std::sin(f1.x_grid[m]), 1e-8);
    }
}

TEST(Reconstruct, Errors)
{
    const auto& b = sine_basis();
    const auto t = uniform(0.0, 1.0, 10);
    const std::vector<std::vector<double>> short_rows(t.size(), std::vector<double>(3, 0.0));
    EXPECT_THROW(reconstruct(b, short_rows, t), Error);
    const std::vector<std::vector<double>> rows(t.size(), std::vector<double>(b.size(), 0.0));
    EXPECT_THROW(reconstruct(b, std::span(rows).first(5), t), Error);
    const std::vector<double> u(3, 0.0);
    EXPECT_THROW(reconstruct(b, rows, t, u), Error);
    EXPECT_THROW(reconstruct(b, rows, t, {}, {}, 7), Error);  // 7 does not divide 1280
}

TEST(PdeResidual, FreeStandingWaveIsSecondOrder)
{
    const auto& prof = CoefficientProfile::constant(pi).with_force(force::zero());
    const auto wave = [](double t, double x) { return std::sin(t) * std::sin(x); };
    const auto coarse = pde_residual(analytic_field(100, 100, 2 * pi, wave), prof);
    const auto fine = pde_residual(analytic_field(200, 200, 2 * pi, wave), prof);
    EXPECT_LT(coarse.l2, 1e-3);
    EXPECT_NEAR(coarse.l2 / fine.l2, 4.0, 0.1);
    EXPECT_EQ(coarse.truncation_floor, 0.0);
    EXPECT_EQ(coarse.masked_rows, 0u);

    const auto zero = pde_residual(analytic_field(50, 50, 1.0, [](double, double) { return 0.0; }), prof);
    EXPECT_EQ(zero.l2, 0.0);
    EXPECT_EQ(zero.max, 0.0);
}

TEST(PdeResidual, MasksSwitchesAndRejectsBadGrids)
{
    const auto& prof = sine_profile();
    auto f = analytic_field(100, 100, 1.0, [](double, double) { return 0.0; });
    for (std::size_t i = 0; i < f.u_trace.size(); ++i) f.u_trace[i] = f.t_grid[i] < 0.505 ? 1.0 : -1.0;
    f.switch_times = {0.505};
    const auto r = pde_residual(f, prof);
    EXPECT_EQ(r.masked_rows, 2u);
    EXPECT_EQ(r.evaluated_rows, 97u);
    // y = 0 leaves r = -u f on every evaluated row
    EXPECT_NEAR(r.max, 1.0, 1e-3);

    try {
        pde_residual(analytic_field(4, 100, 1.0, [](double, double) { return 0.0; }), prof);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::resolution);
    }
    auto skew = analytic_field(20, 20, 1.0, [](double, double) { return 0.0; });
    skew.t_grid[3] += 0.01;
    EXPECT_THROW(pde_residual(skew, prof), Error);
}

TEST(BoundaryInitial, FirstModeIsExact)
{
    const auto& b = sine_basis();
    const auto t = uniform(0.0, 1.0, 1000);
    const auto field = reconstruct(b, first_mode_rows(b, t), t, {}, {}, 4);
    const auto rep = check_boundary_initial(field, InitialData::mode(b, 1));
    EXPECT_EQ(rep.boundary, 0.0);
    EXPECT_LE(rep.initial_displacement, 1e-9);
    // one-sided second-order difference of cos t at 0: error h^2 |y'''| / 3 = 0 to leading order
    EXPECT_LE(rep.initial_velocity, 1e-8);

    const std::vector<double> late = uniform(0.5, 1.0, 10);
    const std::vector<std::vector<double>> rows(late.size(), std::vector<double>(b.size(), 0.0));
    EXPECT_THROW(check_boundary_initial(reconstruct(b, rows, late), InitialData::mode(b, 1)), Error);
}

TEST(BoundaryInitial, ParabolaWithinProjectionTail)
{
    const auto& b = sine_basis();
    const auto data = InitialData::sample(b.grid, parabola(pi, 1e-2), [](double) { return 0.0; });
    const auto pr = project_initial_data(data, b);
    const std::size_t n = 8;

    // closed form alpha_j = 1e-2 sqrt(2/pi) 2 (1 - (-1)^j) / j^3 and max |h_j| = sqrt(2/pi)
    double closed_tail = 0.0;
    for (int j = 9; j <= 32; ++j) {
        closed_tail += 1e-2 * (2 / pi) * 2.0 * (1.0 - std::pow(-1.0, j)) / (j * j * j);
    }
    const double bound = projection_tail_sup(b, pr.alpha, n);
    EXPECT_NEAR(bound / closed_tail, 1.0, 1e-6);

    // infinite tail: sum over odd j > 8 of 8e-2 / (pi j^3)
    double infinite_tail = 0.0;
    for (int j = 9; j < 200001; j += 2) infinite_tail += 8e-2 / (pi * j * j * j);

    const auto t = uniform(0.0, 0.5, 100);
    std::vector<std::vector<double>> rows;
    for (double ti : t) {
        std::vector<double> r(n);
        for (std::size_t j = 0; j < n; ++j) r[j] = pr.alpha[j] * std::cos(b.modes[j].omega * ti);
        rows.push_back(r);
    }
    const auto field = reconstruct(b.truncated(n), rows, t, {}, {}, 4);
    const auto rep = check_boundary_initial(field, data);
    EXPECT_EQ(rep.boundary, 0.0);
    EXPECT_LE(rep.initial_displacement, infinite_tail);
    // the alternating tail at x = pi/2 is the largest deviation and is a sizeable share of the bound
    EXPECT_GE(rep.initial_displacement, 0.5 * closed_tail);
}

TEST(PhysicalCost, MatchesModalCost)
{
    const auto& b = sine_basis();
    const auto t = uniform(0.0, 2 * pi, 400);
    const auto field = reconstruct(b, first_mode_rows(b, t), t, {}, {}, 4);
    EXPECT_NEAR(physical_cost(field, sine_profile()), pi, 1e-8);

    const std::vector<std::vector<double>> zero(t.size(), std::vector<double>(b.size(), 0.0));
    EXPECT_EQ(physical_cost(reconstruct(b, zero, t), sine_profile()), 0.0);

    const auto coarse = uniform(0.0, 1.0, 3);
    const std::vector<std::vector<double>> few(coarse.size(), std::vector<double>(b.size(), 0.0));
    EXPECT_THROW(physical_cost(reconstruct(b, few, coarse), sine_profile()), Error);
}
