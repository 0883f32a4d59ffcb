// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "chatterbar/extremal.hpp"
#include "chatterbar/field.hpp"
#include "chatterbar/modal.hpp"
#include "chatterbar/ode.hpp"
#include "chatterbar/oracle.hpp"
#include "chatterbar/quadrature.hpp"
#include "chatterbar/scenario.hpp"
#include "chatterbar/sturm_liouville.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace chatterbar;
using std::numbers::pi;

namespace {

int failures = 0;
double worst_drift = 0.0;
std::vector<std::string> drift_sources;

void verdict(int id, const std::string& title, bool ok, const std::string& detail)
{
    fmt::print("{} [{}] {}: {}\n", ok ? "PASS" : "FAIL", id, title, detail);
    std::fflush(stdout);
    if (!ok) ++failures;
}

/// Runs one criterion, turning an unexpected exception into a failure.
void criterion(int id, const std::string& title, const std::function<std::pair<bool, std::string>()>& body)
{
    try {
        const auto [ok, detail] = body();
        verdict(id, title, ok, detail);
    } catch (const std::exception& e) {
        verdict(id, title, false, fmt::format("exception: {}", e.what()));
    }
}

void record_drift(const std::string& what, const Trajectory& tr)
{
    const double d = hamiltonian_drift(tr);
    worst_drift = std::max(worst_drift, d);
    drift_sources.push_back(fmt::format("{}={:.2e}", what, d));
}

double gram_deviation(const SpectralBasis& b)
{
    double worst = 0.0;
    std::vector<double> w(b.grid.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            for (std::size_t m = 0; m < w.size(); ++m) w[m] = b.weight_p[m] * b.modes[i].h[m] * b.modes[j].h[m];
            worst = std::max(worst, std::abs(quad::simpson(w, b.spacing) - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}

ModalPlant plant_of(int n)
{
    ModalPlant p;
    p.omega.resize(n);
    p.c.resize(n);
    for (int j = 1; j <= n; ++j) {
        p.omega[j - 1] = j;
        p.c[j - 1] = 1.0 / (j * j);
    }
    return p;
}

ExtremalState random_state(Eigen::Index n, std::uint64_t seed, double scale)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-scale, scale);
    ExtremalState z = ExtremalState::zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        z.psi1[j] = U(rng);
        z.psi2[j] = U(rng);
        z.s[j] = U(rng);
        z.tau[j] = U(rng);
    }
    return z;
}

ExtremalState flow(const ExtremalState& z, const ModalPlant& plant, double u, double t)
{
    const double dir = t > 0.0 ? 1.0 : -1.0;
    auto rhs = [&](double, const Eigen::VectorXd& y) -> Eigen::VectorXd {
        return dir * extremal_rhs(ExtremalState::unpack(y), u, plant).pack();
    };
    const std::vector<double> out{std::abs(t)};
    return ExtremalState::unpack(ode::integrate_to(rhs, 0.0, z.pack(), out, {1e-16, 1e-14})[0]);
}

double h_of(const ExtremalState& z, const ModalPlant& p, int i)
{
    const auto v = switching_values(z, p, 0.0);
    return i == 1 ? v.H1 : i == 2 ? v.H2 : i == 3 ? v.H3 : v.H4;
}

std::vector<double> uniform(double a, double b, std::size_t n)
{
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / n;
    return g;
}

/// Field of a schedule run sampled exactly at uniform times.
FieldSolution schedule_field(const Problem& pb, const ControlSchedule& sch, std::size_t nt,
                             std::size_t stride)
{
    const auto t = uniform(0.0, sch.horizon, nt);
    const auto states = sample_schedule(pb.state, sch, t);
    std::vector<std::vector<double>> rows;
    std::vector<double> u;
    for (std::size_t i = 0; i < t.size(); ++i) {
        rows.push_back(states[i].s);
        u.push_back(sch.value_at(t[i]));
    }
    std::vector<double> switches = sch.switch_times;
    return reconstruct(pb.basis, rows, t, u, switches, stride);
}

// one-mode small-amplitude chattering problem shared by criteria 7, 9 and 10
const ModalState chatter_state{{0.5}, {0.0}, {1.0}, {std::sqrt(pi / 2)}};
std::vector<OptimizationResult> chatter_family;

}  // namespace

int main()
{
    const auto started = std::chrono::steady_clock::now();

    criterion(1, "closed-form spectra", [] {
        const auto c = solve_eigenpairs(CoefficientProfile::constant(pi), 20, 801);
        const auto e = solve_eigenpairs(CoefficientProfile::exponential(1.0, 1.0), 20, 801);
        double ec = 0.0, ee = 0.0;
        for (int j = 1; j <= 20; ++j) {
            const auto k = static_cast<std::size_t>(j - 1);
            ec = std::max(ec, std::abs(c.modes[k].lambda / (j * j) - 1.0));
            ee = std::max(ee, std::abs(e.modes[k].lambda / (j * j * pi * pi + 0.25) - 1.0));
        }
        return std::pair{ec <= 1e-8 && ee <= 1e-8,
                         fmt::format("max rel err constant {:.2e}, exponential {:.2e} (j <= 20)", ec, ee)};
    });

    criterion(2, "eigenvalue asymptotics", [] {
        const auto b = solve_eigenpairs(CoefficientProfile::affine(1.0, 1.0), 40, 1601);
        const double travel = 2.0 / 3.0 * (2.0 * std::sqrt(2.0) - 1.0);  // int_0^1 sqrt(1 + x) dx
        const double limit = pi * pi / (travel * travel);
        double dev[3];
        const int js[3] = {10, 20, 40};
        for (int i = 0; i < 3; ++i) {
            dev[i] = std::abs(b.modes[static_cast<std::size_t>(js[i] - 1)].lambda / (js[i] * js[i]) / limit - 1.0);
        }
        const bool ok = dev[2] <= 0.01 && dev[0] > dev[1] && dev[1] > dev[2];
        return std::pair{ok, fmt::format("|lambda_j/j^2/limit - 1| at j=10,20,40: {:.2e}, {:.2e}, {:.2e}",
                                         dev[0], dev[1], dev[2])};
    });

    criterion(3, "orthonormality", [] {
        double worst = 0.0;
        for (const auto& pr : {CoefficientProfile::constant(pi), CoefficientProfile::exponential(),
                               CoefficientProfile::affine()}) {
            worst = std::max(worst, gram_deviation(solve_eigenpairs(pr, 20, 801)));
        }
        return std::pair{worst <= 1e-8, fmt::format("max Gram deviation {:.2e} (N = 20, 3 profiles)", worst)};
    });

    criterion(4, "force-coefficient decay", [] {
        const auto quartic = CoefficientProfile::constant(pi).with_force(force::clamped_quartic(pi));
        const auto b = solve_eigenpairs(quartic, 40, 1601);
        const auto proj = project_force(quartic, b);
        // independent verdict over the nonzero coefficients j = 5..40
        std::vector<double> scaled;
        for (int j = 5; j <= 40; ++j) {
            if (std::find(proj.zero_indices.begin(), proj.zero_indices.end(), j) != proj.zero_indices.end()) continue;
            scaled.push_back(std::abs(proj.C[static_cast<std::size_t>(j - 1)]) * std::pow(j, 4));
        }
        std::vector<double> sorted = scaled;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        const double mx = sorted.back();
        const auto rq = check_force_decay(quartic, b);
        const auto sine = CoefficientProfile::constant(pi).with_force(force::sine(pi));
        const auto rs = check_force_decay(sine, b);
        const bool ok = mx <= 3 * median && rq.bounded && rq.hypothesis_ok && !rs.hypothesis_ok &&
                        !rs.warnings.empty();
        return std::pair{ok, fmt::format("quartic max/median {:.3f} (verdict {}), sine warning fired: {}",
                                         mx / median, rq.bounded ? "bounded" : "unbounded",
                                         rs.warnings.empty() ? "no" : "yes")};
    });

    criterion(5, "switching-function derivative cascade", [] {
        const auto p = plant_of(4);
        double worst_ratio_dev = 0.0, worst_formula = 0.0;
        for (double u : {1.0, -1.0}) {
            const auto z = flow(random_state(4, 11, 1.0), p, u, 0.37);
            for (int i = 1; i <= 3; ++i) {
                double err[2];
                for (int k = 0; k < 2; ++k) {
                    const double h = 0.02 / (1 << k);
                    const double fd = (h_of(flow(z, p, u, h), p, i) - h_of(flow(z, p, u, -h), p, i)) / (2 * h);
                    err[k] = std::abs(fd - h_of(z, p, i + 1));
                }
                worst_ratio_dev = std::max(worst_ratio_dev, std::abs(err[0] / err[1] - 4.0));
            }
            // d^4 H1 / dt^4 = sum c w^2 (psi2 w^2 + 2 s w) - u sum c^2 w^2
            double drift = 0.0, den = 0.0;
            for (Eigen::Index j = 0; j < 4; ++j) {
                const double c = p.c[j], w = p.omega[j];
                drift += c * w * w * (z.psi2[j] * w * w + 2 * z.s[j] * w);
                den += c * c * w * w;
            }
            worst_formula = std::max(worst_formula, std::abs(switching_fourth_derivative(z, p, u) - (drift - u * den)));
        }
        const bool ok = worst_ratio_dev <= 0.2 && worst_formula <= 1e-8;
        return std::pair{ok, fmt::format("max |err(h)/err(h/2) - 4| {:.3f}; d4H1 formula error {:.2e}",
                                         worst_ratio_dev, worst_formula)};
    });

    criterion(6, "singular-surface invariance", [] {
        const auto p = plant_of(5);
        const auto at_zero = singular_control(ExtremalState::zero(5), p);
        const auto seed = singular_seed(p, random_state(5, 8, 2e-4));
        IntegrationOptions io;
        io.tol = {1e-13, 1e-12};
        const auto run = integrate_extremal(seed, p, 2 * pi, io);
        record_drift("singular", run.trajectory);
        double worst = 0.0;
        bool all_singular = true;
        for (const auto& s : run.trajectory.samples) {
            all_singular = all_singular && s.regime == Regime::singular;
            worst = std::max({worst, std::abs(s.H.H1), std::abs(s.H.H2), std::abs(s.H.H3), std::abs(s.H.H4)});
        }
        const bool ok = at_zero.value == 0.0 && worst <= 1e-6 && all_singular && !run.report.saturated;
        return std::pair{ok, fmt::format("max |H1..H4| over one period {:.2e}; u0(0) = {}", worst, at_zero.value)};
    });

    criterion(8, "oracle equivalence", [] {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> U(-1.0, 1.0), W(0.3, 0.9), P(0.0, 1.0);
        double worst_state = 0.0, worst_cost = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const auto n = static_cast<std::size_t>(1 + trial % 6);
            ModalState st;
            double w = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                w += W(rng);
                st.omega.push_back(w);
                st.c.push_back(U(rng));
                st.s.push_back(U(rng));
                st.tau.push_back(U(rng));
            }
            const double T = 2.0 + trial % 5;
            std::vector<double> times;
            const int k = static_cast<int>(P(rng) * 6);
            for (int i = 0; i < k; ++i) times.push_back(T * P(rng));
            std::sort(times.begin(), times.end());
            std::vector<double> values;
            for (int i = 0; i <= k; ++i) values.push_back(U(rng));
            const ControlSchedule sch{T, times, values};
            const auto ev = evaluate_schedule(st, sch);

            const auto ni = static_cast<Eigen::Index>(n);
            Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * ni + 1);
            for (Eigen::Index j = 0; j < ni; ++j) {
                y[j] = st.s[static_cast<std::size_t>(j)];
                y[ni + j] = st.tau[static_cast<std::size_t>(j)];
            }
            double t = 0.0;
            for (std::size_t m = 0; m < values.size(); ++m) {
                const double end = m < times.size() ? times[m] : T;
                if (end <= t) continue;
                const double u = values[m];
                auto rhs = [&](double, const Eigen::VectorXd& v) {
                    Eigen::VectorXd d(v.size());
                    d[2 * ni] = 0.0;
                    for (Eigen::Index j = 0; j < ni; ++j) {
                        const auto q = static_cast<std::size_t>(j);
                        d[j] = st.omega[q] * v[ni + j];
                        d[ni + j] = -st.omega[q] * v[j] + st.c[q] * u;
                        d[2 * ni] += v[j] * v[j];
                    }
                    return d;
                };
                const std::vector<double> out{end};
                y = ode::integrate_to(rhs, t, y, out, {1e-13, 1e-13})[0];
                t = end;
            }
            for (Eigen::Index j = 0; j < ni; ++j) {
                const auto q = static_cast<std::size_t>(j);
                worst_state = std::max({worst_state, std::abs(y[j] - ev.final_state.s[q]),
                                        std::abs(y[ni + j] - ev.final_state.tau[q])});
            }
            worst_cost = std::max(worst_cost, std::abs(y[2 * ni] / ev.cost - 1.0));
        }
        return std::pair{worst_state <= 1e-9 && worst_cost <= 1e-9,
                         fmt::format("50 random schedules: max state diff {:.2e}, max rel cost diff {:.2e}",
                                     worst_state, worst_cost)};
    });

    criterion(9, "chattering structure", [] {
        const auto t0 = std::chrono::steady_clock::now();
        chatter_family = optimize_family(chatter_state, 10, default_horizon(chatter_state));
        bool decreasing = true, diminishing = true;
        for (std::size_t k = 1; k < chatter_family.size(); ++k) {
            // gains come from quad-precision costs: past K = 6 they are below one ulp of the cost
            decreasing = decreasing && chatter_family[k].cost_gain > 0.0 &&
                         chatter_family[k].cost <= chatter_family[k - 1].cost;
            if (k >= 2) diminishing = diminishing && chatter_family[k].cost_gain < chatter_family[k - 1].cost_gain;
        }
        const auto& best = chatter_family.back();
        const auto sw = best.schedule.bang_switches();
        std::vector<double> len;
        for (std::size_t i = 1; i < sw.size(); ++i) len.push_back(sw[i] - sw[i - 1]);
        std::vector<double> ratios;
        for (std::size_t i = 1; i < len.size(); ++i) ratios.push_back(len[i] / len[i - 1]);
        const std::vector<double> last(ratios.end() - 3, ratios.end());
        const double rspread = *std::max_element(last.begin(), last.end()) / *std::min_element(last.begin(), last.end()) - 1.0;

        const auto adj = discrete_adjoint(chatter_state, best.schedule);
        IntegrationOptions io;
        io.tol = {1e-18, 1e-13};
        const auto run = integrate_extremal(adj.z0, ModalPlant::from(chatter_state), sw[4] + 0.005, io);
        record_drift("chattering", run.trajectory);
        double match = 0.0;
        const auto& esw = run.report.switch_times;
        for (std::size_t i = 0; i < 5; ++i) {
            match = std::max(match, i < esw.size() ? std::abs(esw[i] - sw[i]) : INFINITY);
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = decreasing && diminishing && rspread <= 0.1 && match <= 0.01 * sw[0] &&
                        adj.stationary() && secs <= 300.0;
        return std::pair{ok, fmt::format("costs decreasing {} with diminishing gains {}; last 3 ratios "
                                         "{:.4f} {:.4f} {:.4f} (spread {:.2e}); extremal vs oracle first 5 "
                                         "switches max diff {:.2e} (limit {:.2e}); {:.0f} s",
                                         decreasing, diminishing, last[0], last[1], last[2], rspread,
                                         match, 0.01 * sw[0], secs)};
    });

    criterion(10, "Parseval cost identity", [] {
        if (chatter_family.empty()) throw std::runtime_error("criterion 9 did not produce a schedule");
        Scenario sc = parse_scenario(R"({"initial": {"displacement": "mode:1", "amplitude": 0.5}, "modes": 1})");
        const Problem pb = prepare_problem(sc);
        const auto& sch = chatter_family.back().schedule;
        const double modal = evaluate_schedule(pb.state, sch).cost;
        std::vector<double> gaps;
        for (std::size_t nt : {500u, 1000u, 2000u}) {
            const auto f = schedule_field(pb, sch, nt, 4);
            gaps.push_back(std::abs(physical_cost(f, pb.profile) - modal) / modal);
        }
        const bool ok = gaps[0] <= 5e-3 && gaps[1] < gaps[0] && gaps[2] < gaps[1];
        return std::pair{ok, fmt::format("relative gap at 500/1000/2000 time intervals: {:.2e}, {:.2e}, {:.2e}",
                                         gaps[0], gaps[1], gaps[2])};
    });

    criterion(11, "almost-everywhere solution", [] {
        Scenario sc = parse_scenario(R"({
            "force": "clamped_quartic",
            "initial": {"displacement": "parabola", "amplitude": 0.01},
            "modes": 8
        })");
        const Problem pb = prepare_problem(sc);
        // an optimized two-switch bang schedule on four periods of mode 1; bang
        // arcs keep u f in the equation so the truncation floor is visible
        OptimizerOptions oo;
        oo.grid_search = false;
        oo.singular_tail = false;
        const auto fam = optimize_family(pb.state, 2, 4 * pi, oo);
        const auto& sch = fam.back().schedule;
        const auto adj = discrete_adjoint(pb.state, sch);
        IntegrationOptions io;
        io.tol = {1e-14, 1e-12};
        record_drift("quartic N=8", integrate_extremal(adj.z0, ModalPlant::from(pb.state), sch, io).trajectory);

        std::vector<ResidualReport> reps;
        const std::size_t nodes = pb.basis.grid.size() - 1;
        std::size_t stride = nodes / 10;
        for (std::size_t nt = 50; nt <= 1600; nt *= 2, stride /= 2) {
            reps.push_back(pde_residual(schedule_field(pb, sch, nt, stride), pb.profile));
        }
        bool converge = reps.back().l2 <= reps.back().truncation_floor * (1 + 1e-3);
        std::string l2s, ratios;
        for (std::size_t i = 0; i < reps.size(); ++i) {
            l2s += fmt::format("{}{:.3e}", i ? " -> " : "", reps[i].l2);
            if (i == 0) continue;
            const double r = reps[i - 1].discretization / reps[i].discretization;
            ratios += fmt::format("{}{:.2f}", i > 1 ? " " : "", r);
            converge = converge && std::abs(r - 4.0) <= 0.4 && reps[i].l2 < reps[i - 1].l2;
        }
        // while discretization dominates, the whole residual drops about 4x
        converge = converge && reps[0].l2 / reps[1].l2 >= 3.5;

        const auto f = schedule_field(pb, sch, 3200, 1);
        const auto bi = check_boundary_initial(f, pb.initial);
        const double tail = projection_tail_sup(pb.extended, pb.extended_projection.alpha, pb.basis.size());
        const double ht = f.t_grid[1];
        const bool bc = bi.boundary == 0.0 && bi.initial_displacement <= tail && bi.initial_velocity <= 1e-3 * ht;
        return std::pair{converge && bc,
                         fmt::format("residual L2 {} (floor {:.3e}), discretization ratios {}; boundary {}, "
                                     "y0 error {:.2e} <= tail bound {:.2e}, y1 error {:.2e}",
                                     l2s, reps.back().truncation_floor, ratios, bi.boundary,
                                     bi.initial_displacement, tail, bi.initial_velocity)};
    });

    criterion(7, "Hamiltonian conservation", [] {
        // one more long run: the K = 10 schedule replayed through the extremal integrator
        if (!chatter_family.empty()) {
            const auto& sch = chatter_family.back().schedule;
            const auto adj = discrete_adjoint(chatter_state, sch);
            IntegrationOptions io;
            io.tol = {1e-14, 1e-12};
            record_drift("schedule K=10", integrate_extremal(adj.z0, ModalPlant::from(chatter_state), sch, io).trajectory);
        }
        std::string list;
        for (const auto& s : drift_sources) list += (list.empty() ? "" : ", ") + s;
        return std::pair{worst_drift <= 1e-6 && drift_sources.size() >= 4,
                         fmt::format("max relative drift {:.2e} over {} runs ({})", worst_drift,
                                     drift_sources.size(), list)};
    });

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    fmt::print("{} of 11 criteria failed ({:.0f} s)\n", failures, secs);
    return failures == 0 ? 0 : 1;
}
