#include "chatterbar/extremal.hpp"

#include "chatterbar/error.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numbers>

namespace chatterbar {

ModalPlant ModalPlant::from(const ModalState& state)
{
    state.validate();
    ModalPlant out;
    const auto n = static_cast<Eigen::Index>(state.size());
    out.omega = Eigen::Map<const Eigen::VectorXd>(state.omega.data(), n);
    out.c = Eigen::Map<const Eigen::VectorXd>(state.c.data(), n);
    return out;
}

ModalPlant ModalPlant::from(const SpectralBasis& basis)
{
    ModalPlant out;
    const auto n = static_cast<Eigen::Index>(basis.size());
    out.omega.resize(n);
    out.c.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.omega[j] = basis.modes[static_cast<std::size_t>(j)].omega;
        out.c[j] = basis.modes[static_cast<std::size_t>(j)].c;
    }
    return out;
}

ExtremalState ExtremalState::zero(Eigen::Index n)
{
    return ExtremalState{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
                         Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

ExtremalState ExtremalState::from(const ModalState& state)
{
    const auto n = static_cast<Eigen::Index>(state.size());
    ExtremalState z = zero(n);
    z.s = Eigen::Map<const Eigen::VectorXd>(state.s.data(), n);
    z.tau = Eigen::Map<const Eigen::VectorXd>(state.tau.data(), n);
    return z;
}

ExtremalState ExtremalState::unpack(const Eigen::VectorXd& flat)
{
    if (flat.size() % 4 != 0) {
        throw Error(ErrorCode::dimension, "packed extremal state length must be a multiple of 4");
    }
    const Eigen::Index n = flat.size() / 4;
    return ExtremalState{flat.segment(0, n), flat.segment(n, n), flat.segment(2 * n, n),
                         flat.segment(3 * n, n)};
}

Eigen::VectorXd ExtremalState::pack() const
{
    const Eigen::Index n = size();
    Eigen::VectorXd flat(4 * n);
    flat << psi1, psi2, s, tau;
    return flat;
}

void ExtremalState::check(Eigen::Index n) const
{
    if (psi1.size() != n || psi2.size() != n || s.size() != n || tau.size() != n) {
        throw Error(ErrorCode::dimension,
                    fmt::format("extremal state blocks must all have length {}", n));
    }
    if (!psi1.allFinite() || !psi2.allFinite() || !s.allFinite() || !tau.allFinite()) {
        throw Error(ErrorCode::domain, "extremal state has non-finite entries");
    }
}

const char* to_string(Regime regime) noexcept
{
    return regime == Regime::bang ? "bang" : "singular";
}

namespace {

void check_plant(const ModalPlant& plant)
{
    if (plant.c.size() != plant.omega.size()) {
        throw Error(ErrorCode::dimension, "omega and c differ in length");
    }
}

Eigen::VectorXd rhs_flat(const Eigen::VectorXd& z, double u, const ModalPlant& plant)
{
    const Eigen::Index n = plant.size();
    const auto psi1 = z.segment(0, n);
    const auto psi2 = z.segment(n, n);
    const auto s = z.segment(2 * n, n);
    const auto tau = z.segment(3 * n, n);
    Eigen::VectorXd d(4 * n);
    d.segment(0, n) = psi2.cwiseProduct(plant.omega) + s;
    d.segment(n, n) = -psi1.cwiseProduct(plant.omega);
    d.segment(2 * n, n) = plant.omega.cwiseProduct(tau);
    d.segment(3 * n, n) = -plant.omega.cwiseProduct(s) + plant.c * u;
    return d;
}

double h1_flat(const Eigen::VectorXd& z, const ModalPlant& plant)
{
    const Eigen::Index n = plant.size();
    return z.segment(n, n).dot(plant.c);
}

double singular_denominator(const ModalPlant& plant)
{
    return plant.c.cwiseProduct(plant.omega).squaredNorm();
}

double singular_numerator(const ExtremalState& z, const ModalPlant& plant)
{
    const Eigen::VectorXd w3 = plant.omega.array().cube();
    return (plant.c.cwiseProduct(w3)).dot(z.psi2.cwiseProduct(plant.omega) + 2.0 * z.s);
}

/// Linear constraint rows M psi = r for (psi1, psi2) stacked.
void sigma_constraints(const ExtremalState& z, const ModalPlant& plant, Eigen::MatrixXd& m,
                       Eigen::Vector4d& r)
{
    const Eigen::Index n = plant.size();
    const Eigen::ArrayXd c = plant.c.array();
    const Eigen::ArrayXd w = plant.omega.array();
    m = Eigen::MatrixXd::Zero(4, 2 * n);
    // H1 = sum c psi2
    m.row(0).segment(n, n) = c.matrix().transpose();
    // H2 = -sum c w psi1
    m.row(1).segment(0, n) = (-c * w).matrix().transpose();
    // H3 = -sum c w^2 psi2 - sum c w s
    m.row(2).segment(n, n) = (-c * w * w).matrix().transpose();
    // H4 = sum c w^3 psi1 - sum c w^2 tau
    m.row(3).segment(0, n) = (c * w * w * w).matrix().transpose();
    r << 0.0, 0.0, (c * w * z.s.array()).sum(), (c * w * w * z.tau.array()).sum();
}

}  // namespace

ExtremalState extremal_rhs(const ExtremalState& z, double u, const ModalPlant& plant)
{
    check_plant(plant);
    z.check(plant.size());
    if (!(std::abs(u) <= 1.0)) {
        throw Error(ErrorCode::control_bound, fmt::format("control {} outside [-1, 1]", u));
    }
    return ExtremalState::unpack(rhs_flat(z.pack(), u, plant));
}

SwitchingValues switching_values(const ExtremalState& z, const ModalPlant& plant, double u)
{
    check_plant(plant);
    z.check(plant.size());
    const Eigen::ArrayXd c = plant.c.array();
    const Eigen::ArrayXd w = plant.omega.array();
    const Eigen::ArrayXd p1 = z.psi1.array();
    const Eigen::ArrayXd p2 = z.psi2.array();
    const Eigen::ArrayXd s = z.s.array();
    const Eigen::ArrayXd tau = z.tau.array();

    SwitchingValues v;
    v.H0 = (p1 * w * tau - p2 * w * s - 0.5 * s * s).sum();
    v.H1 = (p2 * c).sum();
    v.H2 = -(c * p1 * w).sum();
    v.H3 = -(c * w * (p2 * w + s)).sum();
    v.H4 = -(c * w * w * (-p1 * w + tau)).sum();
    v.H = v.H0 + u * v.H1;
    return v;
}

double switching_fourth_derivative(const ExtremalState& z, const ModalPlant& plant, double u)
{
    check_plant(plant);
    z.check(plant.size());
    const Eigen::ArrayXd c = plant.c.array();
    const Eigen::ArrayXd w = plant.omega.array();
    const double drift =
        (c * w * w * (z.psi2.array() * w * w + 2.0 * z.s.array() * w)).sum();
    return drift - u * singular_denominator(plant);
}

SingularControl singular_control(const ExtremalState& z, const ModalPlant& plant)
{
    check_plant(plant);
    z.check(plant.size());
    const double den = singular_denominator(plant);
    if (!(den > 0.0)) {
        throw Error(ErrorCode::degenerate_force,
                    "singular control undefined: sum c_j^2 omega_j^2 vanishes");
    }
    SingularControl out;
    out.value = singular_numerator(z, plant) / den;
    out.saturated = std::abs(out.value) > 1.0;
    return out;
}

FeedbackDecision feedback_control(const ExtremalState& z, const ModalPlant& plant,
                                  const FeedbackTolerances& tol)
{
    const auto v = switching_values(z, plant, 0.0);
    auto sign = [](double x) { return x > 0.0 ? 1.0 : -1.0; };
    if (std::abs(v.H1) > tol.h1) return {sign(v.H1), Regime::bang, false};
    if (std::abs(v.H2) > tol.h2) return {sign(v.H2), Regime::bang, false};
    if (std::abs(v.H3) > tol.h3) return {sign(v.H3), Regime::bang, false};
    if (std::abs(v.H4) > tol.h4) return {sign(v.H4), Regime::bang, false};
    const auto u0 = singular_control(z, plant);
    return {std::clamp(u0.value, -1.0, 1.0), Regime::singular, u0.saturated};
}

ExtremalState singular_seed(const ModalPlant& plant, const ExtremalState& free_params)
{
    check_plant(plant);
    free_params.check(plant.size());
    const Eigen::Index n = plant.size();

    double cmax = plant.c.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> picks;
    for (Eigen::Index j = 0; j < n && picks.size() < 2; ++j) {
        if (std::abs(plant.c[j]) > 1e-10 * cmax) picks.push_back(j);
    }
    if (picks.size() < 2 || !(cmax > 0.0)) {
        throw Error(ErrorCode::seed_construction,
                    "singular seed needs at least two modes with nonzero c_j");
    }
    const Eigen::Index a = picks[0];
    const Eigen::Index b = picks[1];
    const Eigen::ArrayXd c = plant.c.array();
    const Eigen::ArrayXd w = plant.omega.array();

    ExtremalState z = free_params;
    // psi2: sum c psi2 = 0 and sum c w^2 psi2 = -sum c w s.
    {
        double r1 = 0.0, r2 = -(c * w * z.s.array()).sum();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == a || j == b) continue;
            r1 -= c[j] * z.psi2[j];
            r2 -= c[j] * w[j] * w[j] * z.psi2[j];
        }
        Eigen::Matrix2d m;
        m << c[a], c[b], c[a] * w[a] * w[a], c[b] * w[b] * w[b];
        const Eigen::FullPivLU<Eigen::Matrix2d> lu(m);
        if (!lu.isInvertible()) {
            throw Error(ErrorCode::seed_construction, "singular seed: psi2 system is singular");
        }
        const Eigen::Vector2d x = lu.solve(Eigen::Vector2d(r1, r2));
        z.psi2[a] = x[0];
        z.psi2[b] = x[1];
    }
    // psi1: sum c w psi1 = 0 and sum c w^3 psi1 = sum c w^2 tau.
    {
        double r1 = 0.0, r2 = (c * w * w * z.tau.array()).sum();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == a || j == b) continue;
            r1 -= c[j] * w[j] * z.psi1[j];
            r2 -= c[j] * w[j] * w[j] * w[j] * z.psi1[j];
        }
        Eigen::Matrix2d m;
        m << c[a] * w[a], c[b] * w[b], c[a] * w[a] * w[a] * w[a], c[b] * w[b] * w[b] * w[b];
        const Eigen::FullPivLU<Eigen::Matrix2d> lu(m);
        if (!lu.isInvertible()) {
            throw Error(ErrorCode::seed_construction, "singular seed: psi1 system is singular");
        }
        const Eigen::Vector2d x = lu.solve(Eigen::Vector2d(r1, r2));
        z.psi1[a] = x[0];
        z.psi1[b] = x[1];
    }
    return z;
}

ExtremalState project_to_singular_surface(const ExtremalState& z, const ModalPlant& plant)
{
    check_plant(plant);
    z.check(plant.size());
    const Eigen::Index n = plant.size();
    Eigen::MatrixXd m;
    Eigen::Vector4d r;
    sigma_constraints(z, plant, m, r);
    Eigen::VectorXd psi(2 * n);
    psi << z.psi1, z.psi2;
    const Eigen::Vector4d residual = m * psi - r;
    const Eigen::VectorXd correction = m.completeOrthogonalDecomposition().solve(residual);
    psi -= correction;
    ExtremalState out = z;
    out.psi1 = psi.segment(0, n);
    out.psi2 = psi.segment(n, n);
    return out;
}

std::vector<double> Trajectory::times() const
{
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.t);
    return out;
}

namespace {

struct Integrator {
    const ModalPlant& plant;
    const IntegrationOptions& options;
    const ControlSchedule* schedule;
    double horizon;
    double floor;

    Trajectory traj;
    ChatteringReport report;

    Regime regime = Regime::bang;
    double u = 0.0;

    double singular_u(const Eigen::VectorXd& z) const
    {
        const double u0 = singular_numerator(ExtremalState::unpack(z), plant) /
                          singular_denominator(plant);
        return std::clamp(u0, -1.0, 1.0);
    }

    Eigen::VectorXd rhs(const Eigen::VectorXd& z) const
    {
        return rhs_flat(z, regime == Regime::singular ? singular_u(z) : u, plant);
    }

    void record(double t, const Eigen::VectorXd& z)
    {
        TrajectorySample sample;
        sample.t = t;
        sample.z = ExtremalState::unpack(z);
        sample.regime = regime;
        sample.u = regime == Regime::singular ? singular_u(z) : u;
        sample.H = switching_values(sample.z, plant, sample.u);
        if (regime == Regime::singular) {
            const double r = std::max({std::abs(sample.H.H1), std::abs(sample.H.H2),
                                       std::abs(sample.H.H3), std::abs(sample.H.H4)});
            report.singular_residual = std::max(report.singular_residual, r);
            const double raw = singular_numerator(sample.z, plant) / singular_denominator(plant);
            if (std::abs(raw) > 1.0 && !report.saturated) {
                report.saturated = true;
                report.flags.push_back(fmt::format(
                    "singular control saturated at t = {:.6g} (u0 = {:.6g}); run is not "
                    "singular-consistent",
                    t, raw));
            }
        }
        traj.samples.push_back(std::move(sample));
    }

    void enter_singular(double t, Eigen::VectorXd& z, bool project)
    {
        if (project) {
            z = project_to_singular_surface(ExtremalState::unpack(z), plant).pack();
        }
        regime = Regime::singular;
        report.entered_singular_at = t;
    }

    ExtremalRun run(const ExtremalState& z0)
    {
        check_plant(plant);
        z0.check(plant.size());
        if (!(horizon > 0.0)) {
            throw Error(ErrorCode::domain, "integration horizon must be positive");
        }
        Eigen::VectorXd z = z0.pack();
        double t = 0.0;

        if (schedule) {
            u = schedule->value_at(0.0);
        } else {
            const auto decision = feedback_control(z0, plant, options.feedback);
            u = decision.u;
            if (decision.regime == Regime::singular) enter_singular(0.0, z, false);
        }
        record(t, z);

        const double w_max = plant.omega.cwiseAbs().maxCoeff();
        double h = std::min(horizon, 2.0 * std::numbers::pi / w_max) * 1e-3;
        double last_switch = -1.0;
        double last_interval = std::numeric_limits<double>::infinity();
        Eigen::VectorXd f = rhs(z);
        int shrinking = 0;  // consecutive switch intervals below half their predecessor
        std::size_t switch_sample = traj.samples.size();
        Eigen::VectorXd switch_state = z;
        long steps = 0;
        std::size_t next_sched = 0;

        while (t < horizon) {
            if (++steps > options.max_steps) {
                throw Error(ErrorCode::integration, "integrate_extremal: step budget exhausted");
            }
            double limit = horizon - t;
            if (options.max_step > 0.0) limit = std::min(limit, options.max_step);
            if (!schedule && regime == Regime::bang && std::isfinite(last_interval)) {
                limit = std::min(limit, 0.1 * last_interval);
            }
            double boundary = horizon;
            if (schedule) {
                while (next_sched < schedule->switch_times.size() &&
                       schedule->switch_times[next_sched] <= t) {
                    ++next_sched;
                }
                if (next_sched < schedule->switch_times.size()) {
                    boundary = schedule->switch_times[next_sched];
                    limit = std::min(limit, boundary - t);
                }
            }
            const bool hits_limit = h >= limit;
            const double step = hits_limit ? limit : h;

            auto flat_rhs = [this](double, const Eigen::VectorXd& y) { return rhs(y); };
            ode::Step trial = ode::dopri5_step(flat_rhs, t, z, f, step, options.tol);
            if (trial.error > 1.0) {
                h = ode::next_step_size(step, trial.error);
                if (h < 1e-14 * std::max(1.0, t)) {
                    throw Error(ErrorCode::stiffness,
                                fmt::format("step size underflow at t = {}", t));
                }
                continue;
            }

            if (!schedule && regime == Regime::bang) {
                if (auto event = locate_switch(t, z, f, step, trial)) {
                    // accept the partial step up to the switch
                    t = event->first;
                    z = std::move(event->second);
                    record(t, z);
                    u = -u;
                    traj.switch_times.push_back(t);
                    const double prev_interval = last_interval;
                    if (last_switch >= 0.0) last_interval = t - last_switch;
                    last_switch = t;
                    if (options.latch_on_divergence && last_interval > prev_interval &&
                        shrinking >= 3) {
                        // A chattering extremal is unstable forward in time: once
                        // the intervals grow again the run has left the accumulating
                        // sequence. Resume from the previous switch on Sigma.
                        traj.switch_times.pop_back();
                        traj.samples.resize(switch_sample);
                        t = traj.switch_times.back();
                        z = switch_state;
                        report.flags.push_back(fmt::format(
                            "switch intervals grew after {} shrinking intervals; forward "
                            "integration diverged from the chattering sequence, latched "
                            "singular at t = {:.10g}",
                            shrinking, t));
                        enter_singular(t, z, true);
                        record(t, z);
                        f = rhs(z);
                        continue;
                    }
                    if (std::isfinite(prev_interval) && last_interval < 0.5 * prev_interval) {
                        ++shrinking;
                    } else if (std::isfinite(prev_interval)) {
                        shrinking = 0;
                    }
                    switch_sample = traj.samples.size();
                    switch_state = z;
                    if (last_interval < floor) {
                        report.floor_reached = true;
                        enter_singular(t, z, true);
                        record(t, z);
                    }
                    f = rhs(z);
                    h = std::min(h, std::isfinite(last_interval) ? 0.1 * last_interval : h);
                    continue;
                }
            }

            const double t_new = hits_limit ? t + limit : t + step;
            t = (hits_limit && limit == horizon - t) ? horizon : t_new;
            z = std::move(trial.y);
            f = std::move(trial.dydt);
            h = hits_limit ? std::max(h, ode::next_step_size(step, trial.error))
                           : ode::next_step_size(step, trial.error);

            if (schedule && next_sched < schedule->switch_times.size() && t >= boundary) {
                t = boundary;
                record(t, z);
                // apply every switch scheduled at this instant
                while (next_sched < schedule->switch_times.size() &&
                       schedule->switch_times[next_sched] <= t) {
                    traj.switch_times.push_back(schedule->switch_times[next_sched]);
                    ++next_sched;
                }
                u = schedule->value_at(t);
                f = rhs(z);
                continue;
            }
            record(t, z);
            if (regime == Regime::singular) f = rhs(z);
        }
        finish();
        return ExtremalRun{std::move(traj), std::move(report)};
    }

    /// Returns (t*, z(t*)) for the first point in the step where u H1 turns
    /// negative, taking t* on the far side of the root.
    std::optional<std::pair<double, Eigen::VectorXd>> locate_switch(double t0,
                                                                    const Eigen::VectorXd& z0,
                                                                    const Eigen::VectorXd& f0,
                                                                    double step,
                                                                    const ode::Step& trial)
    {
        auto g_of = [&](const Eigen::VectorXd& z) { return u * h1_flat(z, plant); };
        constexpr int probes = 8;
        double bracket_hi = -1.0;
        for (int k = 1; k <= probes; ++k) {
            const double theta = static_cast<double>(k) / probes;
            const Eigen::VectorXd zk =
                k == probes ? trial.y
                            : ode::hermite(t0, z0, f0, t0 + step, trial.y, trial.dydt,
                                           t0 + theta * step);
            if (g_of(zk) < 0.0) {
                bracket_hi = theta * step;
                break;
            }
        }
        if (bracket_hi < 0.0) return std::nullopt;

        auto flat_rhs = [this](double, const Eigen::VectorXd& y) { return rhs(y); };
        auto advance = [&](double dt) {
            return ode::dopri5_step(flat_rhs, t0, z0, f0, dt, options.tol).y;
        };
        auto g = [&](double dt) { return dt == 0.0 ? g_of(z0) : g_of(advance(dt)); };

        double hi = bracket_hi;
        double g_hi = g(hi);
        if (!(g_hi < 0.0)) {
            hi = step;
            g_hi = g_of(trial.y);
            if (!(g_hi < 0.0)) {
                // Hermite probe disagreed with the exact step on a double crossing;
                // scan the exact solution instead.
                for (int k = 1; k < probes && !(g_hi < 0.0); ++k) {
                    hi = step * k / probes;
                    g_hi = g(hi);
                }
                if (!(g_hi < 0.0)) return std::nullopt;
            }
        }
        double lo = 0.0;
        double g_lo = g(lo);
        if (g_lo < 0.0) {
            // already past the surface at the step start; switch immediately
            return std::make_pair(t0, z0);
        }
        if (g_lo == 0.0) {
            lo = hi * 1e-3;
            g_lo = g(lo);
            if (g_lo < 0.0) {
                return std::make_pair(t0 + lo, advance(lo));
            }
        }
        const double tol = options.event_time_tol;
        auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol; };
        std::uintmax_t iters = 100;
        const auto [a, b] = boost::math::tools::toms748_solve(g, lo, hi, g_lo, g_hi, stop, iters);
        (void)a;
        return std::make_pair(t0 + b, advance(b));
    }

    void finish()
    {
        traj.cost = 0.0;
        const auto& w = plant.omega;
        for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
            const auto& a = traj.samples[i];
            const auto& b = traj.samples[i + 1];
            const double h = b.t - a.t;
            if (h <= 0.0) continue;
            // exact integral of the squared cubic Hermite interpolant (Gauss 4 point)
            static constexpr double nodes[4] = {0.0694318442029737, 0.3300094782075719,
                                                0.6699905217924281, 0.9305681557970263};
            static constexpr double weights[4] = {0.1739274225687269, 0.3260725774312731,
                                                  0.3260725774312731, 0.1739274225687269};
            double acc = 0.0;
            for (int q = 0; q < 4; ++q) {
                const double s = nodes[q];
                const double s2 = s * s, s3 = s2 * s;
                const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
                const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
                const Eigen::VectorXd v = h00 * a.z.s + h10 * h * w.cwiseProduct(a.z.tau) +
                                          h01 * b.z.s + h11 * h * w.cwiseProduct(b.z.tau);
                acc += weights[q] * v.squaredNorm();
            }
            traj.cost += h * acc;
        }

        report.switch_times = traj.switch_times;
        const auto& st = report.switch_times;
        for (std::size_t i = 2; i < st.size(); ++i) {
            const double prev = st[i - 1] - st[i - 2];
            const double cur = st[i] - st[i - 1];
            if (prev > 0.0 && cur > 0.0) report.interval_ratios.push_back(cur / prev);
        }
        report.accumulation_estimate = st.empty() ? 0.0 : st.back();
        if (report.interval_ratios.size() >= 3 && st.size() >= 2) {
            const auto& r = report.interval_ratios;
            const double mean = (r[r.size() - 1] + r[r.size() - 2] + r[r.size() - 3]) / 3.0;
            if (mean < 1.0) {
                const double last = st[st.size() - 1] - st[st.size() - 2];
                report.accumulation_estimate = st.back() + last * mean / (1.0 - mean);
            }
        }
    }
};

}  // namespace

ExtremalRun integrate_extremal(const ExtremalState& z0, const ModalPlant& plant, double horizon,
                               const IntegrationOptions& options)
{
    check_plant(plant);
    const double w_max = plant.omega.size() ? plant.omega.cwiseAbs().maxCoeff() : 1.0;
    const double floor = options.chattering_floor > 0.0
                             ? options.chattering_floor
                             : 1e-6 * 2.0 * std::numbers::pi / w_max;
    Integrator integrator{plant, options, nullptr, horizon, floor, {}, {}};
    return integrator.run(z0);
}

ExtremalRun integrate_extremal(const ExtremalState& z0, const ModalPlant& plant,
                               const ControlSchedule& schedule, const IntegrationOptions& options)
{
    schedule.validate();
    Integrator integrator{plant, options, &schedule, schedule.horizon, 0.0, {}, {}};
    return integrator.run(z0);
}

double hamiltonian_drift(const Trajectory& trajectory)
{
    // the projection onto Sigma is a deliberate jump in psi and a control
    // change moves H by du H1, so every arc is measured from its own start:
    // the last sample before a switch, re-evaluated with the new control
    double drift = 0.0;
    double ref = 0.0;
    const TrajectorySample* prev = nullptr;
    for (const auto& s : trajectory.samples) {
        if (prev == nullptr || s.regime != prev->regime) {
            ref = s.H.H;
        } else if (s.u != prev->u) {
            ref = prev->H.H0 + s.u * prev->H.H1;
        }
        drift = std::max(drift, std::abs(s.H.H - ref) / (1.0 + std::abs(ref)));
        prev = &s;
    }
    return drift;
}

double hamiltonian_jump(const Trajectory& trajectory)
{
    double jump = 0.0;
    const auto& smp = trajectory.samples;
    for (std::size_t i = 1; i < smp.size(); ++i) {
        const auto& p = smp[i - 1];
        if (smp[i].u == p.u || smp[i].regime != p.regime) continue;
        jump = std::max(jump, std::abs((smp[i].u - p.u) * p.H.H1) / (1.0 + std::abs(p.H.H)));
    }
    return jump;
}

double ratio_spread(const std::vector<double>& ratios, std::size_t count)
{
    if (ratios.size() < count || count == 0) return std::numeric_limits<double>::infinity();
    const auto first = ratios.end() - static_cast<std::ptrdiff_t>(count);
    double mean = 0.0;
    for (auto it = first; it != ratios.end(); ++it) mean += *it;
    mean /= static_cast<double>(count);
    double var = 0.0;
    for (auto it = first; it != ratios.end(); ++it) var += (*it - mean) * (*it - mean);
    var /= static_cast<double>(count);
    return std::sqrt(var) / mean;
}

}  // namespace chatterbar
