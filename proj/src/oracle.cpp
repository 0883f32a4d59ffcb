#include "chatterbar/oracle.hpp"

#include "chatterbar/error.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/float128.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

namespace chatterbar {

namespace {

using quad_t = boost::multiprecision::float128;

/// Phase below which the closed forms lose digits to cancellation; the
/// 20-point Gauss-Legendre rule is exact to rounding there.
constexpr double kShortPhase = 2.0;

template <class Real, class F>
Real gauss20(F&& f, Real a, Real b)
{
    return boost::math::quadrature::gauss<Real, 20>::integrate(f, a, b);
}

template <class Real>
struct Complex {
    Real re{0};
    Real im{0};
};

/// One mode on one arc: rotation about the equilibrium (e, 0), e = c u / omega.
template <class Real>
struct ModeArc {
    Real s, tau, omega, e;

    Real s_at(Real r) const
    {
        using std::cos, std::sin;
        const Real th = omega * r;
        const Real half = sin(th / 2);
        return s * cos(th) + tau * sin(th) + 2 * e * half * half;
    }
    Real tau_at(Real r) const
    {
        using std::cos, std::sin;
        const Real th = omega * r;
        return tau * cos(th) - (s - e) * sin(th);
    }

    Real cost(Real d) const
    {
        using std::cos, std::sin;
        const Real phase = omega * d;
        if (phase < kShortPhase) {
            return gauss20<Real>([this](Real r) { const Real v = s_at(r); return v * v; },
                                 Real(0), d);
        }
        const Real a = s - e;
        const Real b = tau;
        const Real s1 = sin(phase), c1 = cos(phase);
        const Real s2 = sin(2 * phase), c2 = cos(2 * phase);
        return e * e * d + 2 * e * a * s1 / omega + 2 * e * b * (1 - c1) / omega +
               a * a * (d / 2 + s2 / (4 * omega)) + b * b * (d / 2 - s2 / (4 * omega)) +
               a * b * (1 - c2) / (2 * omega);
    }

    /// int_0^d exp(i omega r) s(r) dr
    Complex<Real> forcing(Real d) const
    {
        using std::cos, std::sin;
        const Real phase = omega * d;
        if (phase < kShortPhase) {
            return {gauss20<Real>([this](Real r) { return cos(omega * r) * s_at(r); }, Real(0), d),
                    gauss20<Real>([this](Real r) { return sin(omega * r) * s_at(r); }, Real(0), d)};
        }
        const Real sn = sin(phase), cs = cos(phase), s2 = sin(2 * phase);
        const Real sin_sq = sn * sn;
        const Complex<Real> a{sn, 1 - cs};
        const Complex<Real> bc{phase / 2 + s2 / 4, sin_sq / 2};
        const Complex<Real> bs{sin_sq / 2, phase / 2 - s2 / 4};
        return {(s * bc.re + tau * bs.re + e * (a.re - bc.re)) / omega,
                (s * bc.im + tau * bs.im + e * (a.im - bc.im)) / omega};
    }
};

template <class Real>
struct Plant {
    std::vector<Real> omega, c;
};

template <class Real>
struct State {
    std::vector<Real> s, tau;
};

template <class Real>
Plant<Real> plant_of(const ModalState& st)
{
    return {std::vector<Real>(st.omega.begin(), st.omega.end()),
            std::vector<Real>(st.c.begin(), st.c.end())};
}

template <class Real>
State<Real> state_of(const ModalState& st)
{
    return {std::vector<Real>(st.s.begin(), st.s.end()),
            std::vector<Real>(st.tau.begin(), st.tau.end())};
}

template <class Real>
ModeArc<Real> arc_of(const Plant<Real>& plant, const State<Real>& st, std::size_t j, double u)
{
    return {st.s[j], st.tau[j], plant.omega[j], plant.c[j] * u / plant.omega[j]};
}

template <class Real>
void propagate(const Plant<Real>& plant, State<Real>& st, double u, Real dt)
{
    for (std::size_t j = 0; j < st.s.size(); ++j) {
        const ModeArc<Real> arc = arc_of(plant, st, j, u);
        st.s[j] = arc.s_at(dt);
        st.tau[j] = arc.tau_at(dt);
    }
}

template <class Real>
Real arc_cost(const Plant<Real>& plant, const State<Real>& st, double u, Real dt)
{
    Real total = 0;
    for (std::size_t j = 0; j < st.s.size(); ++j) total += arc_of(plant, st, j, u).cost(dt);
    return total;
}

/// phi <- exp(i omega d) phi - int_0^d exp(i omega r) s(r) dr, the exact
/// backward step of phi = psi1 + i psi2 over one arc.
template <class Real>
void adjoint_step(const Plant<Real>& plant, const State<Real>& arc_start, double u, Real d,
                  std::vector<Complex<Real>>& phi)
{
    using std::cos, std::sin;
    for (std::size_t j = 0; j < phi.size(); ++j) {
        const ModeArc<Real> arc = arc_of(plant, arc_start, j, u);
        const Real th = arc.omega * d;
        const Real cs = cos(th), sn = sin(th);
        const Complex<Real> f = arc.forcing(d);
        const Real re = cs * phi[j].re - sn * phi[j].im - f.re;
        const Real im = sn * phi[j].re + cs * phi[j].im - f.im;
        phi[j] = {re, im};
    }
}

template <class Real>
Real h1_of(const Plant<Real>& plant, const std::vector<Complex<Real>>& phi)
{
    Real h1 = 0;
    for (std::size_t j = 0; j < phi.size(); ++j) h1 += phi[j].im * plant.c[j];
    return h1;
}

void check_dims(const ModalState& st)
{
    const auto n = st.s.size();
    if (st.tau.size() != n || st.omega.size() != n || st.c.size() != n) {
        throw Error(ErrorCode::dimension, "modal state blocks differ in length");
    }
}

/// Alternating bang pattern. Boundaries 0 = b_0 <= b_1 <= ... <= b_n <=
/// b_{n+1} = T; arc m covers [b_m, b_{m+1}].
struct Pattern {
    int sign = 1;
    int n_switches = 0;
    bool tail = true;

    int n_times() const { return n_switches + (tail ? 1 : 0); }
    double value(int arc) const
    {
        if (tail && arc == n_switches + 1) return 0.0;
        return (arc % 2 == 0) ? sign : -sign;
    }
    ControlSchedule schedule(const std::vector<double>& times, double horizon) const
    {
        std::vector<double> sw(times.begin(), times.begin() + n_switches);
        std::optional<double> entry;
        if (tail) entry = times.back();
        return ControlSchedule::bang(horizon, sign, std::move(sw), entry);
    }
};

template <class Real>
struct Problem {
    Plant<Real> plant;
    State<Real> state0;
    Pattern pattern;
    Real horizon;

    Problem(const ModalState& st, Pattern p, double T)
        : plant(plant_of<Real>(st)), state0(state_of<Real>(st)), pattern(p), horizon(T)
    {
    }

    Real boundary(const std::vector<Real>& times, int m) const
    {
        if (m == 0) return Real(0);
        if (m == static_cast<int>(times.size()) + 1) return horizon;
        return times[static_cast<std::size_t>(m - 1)];
    }

    /// Cost of arcs m >= first, starting from `start` at boundary `first`.
    Real suffix_cost(const std::vector<Real>& times, int first, State<Real> start) const
    {
        Real total = 0;
        const int arcs = static_cast<int>(times.size()) + 1;
        for (int m = first; m < arcs; ++m) {
            const Real d = boundary(times, m + 1) - boundary(times, m);
            if (!(d > 0)) continue;
            const double u = pattern.value(m);
            total += arc_cost(plant, start, u, d);
            if (m + 1 < arcs) propagate(plant, start, u, d);
        }
        return total;
    }

    Real total_cost(const std::vector<Real>& times) const { return suffix_cost(times, 0, state0); }

    std::vector<State<Real>> boundary_states(const std::vector<Real>& times) const
    {
        std::vector<State<Real>> out{state0};
        State<Real> st = state0;
        for (int m = 0; m < static_cast<int>(times.size()); ++m) {
            const Real d = boundary(times, m + 1) - boundary(times, m);
            if (d > 0) propagate(plant, st, pattern.value(m), d);
            out.push_back(st);
        }
        return out;
    }

    /// H1 at b_1..b_n from one backward pass with psi(T) = 0.
    std::vector<Real> residuals(const std::vector<Real>& times) const
    {
        const auto states = boundary_states(times);
        const int arcs = static_cast<int>(times.size()) + 1;
        std::vector<Complex<Real>> phi(state0.s.size());
        std::vector<Real> out(times.size());
        for (int m = arcs - 1; m >= 1; --m) {
            const Real d = boundary(times, m + 1) - boundary(times, m);
            if (d > 0) adjoint_step(plant, states[static_cast<std::size_t>(m)], pattern.value(m), d, phi);
            out[static_cast<std::size_t>(m - 1)] = h1_of(plant, phi);
        }
        return out;
    }

    bool gaps_positive(const std::vector<Real>& times) const
    {
        for (int m = 0; m <= static_cast<int>(times.size()); ++m) {
            if (!(boundary(times, m + 1) - boundary(times, m) > 0)) return false;
        }
        return true;
    }

    Real local_gap(const std::vector<Real>& times, int k) const
    {
        using std::min;
        return min(boundary(times, k + 1) - boundary(times, k),
                   boundary(times, k + 2) - boundary(times, k + 1));
    }
};

/// Coordinate descent with Brent line searches on the suffix cost; only the
/// arcs after t_{i-1} depend on t_i, and their cost stays resolvable when the
/// total cost no longer changes in the last digit. Returns the sweep count,
/// negated when the sweep limit was hit.
int coordinate_descent(const Problem<double>& pb, std::vector<double>& times, int max_sweeps,
                       double rel_tol)
{
    const int n = static_cast<int>(times.size());
    if (n == 0) return 0;
    double cost = pb.total_cost(times);
    int sweep = 0;
    bool converged = false;
    for (; sweep < max_sweeps && !converged; ++sweep) {
        double worst = 0.0;
        State<double> st = pb.state0;
        for (int i = 0; i < n; ++i) {
            auto& ti = times[static_cast<std::size_t>(i)];
            const double lo = pb.boundary(times, i);
            const double hi = pb.boundary(times, i + 2);
            const double old = ti;
            if (hi > lo) {
                auto f = [&](double t) {
                    ti = t;
                    return pb.suffix_cost(times, i, st);
                };
                // offsets from lo keep Brent's relative tolerance meaningful for
                // short intervals late in the horizon
                std::uintmax_t iters = 200;
                const auto best = boost::math::tools::brent_find_minima(
                    [&](double off) { return f(lo + off); }, 0.0, hi - lo,
                    std::numeric_limits<double>::digits / 2, iters);
                double keep = old;
                double keep_cost = f(old);
                for (double cand : {lo + best.first, lo, hi}) {
                    const double c = f(cand);
                    if (c < keep_cost) {
                        keep = cand;
                        keep_cost = c;
                    }
                }
                ti = keep;
                worst = std::max(worst, std::abs(keep - old) / (hi - lo));
            }
            const double d = pb.boundary(times, i + 1) - lo;
            if (d > 0.0) propagate(pb.plant, st, pb.pattern.value(i), d);
        }
        // a sweep that no longer lowers the cost has reached the rounding floor
        const double next = pb.total_cost(times);
        converged = worst <= rel_tol || !(next < cost - 1e-15 * std::abs(cost));
        cost = next;
    }
    return converged ? sweep : -sweep;
}

/// Levenberg-Marquardt on the first-order conditions dJ/dt_i = 0, with
/// dJ/dt_i = -2 (u_{i-1} - u_i) H1(t_i) from the adjoint pass and the
/// Hessian from central differences of that gradient. Steps are accepted on
/// the cost itself, which in quad precision still resolves the late
/// switches of a chattering schedule.
template <class Real>
void newton_polish(const Problem<Real>& pb, std::vector<Real>& times, int max_iter)
{
    using std::abs, std::cbrt;
    const int n = static_cast<int>(times.size());
    if (n == 0 || !pb.gaps_positive(times)) return;
    using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
    const Real eps = std::numeric_limits<Real>::epsilon();
    const Real fd_rel = cbrt(eps);

    std::vector<Real> jump(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        jump[static_cast<std::size_t>(i)] = -2 * (pb.pattern.value(i) - pb.pattern.value(i + 1));
    }
    auto gradient = [&](const std::vector<Real>& t) {
        const auto h1 = pb.residuals(t);
        Vec g(n);
        for (int i = 0; i < n; ++i) g[i] = jump[static_cast<std::size_t>(i)] * h1[static_cast<std::size_t>(i)];
        return g;
    };

    Real cost = pb.total_cost(times);
    Vec g = gradient(times);
    Mat hess(n, n);
    Real mu = Real(1e-3);
    for (int iter = 0; iter < max_iter; ++iter) {
        for (int k = 0; k < n; ++k) {
            const Real h = fd_rel * pb.local_gap(times, k);
            std::vector<Real> plus = times, minus = times;
            plus[static_cast<std::size_t>(k)] += h;
            minus[static_cast<std::size_t>(k)] -= h;
            hess.col(k) = (gradient(plus) - gradient(minus)) / (2 * h);
        }
        const Mat sym = (hess + hess.transpose()) / 2;
        Vec diag(n);
        for (int k = 0; k < n; ++k) {
            const Real d = abs(sym(k, k));
            diag[k] = d > std::numeric_limits<Real>::min() ? d : Real(1);
        }
        bool accepted = false;
        Vec step;
        while (mu < Real(1e12)) {
            Mat lhs = sym;
            for (int k = 0; k < n; ++k) lhs(k, k) += mu * diag[k];
            step = lhs.ldlt().solve(-g);
            std::vector<Real> trial = times;
            bool finite = true;
            for (int k = 0; k < n; ++k) {
                trial[static_cast<std::size_t>(k)] += step[k];
                finite = finite && boost::math::isfinite(step[k]);
            }
            if (finite && pb.gaps_positive(trial)) {
                const Real c = pb.total_cost(trial);
                if (c < cost) {
                    times = std::move(trial);
                    cost = c;
                    accepted = true;
                    mu = mu / 3 > eps ? mu / 3 : eps;
                    break;
                }
            }
            mu *= 4;
        }
        if (!accepted) break;
        g = gradient(times);
        Real move = 0;
        for (int k = 0; k < n; ++k) {
            const Real rel = abs(step[k]) / pb.local_gap(times, k);
            if (rel > move) move = rel;
        }
        if (move < 64 * eps) break;
    }
}

/// Exhaustive search over nondecreasing time tuples on a uniform grid,
/// pruned once the running cost exceeds the best complete schedule.
std::vector<double> grid_search(const Problem<double>& pb, int n_times, long budget, int max_steps)
{
    auto combos = [n_times](long m) {
        double c = 1.0;
        for (int k = 1; k <= n_times; ++k) c = c * static_cast<double>(m + k) / k;
        return c;
    };
    long m = max_steps;
    while (m > 4 && combos(m) > static_cast<double>(budget)) m = static_cast<long>(m * 0.9);
    const double window = pb.horizon;
    const double step = window / static_cast<double>(m);

    std::vector<double> times(static_cast<std::size_t>(n_times), 0.0);
    std::vector<double> best_times = times;
    double best = std::numeric_limits<double>::infinity();

    std::function<void(int, long, double, const State<double>&, double)> rec =
        [&](int level, long k_min, double prev_t, const State<double>& st, double acc) {
            if (level == n_times) {
                const double total = acc + pb.suffix_cost(times, level, st);
                if (total < best) {
                    best = total;
                    best_times = times;
                }
                return;
            }
            for (long k = k_min; k <= m; ++k) {
                const double t = std::min(step * static_cast<double>(k), window);
                times[static_cast<std::size_t>(level)] = t;
                const double d = t - prev_t;
                const double u = pb.pattern.value(level);
                State<double> next = st;
                double arc = 0.0;
                if (d > 0.0) {
                    arc = arc_cost(pb.plant, st, u, d);
                    propagate(pb.plant, next, u, d);
                }
                if (acc + arc >= best) break;  // later arcs only add cost
                rec(level + 1, k, t, next, acc + arc);
            }
        };
    rec(0, 0, 0.0, pb.state0, 0.0);
    return best_times;
}

double time_scale(const ModalState& st)
{
    double scale = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < st.s.size(); ++j) {
        const double amp = std::hypot(st.s[j], st.tau[j]);
        const double accel = std::abs(st.c[j]) * st.omega[j];
        const double quarter = 0.5 * std::numbers::pi / st.omega[j];
        if (amp > 0.0 && accel > 0.0) {
            scale = std::min(scale, std::min(quarter, std::sqrt(2.0 * amp / accel)));
        }
    }
    if (!std::isfinite(scale)) scale = 0.5 * std::numbers::pi / st.omega.front();
    return scale;
}

struct Candidate {
    Pattern pattern;
    std::vector<double> times;
    double cost = 0.0;
    int sweeps = 0;
    bool from_grid = false;
};

}  // namespace

ModalState propagate_interval(const ModalState& state, double u, double dt)
{
    check_dims(state);
    const Plant<double> plant = plant_of<double>(state);
    State<double> st = state_of<double>(state);
    propagate(plant, st, u, dt);
    ModalState out = state;
    out.s = st.s;
    out.tau = st.tau;
    return out;
}

double interval_cost(const ModalState& state, double u, double dt)
{
    check_dims(state);
    if (dt < 0.0) {
        throw Error(ErrorCode::domain, "interval_cost: dt must be nonnegative");
    }
    if (dt == 0.0) return 0.0;
    return arc_cost(plant_of<double>(state), state_of<double>(state), u, dt);
}

ScheduleEvaluation evaluate_schedule(const ModalState& state0, const ControlSchedule& schedule)
{
    check_dims(state0);
    schedule.validate();
    const Plant<double> plant = plant_of<double>(state0);
    State<double> st = state_of<double>(state0);
    ScheduleEvaluation out;
    double t = 0.0;
    for (std::size_t m = 0; m < schedule.values.size(); ++m) {
        const double end =
            m < schedule.switch_times.size() ? schedule.switch_times[m] : schedule.horizon;
        const double d = end - t;
        const double u = schedule.values[m];
        IntervalRecord rec{t, end, u, 0.0};
        if (d > 0.0) {
            rec.cost = arc_cost(plant, st, u, d);
            propagate(plant, st, u, d);
        }
        out.cost += rec.cost;
        out.intervals.push_back(rec);
        t = end;
    }
    double rate = 0.0;
    for (std::size_t j = 0; j < st.s.size(); ++j) {
        rate += 0.5 * (st.s[j] * st.s[j] + st.tau[j] * st.tau[j]);
    }
    out.tail_cost_rate = rate;
    out.final_state = state0;
    out.final_state.s = st.s;
    out.final_state.tau = st.tau;
    return out;
}

std::vector<ModalState> sample_schedule(const ModalState& state0, const ControlSchedule& schedule,
                                        std::span<const double> times)
{
    check_dims(state0);
    schedule.validate();
    std::vector<ModalState> out;
    out.reserve(times.size());
    ModalState arc_start = state0;
    double arc_t0 = 0.0;
    std::size_t arc = 0;
    double prev = -std::numeric_limits<double>::infinity();
    for (double t : times) {
        if (t < prev || t < 0.0 || t > schedule.horizon) {
            throw Error(ErrorCode::domain, "sample_schedule: times must be nondecreasing in [0, T]");
        }
        prev = t;
        while (arc < schedule.switch_times.size() && schedule.switch_times[arc] <= t) {
            arc_start = propagate_interval(arc_start, schedule.values[arc],
                                           schedule.switch_times[arc] - arc_t0);
            arc_t0 = schedule.switch_times[arc];
            ++arc;
        }
        out.push_back(propagate_interval(arc_start, schedule.values[arc], t - arc_t0));
    }
    return out;
}

double default_horizon(const ModalState& state)
{
    check_dims(state);
    if (state.omega.empty()) throw Error(ErrorCode::dimension, "empty modal state");
    return 20.0 * 2.0 * std::numbers::pi / state.omega.front();
}

OptimizationResult optimize_switch_times(const ModalState& state0, int n_switches, double horizon,
                                         const OptimizerOptions& options,
                                         const OptimizationResult* previous)
{
    check_dims(state0);
    if (n_switches < 0) throw Error(ErrorCode::domain, "number of switches must be nonnegative");
    if (!(horizon > 0.0)) throw Error(ErrorCode::domain, "horizon must be positive");

    std::vector<Candidate> candidates;
    auto refine = [&](const Pattern& pattern, std::vector<double> times, bool from_grid) {
        const Problem<double> pb(state0, pattern, horizon);
        const int sweeps = coordinate_descent(pb, times, options.max_sweeps, options.rel_tol);
        if (options.polish) newton_polish(pb, times, 300);
        candidates.push_back({pattern, times, pb.total_cost(times), sweeps, from_grid});
    };

    const int n_times = n_switches + (options.singular_tail ? 1 : 0);
    if (n_times == 0) {
        for (int sign : {1, -1}) refine(Pattern{sign, 0, false}, {}, false);
    }

    // Seeds from the K-1 result: its last boundary duplicated (same cost, so
    // the family stays monotone) and its interval sequence extended
    // geometrically, which is where a chattering optimum moves next.
    if (n_times > 0 && previous != nullptr && previous->n_switches == n_switches - 1) {
        const auto& prev = previous->schedule;
        std::vector<double> base = prev.bang_switches();
        if (options.singular_tail) base.push_back(prev.singular_entry().value_or(horizon));
        const Pattern pattern{prev.leading_sign(), n_switches, options.singular_tail};

        std::vector<double> dup = base;
        dup.push_back(base.empty() ? horizon : base.back());
        refine(pattern, dup, false);
        if (!base.empty()) {
            // intervals d_1..d_m; the last ones are distorted by the approach to
            // the tail, so the extension reuses the interior ratio and keeps
            // the final end ratio
            std::vector<double> d;
            double prev_t = 0.0;
            for (double t : base) {
                d.push_back(t - prev_t);
                prev_t = t;
            }
            const std::size_t m = d.size();
            double q = 0.25;
            if (m >= 3 && d[m - 3] > 0.0 && d[m - 2] > 0.0 && d[m - 2] < d[m - 3]) {
                q = d[m - 2] / d[m - 3];
            }
            const double end_ratio =
                (m >= 2 && d[m - 2] > 0.0 && d[m - 1] > 0.0) ? d[m - 1] / d[m - 2] : q;
            std::vector<double> ext(base.begin(), base.end() - 1);
            const double anchor = m >= 2 ? base[m - 2] : 0.0;
            const double inserted = (m >= 2 ? d[m - 2] : d[m - 1]) * q;
            ext.push_back(std::min(horizon, anchor + inserted));
            ext.push_back(std::min(horizon, ext.back() + inserted * end_ratio));
            refine(pattern, ext, false);
        }
    }

    if (n_times > 0) {
        std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(n_switches) * 7919u);
        std::uniform_real_distribution<double> first_scale(0.5, 2.5);
        std::uniform_real_distribution<double> ratio_dist(0.15, 0.5);
        const double scale = time_scale(state0);
        for (int sign : {1, -1}) {
            const Pattern pattern{sign, n_switches, options.singular_tail};
            for (int start = 0; start < options.starts; ++start) {
                std::vector<double> times;
                double t = 0.0;
                double d = scale * first_scale(rng);
                const double r = ratio_dist(rng);
                for (int k = 0; k < n_times; ++k) {
                    t = std::min(t + d, horizon);
                    times.push_back(t);
                    d *= r;
                }
                refine(pattern, times, false);
            }
            if (options.grid_search && n_switches <= 3) {
                const Problem<double> pb(state0, pattern, horizon);
                refine(pattern, grid_search(pb, n_times, options.grid_budget, options.grid_steps),
                       true);
            }
        }
    }

    double best_double = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) best_double = std::min(best_double, c.cost);

    // Candidates tied in double precision are separated in quad precision,
    // where the late switches of a chattering schedule still move the cost.
    const Candidate* winner = nullptr;
    quad_t winner_cost = std::numeric_limits<quad_t>::infinity();
    std::vector<double> winner_times;
    for (const auto& c : candidates) {
        if (!(c.cost <= best_double + 1e-9 * std::abs(best_double))) continue;
        const Problem<quad_t> pb(state0, c.pattern, horizon);
        std::vector<quad_t> times(c.times.begin(), c.times.end());
        if (options.polish) newton_polish(pb, times, 200);
        const quad_t cost = pb.total_cost(times);
        if (winner == nullptr || cost < winner_cost) {
            winner = &c;
            winner_cost = cost;
            winner_times.assign(times.size(), 0.0);
            for (std::size_t i = 0; i < times.size(); ++i) winner_times[i] = static_cast<double>(times[i]);
        }
    }

    OptimizationResult out;
    out.n_switches = n_switches;
    out.schedule = winner->pattern.schedule(winner_times, horizon);
    out.cost = static_cast<double>(winner_cost);
    out.cost_lo = static_cast<double>(winner_cost - quad_t(out.cost));
    out.sweeps = std::abs(winner->sweeps);
    out.stagnated = winner->sweeps < 0;
    out.from_grid = winner->from_grid;
    return out;
}

std::vector<OptimizationResult> optimize_family(const ModalState& state0, int max_switches,
                                                double horizon, const OptimizerOptions& options)
{
    std::vector<OptimizationResult> out;
    for (int k = 0; k <= max_switches; ++k) {
        out.push_back(optimize_switch_times(state0, k, horizon, options,
                                            out.empty() ? nullptr : &out.back()));
        if (out.size() >= 2) {
            const auto& a = out[out.size() - 2];
            auto& b = out.back();
            b.cost_gain = (a.cost - b.cost) + (a.cost_lo - b.cost_lo);
        }
    }
    return out;
}

AdjointEstimate discrete_adjoint(const ModalState& state0, const ControlSchedule& schedule,
                                 double tolerance)
{
    check_dims(state0);
    schedule.validate();
    const std::size_t n = state0.s.size();
    const Plant<double> plant = plant_of<double>(state0);

    struct Arc {
        double t0, t1, u;
        State<double> start;
    };
    std::vector<Arc> arcs;
    State<double> st = state_of<double>(state0);
    double t = 0.0;
    for (std::size_t m = 0; m < schedule.values.size(); ++m) {
        const double end =
            m < schedule.switch_times.size() ? schedule.switch_times[m] : schedule.horizon;
        arcs.push_back(Arc{t, end, schedule.values[m], st});
        if (end > t) propagate(plant, st, schedule.values[m], end - t);
        t = end;
    }

    AdjointEstimate out;
    out.tolerance = tolerance;
    std::vector<Complex<double>> phi(n);
    std::vector<double> h1_at_start(arcs.size(), 0.0);
    std::vector<double> h1_arc_max(arcs.size(), 0.0);
    const double fastest = *std::max_element(state0.omega.begin(), state0.omega.end());
    for (std::size_t m = arcs.size(); m-- > 0;) {
        const Arc& arc = arcs[m];
        const double d = arc.t1 - arc.t0;
        if (d > 0.0) {
            // H1 inside the arc, for the trajectory maximum
            const int pieces = std::clamp(static_cast<int>(std::ceil(d * fastest / 0.5)), 1, 4096);
            for (int k = 1; k < pieces; ++k) {
                const double r = d * static_cast<double>(k) / pieces;
                State<double> mid = arc.start;
                propagate(plant, mid, arc.u, r);
                std::vector<Complex<double>> tmp = phi;
                adjoint_step(plant, mid, arc.u, d - r, tmp);
                const double h = std::abs(h1_of(plant, tmp));
                out.h1_max = std::max(out.h1_max, h);
                h1_arc_max[m] = std::max(h1_arc_max[m], h);
            }
            adjoint_step(plant, arc.start, arc.u, d, phi);
        }
        h1_at_start[m] = h1_of(plant, phi);
        out.h1_max = std::max(out.h1_max, std::abs(h1_at_start[m]));
        h1_arc_max[m] = std::max(h1_arc_max[m], std::abs(h1_at_start[m]));
    }

    // psi(0) seeds an unstable forward integration; a quad-precision pass
    // removes the rounding accumulated along the long tail arc
    const Plant<quad_t> qplant = plant_of<quad_t>(state0);
    std::vector<State<quad_t>> qstarts;
    {
        State<quad_t> q = state_of<quad_t>(state0);
        for (const Arc& arc : arcs) {
            qstarts.push_back(q);
            if (arc.t1 > arc.t0) propagate(qplant, q, arc.u, quad_t(arc.t1) - quad_t(arc.t0));
        }
    }
    std::vector<Complex<quad_t>> qphi(n);
    for (std::size_t m = arcs.size(); m-- > 0;) {
        if (arcs[m].t1 > arcs[m].t0) {
            adjoint_step(qplant, qstarts[m], arcs[m].u, quad_t(arcs[m].t1) - quad_t(arcs[m].t0), qphi);
        }
    }

    out.z0 = ExtremalState::zero(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const auto e = static_cast<Eigen::Index>(j);
        out.z0.psi1[e] = static_cast<double>(qphi[j].re);
        out.z0.psi2[e] = static_cast<double>(qphi[j].im);
        out.z0.s[e] = state0.s[j];
        out.z0.tau[e] = state0.tau[j];
    }

    for (std::size_t m = 1; m < arcs.size(); ++m) {
        if (arcs[m].u == arcs[m - 1].u || !(arcs[m].t0 < schedule.horizon)) continue;
        out.switch_times.push_back(arcs[m].t0);
        out.h1_at_switch.push_back(h1_at_start[m]);
    }
    for (std::size_t i = 0; i < out.h1_at_switch.size(); ++i) {
        if (std::abs(out.h1_at_switch[i]) > tolerance * out.h1_max) {
            out.violations.push_back(static_cast<int>(i));
        }
    }
    // an interior control value is only extremal where H1 vanishes identically
    for (std::size_t m = 0; m < arcs.size(); ++m) {
        if (std::abs(arcs[m].u) < 1.0 && arcs[m].t1 > arcs[m].t0 &&
            h1_arc_max[m] > tolerance * out.h1_max) {
            out.arc_violations.push_back(static_cast<int>(m));
        }
    }
    return out;
}

}  // namespace chatterbar
