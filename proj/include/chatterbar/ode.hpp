#pragma once

#include "chatterbar/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <span>
#include <vector>

namespace chatterbar::ode {

using Vector = Eigen::VectorXd;

struct Tolerances {
    double atol = 1e-10;
    double rtol = 1e-10;
};

/// One Dormand-Prince 5(4) step. `dydt` holds the derivative at (t, y);
/// on return `dydt_new` holds the derivative at the new point (FSAL).
struct Step {
    Vector y;
    Vector dydt;
    double error = 0.0;  // scaled RMS error estimate, accept when <= 1
};

template <class Rhs>
Step dopri5_step(const Rhs& rhs, double t, const Vector& y, const Vector& dydt, double h,
                 const Tolerances& tol)
{
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const Vector& k1 = dydt;
    const Vector k2 = rhs(t + c2 * h, Vector(y + h * a21 * k1));
    const Vector k3 = rhs(t + c3 * h, Vector(y + h * (a31 * k1 + a32 * k2)));
    const Vector k4 = rhs(t + c4 * h, Vector(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const Vector k5 =
        rhs(t + c5 * h, Vector(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const Vector k6 = rhs(
        t + h, Vector(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));

    Step out;
    out.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    out.dydt = rhs(t + h, out.y);
    const Vector err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * out.dydt);

    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double scale =
            tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(out.y[i]));
        const double r = scale > 0.0 ? err[i] / scale : 0.0;
        acc += r * r;
    }
    out.error = y.size() > 0 ? std::sqrt(acc / static_cast<double>(y.size())) : 0.0;
    return out;
}

/// Cubic Hermite interpolation between two accepted points.
inline Vector hermite(double t0, const Vector& y0, const Vector& f0, double t1,
                      const Vector& y1, const Vector& f1, double t)
{
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1;
}

/// Step-size update from a scaled error estimate (order 5 controller).
inline double next_step_size(double h, double error)
{
    constexpr double safety = 0.9;
    constexpr double min_factor = 0.2;
    constexpr double max_factor = 5.0;
    if (error == 0.0) {
        return h * max_factor;
    }
    const double factor = safety * std::pow(error, -0.2);
    return h * std::clamp(factor, min_factor, max_factor);
}

/// Integrates y' = rhs(t, y) from t0, returning the state at each requested
/// output time. Output times must be nondecreasing and not before t0; the
/// integrator steps exactly onto every output time.
template <class Rhs>
std::vector<Vector> integrate_to(const Rhs& rhs, double t0, Vector y, std::span<const double> outputs,
                                 const Tolerances& tol, double initial_step = 0.0,
                                 long max_steps = 10'000'000)
{
    std::vector<Vector> result;
    result.reserve(outputs.size());
    double t = t0;
    Vector dydt = rhs(t, y);
    double h = initial_step;
    if (h <= 0.0) {
        const double span = outputs.empty() ? 1.0 : std::abs(outputs.back() - t0);
        h = std::max(span * 1e-3, 1e-8);
    }
    long steps = 0;
    for (double target : outputs) {
        if (target < t) {
            throw Error(ErrorCode::domain, "integrate_to: output times must be nondecreasing");
        }
        while (t < target) {
            const bool last = t + h >= target;
            const double step = last ? target - t : h;
            Step s = dopri5_step(rhs, t, y, dydt, step, tol);
            if (s.error <= 1.0) {
                t = last ? target : t + step;
                y = std::move(s.y);
                dydt = std::move(s.dydt);
                h = last ? std::max(h, next_step_size(step, s.error))
                         : next_step_size(step, s.error);
            } else {
                h = next_step_size(step, s.error);
            }
            if (h < 1e-15 * std::max(1.0, std::abs(t))) {
                throw Error(ErrorCode::stiffness,
                            fmt::format("integrate_to: step size underflow at t = {}", t));
            }
            if (++steps > max_steps) {
                throw Error(ErrorCode::integration, "integrate_to: step budget exhausted");
            }
        }
        result.push_back(y);
    }
    return result;
}

}  // namespace chatterbar::ode
