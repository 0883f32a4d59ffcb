#pragma once

#include <functional>
#include <span>

namespace chatterbar::quad {

/// Composite Simpson rule on uniformly spaced samples. An odd number of
/// intervals is closed with Simpson's 3/8 rule on the last three intervals.
/// Requires at least two samples (a single interval falls back to trapezoid).
double simpson(std::span<const double> values, double spacing);

/// Adaptive Gauss-Kronrod (15-point) integration of a smooth function.
/// Throws Error{integration} when the estimated relative error exceeds
/// `rel_tol` after the maximum recursion depth.
double adaptive(const std::function<double(double)>& f, double a, double b,
                double rel_tol = 1e-10, double abs_tol = 0.0);

/// 20-point Gauss-Legendre rule on [a, b]. Exact to rounding for the
/// low-degree trigonometric integrands used by closed-form propagation when
/// the phase span is at most a few radians.
double gauss_legendre(const std::function<double(double)>& f, double a, double b);

}  // namespace chatterbar::quad
