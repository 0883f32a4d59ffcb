#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace chatterbar {

using ScalarFunction = std::function<double(double)>;

/// Bar data: mass density times area p(x), stiffness times area k(x), force
/// profile f(x) on [0, length]. `p_floor` and `k_floor` are the positive
/// lower bounds the coefficients must respect at every evaluation point.
struct CoefficientProfile {
    std::string name;
    double length = 0.0;
    ScalarFunction p;
    ScalarFunction k;
    ScalarFunction f;
    double p_floor = 0.0;
    double k_floor = 0.0;

    /// p = p0, k = k0 on [0, length].
    static CoefficientProfile constant(double length, double p0 = 1.0, double k0 = 1.0);
    /// p = k = exp(rate * x); the Liouville-transformed problem has
    /// eigenvalues (j pi / l)^2 + rate^2 / 4.
    static CoefficientProfile exponential(double length = 1.0, double rate = 1.0);
    /// p = 1 + slope * x, k = 1.
    static CoefficientProfile affine(double length = 1.0, double slope = 1.0);
    /// Tabulated columns on a uniform x grid starting at 0, interpolated by
    /// cubic B-splines.
    static CoefficientProfile tabulated(std::span<const double> x, std::span<const double> p,
                                        std::span<const double> k, std::span<const double> f);

    CoefficientProfile with_force(ScalarFunction force) const;

    /// Throws Error{coefficient_positivity} when p or k drops below its floor
    /// (or is non-positive / non-finite) at any of the given points, and
    /// Error{domain} for a non-positive length.
    void validate(std::span<const double> points) const;
};

namespace force {
/// sin(pi x / l)
ScalarFunction sine(double length);
/// x^4 (l - x)^4, vanishing with three derivatives at both ends.
ScalarFunction clamped_quartic(double length);
ScalarFunction zero();
}  // namespace force

}  // namespace chatterbar
