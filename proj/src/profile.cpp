#include "chatterbar/profile.hpp"

#include "chatterbar/error.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <memory>
#include <numbers>

namespace chatterbar {

CoefficientProfile CoefficientProfile::constant(double length, double p0, double k0)
{
    CoefficientProfile out;
    out.name = "constant";
    out.length = length;
    out.p = [p0](double) { return p0; };
    out.k = [k0](double) { return k0; };
    out.f = force::sine(length);
    out.p_floor = p0;
    out.k_floor = k0;
    return out;
}

CoefficientProfile CoefficientProfile::exponential(double length, double rate)
{
    CoefficientProfile out;
    out.name = "exponential";
    out.length = length;
    out.p = [rate](double x) { return std::exp(rate * x); };
    out.k = [rate](double x) { return std::exp(rate * x); };
    out.f = force::sine(length);
    const double lo = std::min(1.0, std::exp(rate * length));
    out.p_floor = lo;
    out.k_floor = lo;
    return out;
}

CoefficientProfile CoefficientProfile::affine(double length, double slope)
{
    CoefficientProfile out;
    out.name = "affine";
    out.length = length;
    out.p = [slope](double x) { return 1.0 + slope * x; };
    out.k = [](double) { return 1.0; };
    out.f = force::sine(length);
    out.p_floor = std::min(1.0, 1.0 + slope * length);
    out.k_floor = 1.0;
    return out;
}

CoefficientProfile CoefficientProfile::tabulated(std::span<const double> x,
                                                 std::span<const double> p,
                                                 std::span<const double> k,
                                                 std::span<const double> f)
{
    const std::size_t n = x.size();
    if (n < 4 || p.size() != n || k.size() != n || f.size() != n) {
        throw Error(ErrorCode::dimension,
                    "tabulated profile needs at least 4 rows with equal column lengths");
    }
    if (x.front() != 0.0) {
        throw Error(ErrorCode::config, "tabulated profile must start at x = 0");
    }
    const double step = (x.back() - x.front()) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        const double expected = x.front() + step * static_cast<double>(i);
        if (std::abs(x[i] - expected) > 1e-9 * x.back()) {
            throw Error(ErrorCode::config, "tabulated profile requires uniformly spaced x");
        }
    }

    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    auto make = [&](std::span<const double> col) {
        auto spline = std::make_shared<Spline>(col.begin(), col.end(), 0.0, step);
        const double end = x.back();
        return ScalarFunction([spline, end](double xx) {
            return (*spline)(std::clamp(xx, 0.0, end));
        });
    };

    CoefficientProfile out;
    out.name = "tabulated";
    out.length = x.back();
    out.p = make(p);
    out.k = make(k);
    out.f = make(f);
    out.p_floor = *std::min_element(p.begin(), p.end());
    out.k_floor = *std::min_element(k.begin(), k.end());
    if (!(out.p_floor > 0.0) || !(out.k_floor > 0.0)) {
        throw Error(ErrorCode::coefficient_positivity,
                    "tabulated profile has non-positive p or k samples");
    }
    return out;
}

CoefficientProfile CoefficientProfile::with_force(ScalarFunction force) const
{
    CoefficientProfile out = *this;
    out.f = std::move(force);
    return out;
}

void CoefficientProfile::validate(std::span<const double> points) const
{
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw Error(ErrorCode::domain, fmt::format("bar length must be positive, got {}", length));
    }
    if (!(p_floor > 0.0) || !(k_floor > 0.0)) {
        throw Error(ErrorCode::coefficient_positivity, "p_floor and k_floor must be positive");
    }
    // Relative slack absorbs spline and rounding noise at the floor itself.
    for (double x : points) {
        const double pv = p(x);
        const double kv = k(x);
        if (!std::isfinite(pv) || pv < p_floor * (1.0 - 1e-12)) {
            throw Error(ErrorCode::coefficient_positivity,
                        fmt::format("p({}) = {} violates p >= {}", x, pv, p_floor));
        }
        if (!std::isfinite(kv) || kv < k_floor * (1.0 - 1e-12)) {
            throw Error(ErrorCode::coefficient_positivity,
                        fmt::format("k({}) = {} violates k >= {}", x, kv, k_floor));
        }
    }
}

namespace force {

ScalarFunction sine(double length)
{
    return [length](double x) { return std::sin(std::numbers::pi * x / length); };
}

ScalarFunction clamped_quartic(double length)
{
    return [length](double x) {
        const double a = x * (length - x);
        const double a2 = a * a;
        return a2 * a2;
    };
}

ScalarFunction zero()
{
    return [](double) { return 0.0; };
}

}  // namespace force

}  // namespace chatterbar
