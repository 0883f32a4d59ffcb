#include "chatterbar/quadrature.hpp"

#include "chatterbar/error.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace chatterbar::quad {

double simpson(std::span<const double> values, double spacing)
{
    const std::size_t n = values.size();
    if (n < 2) {
        throw Error(ErrorCode::resolution, "simpson: need at least two samples");
    }
    const std::size_t intervals = n - 1;
    if (intervals == 1) {
        return 0.5 * spacing * (values[0] + values[1]);
    }
    if (intervals == 2) {
        return spacing / 3.0 * (values[0] + 4.0 * values[1] + values[2]);
    }

    std::size_t simpson_end = intervals;  // index of last sample covered by 1/3 rule
    double tail = 0.0;
    if (intervals % 2 == 1) {
        simpson_end = intervals - 3;
        const std::size_t m = simpson_end;
        tail = 3.0 * spacing / 8.0 *
               (values[m] + 3.0 * values[m + 1] + 3.0 * values[m + 2] + values[m + 3]);
    }

    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < simpson_end; ++i) {
        (i % 2 == 1 ? odd : even) += values[i];
    }
    const double body =
        simpson_end == 0
            ? 0.0
            : spacing / 3.0 * (values[0] + 4.0 * odd + 2.0 * even + values[simpson_end]);
    return body + tail;
}

double adaptive(const std::function<double(double)>& f, double a, double b, double rel_tol,
                double abs_tol)
{
    using boost::math::quadrature::gauss_kronrod;
    double error = 0.0;
    double l1 = 0.0;
    const double value =
        gauss_kronrod<double, 15>::integrate(f, a, b, 20, rel_tol, &error, &l1);
    if (!std::isfinite(value) || error > std::max(rel_tol * l1, abs_tol) * 10.0) {
        throw Error(ErrorCode::integration,
                    fmt::format("adaptive quadrature did not converge on [{}, {}]: "
                                "error estimate {:.3e}",
                                a, b, error));
    }
    return value;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b)
{
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

}  // namespace chatterbar::quad
