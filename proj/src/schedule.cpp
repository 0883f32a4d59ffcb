#include "chatterbar/schedule.hpp"

#include "chatterbar/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace chatterbar {

ControlSchedule ControlSchedule::bang(double horizon, int leading_sign,
                                      std::vector<double> switches,
                                      std::optional<double> singular_entry)
{
    if (leading_sign != 1 && leading_sign != -1) {
        throw Error(ErrorCode::domain, "leading sign must be +1 or -1");
    }
    ControlSchedule out;
    out.horizon = horizon;
    double sign = leading_sign;
    out.values.push_back(sign);
    for (double t : switches) {
        out.switch_times.push_back(t);
        sign = -sign;
        out.values.push_back(sign);
    }
    if (singular_entry) {
        out.switch_times.push_back(*singular_entry);
        out.values.push_back(0.0);
    }
    return out;
}

ControlSchedule ControlSchedule::constant(double horizon, double value)
{
    ControlSchedule out;
    out.horizon = horizon;
    out.values = {value};
    return out;
}

void ControlSchedule::validate() const
{
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorCode::domain, fmt::format("schedule horizon must be positive, got {}", horizon));
    }
    if (values.size() != switch_times.size() + 1) {
        throw Error(ErrorCode::domain, "schedule needs exactly one value per interval");
    }
    for (double v : values) {
        if (!(std::abs(v) <= 1.0)) {
            throw Error(ErrorCode::control_bound, fmt::format("control value {} outside [-1, 1]", v));
        }
    }
    double prev = 0.0;
    for (double t : switch_times) {
        if (!(t >= prev) || t > horizon) {
            throw Error(ErrorCode::domain,
                        fmt::format("switch time {} out of order or beyond horizon {}", t, horizon));
        }
        prev = t;
    }
}

double ControlSchedule::value_at(double t) const
{
    const auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
    return values[static_cast<std::size_t>(it - switch_times.begin())];
}

int ControlSchedule::leading_sign() const
{
    for (double v : values) {
        if (v != 0.0) return v > 0.0 ? 1 : -1;
    }
    return 1;
}

std::optional<double> ControlSchedule::singular_entry() const
{
    if (values.size() >= 2 && values.back() == 0.0 && values[values.size() - 2] != 0.0) {
        return switch_times.back();
    }
    return std::nullopt;
}

std::vector<double> ControlSchedule::bang_switches() const
{
    std::vector<double> out = switch_times;
    if (singular_entry()) out.pop_back();
    return out;
}

}  // namespace chatterbar
