#pragma once

#include <optional>
#include <vector>

namespace chatterbar {

/// Piecewise-constant control on [0, horizon]. Interval i runs from
/// switch_times[i-1] (or 0) to switch_times[i] (or horizon) and carries
/// values[i]. Switch times are nondecreasing; a repeated time is a
/// zero-length arc.
struct ControlSchedule {
    double horizon = 0.0;
    std::vector<double> switch_times;
    std::vector<double> values;

    /// Alternating +-1 arcs starting with `leading_sign`, optionally followed
    /// by a zero (singular-tail) arc from `singular_entry` to the horizon.
    static ControlSchedule bang(double horizon, int leading_sign, std::vector<double> switches,
                                std::optional<double> singular_entry = std::nullopt);
    /// u = value on the whole horizon.
    static ControlSchedule constant(double horizon, double value);

    /// Throws Error{control_bound} for |value| > 1 and Error{domain} for
    /// malformed times.
    void validate() const;
    double value_at(double t) const;
    int leading_sign() const;
    /// Start of the trailing zero arc, if any.
    std::optional<double> singular_entry() const;
    /// Sign switches only (excludes the singular entry).
    std::vector<double> bang_switches() const;
};

}  // namespace chatterbar
