#include "chatterbar/scenario.hpp"

#include "chatterbar/error.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace chatterbar {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what)
{
    throw Error(ErrorCode::config, what);
}

template <class T>
void read(const json& j, const char* key, T& target)
{
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        config_error(fmt::format("scenario field '{}': {}", key, e.what()));
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

/// "mode:j" -> j, anything else -> nullopt.
std::optional<int> mode_index(const std::string& spec)
{
    if (spec.rfind("mode:", 0) != 0) return std::nullopt;
    try {
        std::size_t used = 0;
        const int j = std::stoi(spec.substr(5), &used);
        if (used != spec.size() - 5 || j < 1) config_error(fmt::format("bad mode spec '{}'", spec));
        return j;
    } catch (const std::logic_error&) {
        config_error(fmt::format("bad mode spec '{}'", spec));
    }
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    const std::vector<double>& column(const std::string& name) const
    {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) config_error(fmt::format("CSV lacks column '{}'", name));
        return columns[static_cast<std::size_t>(it - header.begin())];
    }
};

Table read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) config_error(fmt::format("cannot open '{}'", path.string()));
    Table table;
    std::string line;
    if (!std::getline(in, line)) config_error(fmt::format("'{}' is empty", path.string()));
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell.erase(std::remove_if(cell.begin(), cell.end(), ::isspace), cell.end());
            table.header.push_back(cell);
        }
    }
    table.columns.resize(table.header.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= table.columns.size()) break;
            try {
                table.columns[col++].push_back(std::stod(cell));
            } catch (const std::logic_error&) {
                config_error(fmt::format("{}:{}: not a number '{}'", path.string(), row, cell));
            }
        }
        if (col != table.columns.size()) {
            config_error(fmt::format("{}:{}: expected {} columns", path.string(), row,
                                     table.columns.size()));
        }
    }
    return table;
}

/// Cubic B-spline through values on the uniform basis grid.
ScalarFunction grid_function(const SpectralBasis& basis, const std::vector<double>& values)
{
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    auto spline = std::make_shared<Spline>(values.begin(), values.end(), 0.0, basis.spacing);
    const double end = basis.length();
    return [spline, end](double x) { return (*spline)(std::clamp(x, 0.0, end)); };
}

/// Resamples tabulated columns onto the basis grid (linear between rows).
std::vector<double> onto_grid(const std::vector<double>& x, const std::vector<double>& v,
                              const std::vector<double>& grid)
{
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid) {
        auto it = std::lower_bound(x.begin(), x.end(), g);
        if (it == x.begin()) {
            out.push_back(v.front());
        } else if (it == x.end()) {
            out.push_back(v.back());
        } else {
            const auto i = static_cast<std::size_t>(it - x.begin());
            const double w = (g - x[i - 1]) / (x[i] - x[i - 1]);
            out.push_back((1 - w) * v[i - 1] + w * v[i]);
        }
    }
    return out;
}

CoefficientProfile build_profile(const Scenario& sc)
{
    const auto& ps = sc.profile;
    if (ps.builtin == "constant") return CoefficientProfile::constant(ps.length, ps.p0, ps.k0);
    if (ps.builtin == "exponential") return CoefficientProfile::exponential(ps.length, ps.rate);
    if (ps.builtin == "affine") return CoefficientProfile::affine(ps.length, ps.slope);
    if (ps.builtin == "csv") {
        const Table t = read_csv(ps.csv);
        const auto& f = std::find(t.header.begin(), t.header.end(), "f") != t.header.end()
                            ? t.column("f")
                            : std::vector<double>(t.column("x").size(), 0.0);
        return CoefficientProfile::tabulated(t.column("x"), t.column("p"), t.column("k"), f);
    }
    config_error(fmt::format("unknown profile '{}'", ps.builtin));
}

int auto_grid_size(int modes)
{
    const int intervals = std::max(20 * modes, 400);
    return (intervals + 39) / 40 * 40 + 1;
}

ScalarFunction force_function(const Scenario& sc, const CoefficientProfile& profile,
                              const SpectralBasis& extended)
{
    if (sc.force == "sine") return force::sine(profile.length);
    if (sc.force == "clamped_quartic") {
        return force::clamped_quartic(profile.length);
    }
    if (sc.force == "zero") return force::zero();
    if (sc.force == "csv") {
        if (sc.profile.builtin != "csv") config_error("force 'csv' requires a CSV profile");
        return profile.f;
    }
    if (const auto j = mode_index(sc.force)) {
        if (static_cast<std::size_t>(*j) > extended.size()) {
            config_error(fmt::format("force mode {} exceeds the {} computed modes", *j,
                                     extended.size()));
        }
        return grid_function(extended, extended.modes[static_cast<std::size_t>(*j - 1)].h);
    }
    config_error(fmt::format("unknown force '{}'", sc.force));
}

InitialData initial_data(const Scenario& sc, const SpectralBasis& extended)
{
    const auto& is = sc.initial;
    const std::size_t nodes = extended.grid.size();
    if (is.displacement == "csv") {
        const Table t = read_csv(is.csv);
        InitialData d;
        d.y0 = onto_grid(t.column("x"), t.column("y0"), extended.grid);
        d.y1 = std::find(t.header.begin(), t.header.end(), "y1") != t.header.end()
                   ? onto_grid(t.column("x"), t.column("y1"), extended.grid)
                   : std::vector<double>(nodes, 0.0);
        const double peak = std::max(1.0, *std::max_element(d.y0.begin(), d.y0.end()));
        if (std::abs(d.y0.front()) > 1e-9 * peak || std::abs(d.y0.back()) > 1e-9 * peak) {
            config_error("initial displacement CSV must vanish at both ends");
        }
        return d;
    }
    InitialData d = InitialData::zero(nodes);
    if (is.displacement == "parabola") {
        d = InitialData::sample(extended.grid, parabola(extended.length(), is.amplitude),
                                [](double) { return 0.0; });
    } else if (const auto j = mode_index(is.displacement)) {
        d = InitialData::mode(extended, *j, is.amplitude);
    } else if (is.displacement != "zero") {
        config_error(fmt::format("unknown initial displacement '{}'", is.displacement));
    }
    if (const auto j = mode_index(is.velocity)) {
        const InitialData v = InitialData::mode(extended, *j, is.velocity_amplitude);
        d.y1 = v.y0;
    } else if (is.velocity != "zero") {
        config_error(fmt::format("unknown initial velocity '{}'", is.velocity));
    }
    return d;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        config_error(fmt::format("scenario is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object()) config_error("scenario must be a JSON object");

    Scenario sc;
    if (doc.contains("profile")) {
        const json& p = doc.at("profile");
        if (p.is_string()) {
            sc.profile.builtin = p.get<std::string>();
        } else {
            read(p, "builtin", sc.profile.builtin);
            std::string csv;
            read(p, "csv", csv);
            if (!csv.empty()) {
                sc.profile.builtin = "csv";
                sc.profile.csv = resolve(base_dir, csv);
            }
            read(p, "length", sc.profile.length);
            read(p, "p0", sc.profile.p0);
            read(p, "k0", sc.profile.k0);
            read(p, "rate", sc.profile.rate);
            read(p, "slope", sc.profile.slope);
            if (!p.contains("length") && sc.profile.builtin != "constant") sc.profile.length = 1.0;
        }
    }
    read(doc, "force", sc.force);
    if (doc.contains("initial")) {
        const json& i = doc.at("initial");
        read(i, "displacement", sc.initial.displacement);
        read(i, "amplitude", sc.initial.amplitude);
        read(i, "velocity", sc.initial.velocity);
        read(i, "velocity_amplitude", sc.initial.velocity_amplitude);
        std::string csv;
        read(i, "csv", csv);
        if (!csv.empty()) {
            sc.initial.displacement = "csv";
            sc.initial.csv = resolve(base_dir, csv);
        }
    }
    if (doc.contains("modes") && doc.at("modes").is_string()) {
        if (doc.at("modes").get<std::string>() != "auto") config_error("modes must be a count or \"auto\"");
    } else {
        read(doc, "modes", sc.n_modes);
    }
    read(doc, "max_modes", sc.max_modes);
    read(doc, "tail_target", sc.tail_target);
    read(doc, "grid_size", sc.grid_size);
    if (doc.contains("horizon") && doc.at("horizon").is_string()) {
        if (doc.at("horizon").get<std::string>() != "auto") config_error("horizon must be a number or \"auto\"");
    } else {
        read(doc, "horizon", sc.horizon);
        if (doc.contains("horizon") && sc.horizon <= 0.0) {
            config_error(fmt::format("horizon must be positive (got {})", sc.horizon));
        }
    }

    if (doc.contains("controller")) {
        const json& c = doc.at("controller");
        std::string type = "feedback";
        read(c, "type", type);
        auto& ctl = sc.controller;
        if (type == "feedback") {
            ctl.kind = ControllerKind::feedback;
            if (c.contains("psi0")) {
                const json& psi = c.at("psi0");
                if (psi.is_string()) {
                    if (psi.get<std::string>() != "oracle") config_error("psi0 must be an object or \"oracle\"");
                    ctl.psi_from_oracle = true;
                } else {
                    read(psi, "psi1", ctl.psi1);
                    read(psi, "psi2", ctl.psi2);
                }
            }
            read(c, "oracle_switches", ctl.oracle_switches);
        } else if (type == "schedule") {
            ctl.kind = ControllerKind::schedule;
            std::string file;
            read(c, "file", file);
            if (file.empty()) config_error("schedule controller needs a 'file'");
            ctl.schedule_file = resolve(base_dir, file);
        } else if (type == "optimize") {
            ctl.kind = ControllerKind::optimize;
            read(c, "max_switches", ctl.max_switches);
            read(c, "singular_tail", ctl.singular_tail);
        } else {
            config_error(fmt::format("unknown controller type '{}'", type));
        }
    }

    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        auto& tol = sc.tolerances;
        read(t, "atol", tol.atol);
        read(t, "rtol", tol.rtol);
        read(t, "h1", tol.feedback.h1);
        read(t, "h2", tol.feedback.h2);
        read(t, "h3", tol.feedback.h3);
        read(t, "h4", tol.feedback.h4);
        read(t, "chattering_floor", tol.chattering_floor);
        read(t, "event_time", tol.event_time);
        read(t, "adjoint", tol.adjoint);
    }
    if (doc.contains("field")) {
        const json& f = doc.at("field");
        read(f, "time_intervals", sc.field.time_intervals);
        read(f, "x_stride", sc.field.x_stride);
        read(f, "export", sc.field.export_csv);
    }
    std::string out;
    read(doc, "output", out);
    if (!out.empty()) sc.output = resolve(base_dir, out);
    read(doc, "seed", sc.seed);
    validate_scenario(sc);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) config_error(fmt::format("cannot open scenario '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.parent_path());
}

void validate_scenario(const Scenario& sc)
{
    const auto& t = sc.tolerances;
    for (double v : {t.atol, t.rtol, t.feedback.h1, t.feedback.h2, t.feedback.h3, t.feedback.h4,
                     t.event_time, t.adjoint}) {
        if (!(v > 0.0)) config_error("all tolerances must be positive");
    }
    if (sc.horizon < 0.0 || !std::isfinite(sc.horizon)) {
        config_error(fmt::format("horizon must be positive (got {})", sc.horizon));
    }
    if (sc.profile.length <= 0.0) config_error("profile length must be positive");
    if (sc.n_modes < 0 || sc.max_modes < 1 || sc.n_modes > 64 || sc.max_modes > 64) {
        config_error("mode counts must lie in 1..64");
    }
    if (!(sc.tail_target > 0.0)) config_error("tail_target must be positive");
    if (sc.controller.max_switches < 0 || sc.controller.oracle_switches < 0) {
        config_error("switch counts must be nonnegative");
    }
    if (sc.controller.psi1.size() != sc.controller.psi2.size()) {
        config_error("psi0.psi1 and psi0.psi2 must have equal length");
    }
    if (sc.field.time_intervals < 5 || sc.field.x_stride < 0) {
        config_error("field.time_intervals must be >= 5 and x_stride >= 0");
    }
}

Problem prepare_problem(const Scenario& sc)
{
    validate_scenario(sc);
    Problem pb;
    pb.profile = build_profile(sc);

    // an extended basis serves the automatic truncation and the tail estimate
    const int extended_modes = std::max({sc.n_modes, sc.max_modes, 1});
    const int grid = sc.grid_size > 0 ? sc.grid_size : auto_grid_size(extended_modes);
    SpectralBasis extended = solve_eigenpairs(pb.profile, extended_modes, grid);

    pb.profile = pb.profile.with_force(force_function(sc, pb.profile, extended));
    const ForceProjection full_force = project_force(pb.profile, extended);
    for (std::size_t j = 0; j < extended.size(); ++j) {
        extended.modes[j].C = full_force.C[j];
        extended.modes[j].c = full_force.C[j] / extended.modes[j].omega;
    }

    pb.initial = initial_data(sc, extended);
    const ModalProjection full = project_initial_data(pb.initial, extended);
    const std::vector<double> omega = extended.omegas();

    std::size_t n = static_cast<std::size_t>(sc.n_modes);
    if (n == 0) {
        n = choose_truncation(full.alpha, full.beta, omega, sc.tail_target,
                              static_cast<std::size_t>(extended_modes));
    }
    for (std::size_t j = 0; j < omega.size(); ++j) {
        pb.total_energy += full.alpha[j] * full.alpha[j] +
                           (full.beta[j] / omega[j]) * (full.beta[j] / omega[j]);
    }
    pb.truncation_tail =
        n < extended.size() ? truncation_tail(full.alpha, full.beta, omega, n) : 0.0;

    pb.basis = extended.truncated(n);
    pb.extended = extended;
    pb.extended_projection = full;
    pb.force.C.assign(full_force.C.begin(), full_force.C.begin() + static_cast<long>(n));
    for (int idx : full_force.zero_indices) {
        if (static_cast<std::size_t>(idx) <= n) pb.force.zero_indices.push_back(idx);
    }
    pb.projection.alpha.assign(full.alpha.begin(), full.alpha.begin() + static_cast<long>(n));
    pb.projection.beta.assign(full.beta.begin(), full.beta.begin() + static_cast<long>(n));
    pb.state = rescale(pb.projection.alpha, pb.projection.beta, pb.force.C, pb.basis.lambdas());
    pb.horizon = sc.horizon > 0.0 ? sc.horizon : default_horizon(pb.state);
    return pb;
}

ControlSchedule load_schedule(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) config_error(fmt::format("cannot open schedule '{}'", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        config_error(fmt::format("schedule '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    if (doc.contains("schedules")) {
        const json& list = doc.at("schedules");
        if (!list.is_array() || list.empty()) config_error("'schedules' must be a non-empty array");
        json entry = list.back();
        if (!entry.contains("horizon") && doc.contains("horizon")) entry["horizon"] = doc["horizon"];
        doc = entry;
    }
    double horizon = 0.0;
    int sign = 1;
    std::vector<double> times;
    read(doc, "horizon", horizon);
    read(doc, "leading_sign", sign);
    read(doc, "switch_times", times);
    std::optional<double> entry;
    if (doc.contains("singular_entry") && !doc.at("singular_entry").is_null()) {
        entry = doc.at("singular_entry").get<double>();
    }
    if (!(horizon > 0.0)) config_error("schedule horizon must be positive");
    if (sign != 1 && sign != -1) config_error("leading_sign must be +1 or -1");
    ControlSchedule schedule = ControlSchedule::bang(horizon, sign, std::move(times), entry);
    schedule.validate();
    return schedule;
}

}  // namespace chatterbar
