#include "chatterbar/commands.hpp"

#include "chatterbar/error.hpp"

#include <fmt/format.h>
#include <fmt/os.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace chatterbar {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

void log(const std::string& message)
{
    fmt::print(stderr, "chatterbar: {}\n", message);
}

fs::path prepare_output(const Scenario& sc)
{
    std::error_code ec;
    fs::create_directories(sc.output, ec);
    if (ec) {
        throw Error(ErrorCode::config,
                    fmt::format("cannot create output directory '{}': {}", sc.output.string(),
                                ec.message()));
    }
    return sc.output;
}

void write_json(const fs::path& path, const ojson& doc, CommandResult& result)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::config, fmt::format("cannot write '{}'", path.string()));
    out << doc.dump(2) << '\n';
    result.files.push_back(path);
}

/// Shortest representation that reads back to the same double.
std::string num(double v)
{
    return fmt::format("{}", v);
}

ojson vec(const std::vector<double>& v)
{
    ojson out = ojson::array();
    for (double x : v) out.push_back(x);
    return out;
}

ojson vec(const Eigen::VectorXd& v)
{
    ojson out = ojson::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

ojson optional_number(const std::optional<double>& v)
{
    return v ? ojson(*v) : ojson(nullptr);
}

ojson schedule_json(const ControlSchedule& schedule)
{
    ojson out;
    out["horizon"] = schedule.horizon;
    out["leading_sign"] = schedule.leading_sign();
    out["switch_times"] = vec(schedule.bang_switches());
    out["singular_entry"] = optional_number(schedule.singular_entry());
    return out;
}

ojson state_json(const ModalState& st)
{
    return {{"s", vec(st.s)}, {"tau", vec(st.tau)}, {"omega", vec(st.omega)}, {"c", vec(st.c)}};
}

OptimizerOptions optimizer_options(const Scenario& sc)
{
    OptimizerOptions o;
    o.seed = sc.seed;
    o.singular_tail = sc.controller.singular_tail;
    return o;
}

IntegrationOptions integration_options(const Scenario& sc)
{
    IntegrationOptions io;
    io.tol = {sc.tolerances.atol, sc.tolerances.rtol};
    io.feedback = sc.tolerances.feedback;
    io.chattering_floor = sc.tolerances.chattering_floor;
    io.event_time_tol = sc.tolerances.event_time;
    return io;
}

std::vector<double> bang_interval_ratios(const std::vector<double>& switches)
{
    std::vector<double> out;
    for (std::size_t i = 2; i < switches.size(); ++i) {
        const double prev = switches[i - 1] - switches[i - 2];
        const double cur = switches[i] - switches[i - 1];
        if (prev > 0.0) out.push_back(cur / prev);
    }
    return out;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj, std::size_t n,
                          CommandResult& result)
{
    auto out = fmt::output_file(path.string());
    std::string header = "t,u,regime,H,H1,H2,H3,H4";
    for (const char* block : {"s", "tau", "psi1", "psi2"}) {
        for (std::size_t j = 1; j <= n; ++j) header += fmt::format(",{}_{}", block, j);
    }
    out.print("{}\n", header);
    for (const auto& s : traj.samples) {
        std::string line = fmt::format("{},{},{},{},{},{},{},{}", num(s.t), num(s.u),
                                       to_string(s.regime), num(s.H.H), num(s.H.H1),
                                       num(s.H.H2), num(s.H.H3), num(s.H.H4));
        for (const Eigen::VectorXd* block : {&s.z.s, &s.z.tau, &s.z.psi1, &s.z.psi2}) {
            for (Eigen::Index j = 0; j < block->size(); ++j) line += "," + num((*block)[j]);
        }
        out.print("{}\n", line);
    }
    result.files.push_back(path);
}

std::size_t export_stride(const Scenario& sc, std::size_t intervals)
{
    if (sc.field.x_stride > 0) {
        const auto s = static_cast<std::size_t>(sc.field.x_stride);
        if (intervals % s != 0) {
            throw Error(ErrorCode::config,
                        fmt::format("field.x_stride {} does not divide {} grid intervals", s,
                                    intervals));
        }
        return s;
    }
    std::size_t s = std::max<std::size_t>(1, intervals / 100);
    while (intervals % s != 0) --s;
    return s;
}

void check_controller_dims(const Scenario& sc, std::size_t n)
{
    const auto& c = sc.controller;
    if (!c.psi1.empty() && c.psi1.size() != n) {
        throw Error(ErrorCode::config, fmt::format("psi0 has {} entries, the scenario keeps {} modes",
                                                   c.psi1.size(), n));
    }
}

}  // namespace

CommandResult run_eigen(const Scenario& input)
{
    Scenario sc = input;
    if (sc.n_modes == 0) sc.n_modes = std::max(sc.max_modes, 2);
    if (sc.n_modes < 2) {
        throw Error(ErrorCode::config, "eigen needs at least two modes for the certificate");
    }
    const Problem pb = prepare_problem(sc);
    const fs::path dir = prepare_output(sc);
    CommandResult result;

    const SpectralCertificate cert = certify_spectrum(pb.basis);
    const DecayReport decay = check_force_decay(pb.profile, pb.basis);
    const double asymptote = eigenvalue_asymptote(pb.profile);

    {
        auto out = fmt::output_file((dir / "basis.csv").string());
        out.print("j,lambda,omega,C,c\n");
        for (std::size_t j = 0; j < pb.basis.size(); ++j) {
            const auto& m = pb.basis.modes[j];
            out.print("{},{},{},{},{}\n", j + 1, num(m.lambda), num(m.omega), num(m.C), num(m.c));
        }
        result.files.push_back(dir / "basis.csv");
    }
    {
        auto out = fmt::output_file((dir / "basis_grid.csv").string());
        std::string header = "x";
        for (std::size_t j = 1; j <= pb.basis.size(); ++j) header += fmt::format(",h_{}", j);
        out.print("{}\n", header);
        for (std::size_t i = 0; i < pb.basis.grid.size(); ++i) {
            std::string line = num(pb.basis.grid[i]);
            for (const auto& m : pb.basis.modes) line += "," + num(m.h[i]);
            out.print("{}\n", line);
        }
        result.files.push_back(dir / "basis_grid.csv");
    }

    if (pb.force.warning()) {
        std::string idx;
        for (int j : pb.force.zero_indices) idx += (idx.empty() ? "" : ",") + std::to_string(j);
        result.warnings.push_back(fmt::format("force coefficients C_j vanish for j = {}", idx));
    }
    if (!cert.gap_ok()) {
        result.warnings.push_back(
            fmt::format("spectral gap condition fails (gap_delta = {})", cert.gap_delta));
    }
    std::vector<std::string> notes = decay.warnings;

    ojson doc;
    doc["profile"] = pb.profile.name;
    doc["n_modes"] = pb.basis.size();
    doc["grid_size"] = pb.basis.grid.size();
    ojson c;
    c["asymptote"] = cert.asymptote;
    c["asymptote_quadrature"] = asymptote;
    c["gap_delta"] = cert.gap_delta;
    c["growth_K"] = cert.growth_K;
    c["decay_bound"] = cert.decay_bound;
    c["cj_omega4_tail"] = cert.cj_omega4_tail;
    c["gap_ok"] = cert.gap_ok();
    doc["certificate"] = c;
    doc["lambda"] = vec(pb.basis.lambdas());
    ojson f;
    f["C"] = vec(pb.force.C);
    f["zero_indices"] = pb.force.zero_indices;
    doc["force"] = f;
    ojson d;
    d["scaled"] = vec(decay.scaled);
    d["zero_indices"] = decay.zero_indices;
    d["endpoint_left"] = decay.endpoint_left;
    d["endpoint_right"] = decay.endpoint_right;
    d["hypothesis_ok"] = decay.hypothesis_ok;
    d["bounded"] = decay.bounded;
    d["reliable"] = decay.reliable();
    d["tail_max"] = decay.tail_max;
    d["tail_median"] = decay.tail_median;
    d["warnings"] = decay.warnings;
    doc["decay"] = d;
    doc["warnings"] = result.warnings;
    result.exit_code = result.warnings.empty() ? kExitOk : kExitWarning;
    doc["exit_code"] = result.exit_code;
    write_json(dir / "certificate.json", doc, result);
    for (const auto& w : result.warnings) log("warning: " + w);
    for (const auto& w : notes) log("note: " + w);
    return result;
}

CommandResult run_simulate(const Scenario& sc)
{
    const Problem pb = prepare_problem(sc);
    const std::size_t n = pb.basis.size();
    check_controller_dims(sc, n);
    const fs::path dir = prepare_output(sc);
    CommandResult result;

    const ModalPlant plant = ModalPlant::from(pb.state);
    const IntegrationOptions io = integration_options(sc);
    ExtremalState z0 = ExtremalState::from(pb.state);
    std::optional<ControlSchedule> schedule;
    ojson controller;

    switch (sc.controller.kind) {
    case ControllerKind::feedback: {
        controller["type"] = "feedback";
        if (sc.controller.psi_from_oracle) {
            const double oracle_horizon = std::max(pb.horizon, default_horizon(pb.state));
            log(fmt::format("estimating psi(0) from a K = {} oracle schedule",
                            sc.controller.oracle_switches));
            const auto family = optimize_family(pb.state, sc.controller.oracle_switches,
                                                oracle_horizon, optimizer_options(sc));
            const AdjointEstimate adj =
                discrete_adjoint(pb.state, family.back().schedule, sc.tolerances.adjoint);
            z0 = adj.z0;
            controller["psi0_source"] = "oracle";
            controller["oracle_schedule"] = schedule_json(family.back().schedule);
            controller["oracle_cost"] = family.back().cost;
            controller["oracle_stationary"] = adj.stationary();
            if (!adj.stationary()) {
                result.warnings.push_back("oracle schedule is not switch-stationary");
            }
        } else {
            controller["psi0_source"] = sc.controller.psi1.empty() ? "zero" : "explicit";
            for (std::size_t j = 0; j < sc.controller.psi1.size(); ++j) {
                z0.psi1[static_cast<Eigen::Index>(j)] = sc.controller.psi1[j];
                z0.psi2[static_cast<Eigen::Index>(j)] = sc.controller.psi2[j];
            }
        }
        controller["psi1"] = vec(z0.psi1);
        controller["psi2"] = vec(z0.psi2);
        break;
    }
    case ControllerKind::schedule:
        controller["type"] = "schedule";
        schedule = load_schedule(sc.controller.schedule_file);
        break;
    case ControllerKind::optimize: {
        controller["type"] = "optimize";
        const auto family = optimize_family(pb.state, sc.controller.max_switches, pb.horizon,
                                            optimizer_options(sc));
        schedule = family.back().schedule;
        break;
    }
    }

    if (schedule) {
        // adjoint from psi(T) = 0 so that H is conserved along a stationary schedule
        const AdjointEstimate adj = discrete_adjoint(pb.state, *schedule, sc.tolerances.adjoint);
        z0 = adj.z0;
        controller["schedule_stationary"] = adj.stationary();
    }
    const double horizon = schedule ? schedule->horizon : pb.horizon;
    const ExtremalRun run = schedule ? integrate_extremal(z0, plant, *schedule, io)
                                     : integrate_extremal(z0, plant, horizon, io);
    const double drift = hamiltonian_drift(run.trajectory);
    write_trajectory_csv(dir / "trajectory.csv", run.trajectory, n, result);

    ojson rep;
    rep["horizon"] = horizon;
    rep["n_modes"] = n;
    rep["initial_state"] = state_json(pb.state);
    rep["controller"] = controller;
    rep["switch_times"] = vec(run.report.switch_times);
    rep["interval_ratios"] = vec(run.report.interval_ratios);
    rep["accumulation_estimate"] = run.report.accumulation_estimate;
    rep["entered_singular_at"] = optional_number(run.report.entered_singular_at);
    rep["singular_residual"] = run.report.singular_residual;
    rep["saturated"] = run.report.saturated;
    rep["floor_reached"] = run.report.floor_reached;
    rep["modal_cost"] = run.trajectory.cost;
    rep["hamiltonian_drift"] = drift;
    rep["hamiltonian_jump"] = hamiltonian_jump(run.trajectory);
    double modal_cost = run.trajectory.cost;
    if (schedule) {
        const ScheduleEvaluation eval = evaluate_schedule(pb.state, *schedule);
        rep["schedule"] = schedule_json(*schedule);
        rep["oracle_cost"] = eval.cost;
        rep["oracle_cost_gap"] = std::abs(eval.cost - run.trajectory.cost) / std::max(eval.cost, 1e-300);
        rep["tail_cost_rate"] = eval.tail_cost_rate;
        modal_cost = eval.cost;
    }
    rep["flags"] = run.report.flags;
    if (run.report.saturated) result.warnings.push_back("singular control saturated");
    if (drift > 1e-6) result.warnings.push_back(fmt::format("Hamiltonian drift {:.3g}", drift));
    rep["warnings"] = result.warnings;
    write_json(dir / "chattering_report.json", rep, result);

    // field on a uniform time grid
    const auto nt = static_cast<std::size_t>(sc.field.time_intervals);
    UniformSamples samples;
    std::vector<double> field_switches;
    if (schedule) {
        for (std::size_t i = 0; i <= nt; ++i) {
            samples.t.push_back(i == nt ? horizon : horizon * static_cast<double>(i) / static_cast<double>(nt));
        }
        for (const auto& st : sample_schedule(pb.state, *schedule, samples.t)) samples.s.push_back(st.s);
        for (double t : samples.t) samples.u.push_back(schedule->value_at(t));
        field_switches = schedule->switch_times;
    } else {
        samples = resample_uniform(run.trajectory, plant, nt);
        field_switches = run.trajectory.switch_times;
        if (run.report.entered_singular_at) field_switches.push_back(*run.report.entered_singular_at);
        std::sort(field_switches.begin(), field_switches.end());
    }
    const FieldSolution field =
        reconstruct(pb.basis, samples.s, samples.t, samples.u, field_switches, 1);

    ojson fs_doc;
    fs_doc["time_intervals"] = nt;
    fs_doc["x_nodes"] = field.x_grid.size();
    try {
        const ResidualReport r = pde_residual(field, pb.profile);
        ojson res;
        res["l2"] = r.l2;
        res["max"] = r.max;
        res["truncation_floor"] = r.truncation_floor;
        res["discretization"] = r.discretization;
        res["evaluated_rows"] = r.evaluated_rows;
        res["masked_rows"] = r.masked_rows;
        fs_doc["residual"] = res;
    } catch (const Error& e) {
        fs_doc["residual"] = nullptr;
        result.warnings.push_back(e.what());
    }
    const double physical = physical_cost(field, pb.profile);
    fs_doc["physical_cost"] = physical;
    fs_doc["modal_cost"] = modal_cost;
    fs_doc["parseval_gap"] = modal_cost > 0.0 ? std::abs(physical - modal_cost) / modal_cost : std::abs(physical);
    const BoundaryInitialReport bi = check_boundary_initial(field, pb.initial);
    fs_doc["boundary_deviation"] = bi.boundary;
    fs_doc["initial_displacement_error"] = bi.initial_displacement;
    fs_doc["initial_velocity_error"] = bi.initial_velocity;
    fs_doc["projection_tail_bound"] =
        projection_tail_sup(pb.extended, pb.extended_projection.alpha, n);
    fs_doc["truncation_tail_energy"] = pb.truncation_tail;
    fs_doc["total_energy"] = pb.total_energy;
    write_json(dir / "field_summary.json", fs_doc, result);

    if (sc.field.export_csv) {
        const std::size_t stride = export_stride(sc, field.x_grid.size() - 1);
        auto out = fmt::output_file((dir / "field.csv").string());
        out.print("t,x,y,u\n");
        for (std::size_t i = 0; i < field.t_grid.size(); ++i) {
            for (std::size_t m = 0; m < field.x_grid.size(); m += stride) {
                out.print("{},{},{},{}\n", num(field.t_grid[i]), num(field.x_grid[m]),
                          num(field.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m))),
                          num(field.u_trace[i]));
            }
        }
        result.files.push_back(dir / "field.csv");
    }

    for (const auto& w : result.warnings) log("warning: " + w);
    return result;
}

CommandResult run_optimize(const Scenario& sc)
{
    const Problem pb = prepare_problem(sc);
    const fs::path dir = prepare_output(sc);
    CommandResult result;
    const int kmax = sc.controller.kind == ControllerKind::optimize ? sc.controller.max_switches
                                                                    : sc.controller.oracle_switches;
    const auto family = optimize_family(pb.state, kmax, pb.horizon, optimizer_options(sc));

    {
        auto out = fmt::output_file((dir / "cost_vs_k.csv").string());
        out.print("K,cost,cost_gain,leading_sign,singular_entry,sweeps,stagnated,from_grid\n");
        for (const auto& r : family) {
            const auto entry = r.schedule.singular_entry();
            out.print("{},{},{},{},{},{},{},{}\n", r.n_switches, num(r.cost), num(r.cost_gain),
                      r.schedule.leading_sign(), entry ? num(*entry) : std::string(), r.sweeps,
                      r.stagnated ? 1 : 0, r.from_grid ? 1 : 0);
        }
        result.files.push_back(dir / "cost_vs_k.csv");
    }

    ojson doc;
    doc["horizon"] = pb.horizon;
    doc["n_modes"] = pb.basis.size();
    doc["initial_state"] = state_json(pb.state);
    ojson list = ojson::array();
    for (const auto& r : family) {
        ojson e;
        e["n_switches"] = r.n_switches;
        e["cost"] = r.cost;
        e["cost_gain"] = r.cost_gain;
        e["horizon"] = r.schedule.horizon;
        e["leading_sign"] = r.schedule.leading_sign();
        e["switch_times"] = vec(r.schedule.bang_switches());
        e["singular_entry"] = optional_number(r.schedule.singular_entry());
        e["interval_ratios"] = vec(bang_interval_ratios(r.schedule.bang_switches()));
        e["stagnated"] = r.stagnated;
        list.push_back(e);
        if (r.stagnated) {
            result.warnings.push_back(fmt::format("K = {} optimizer stagnated", r.n_switches));
        }
    }
    doc["schedules"] = list;
    const ScheduleEvaluation best = evaluate_schedule(pb.state, family.back().schedule);
    doc["tail_cost_rate"] = best.tail_cost_rate;
    write_json(dir / "schedules.json", doc, result);
    for (const auto& w : result.warnings) log("warning: " + w);
    return result;
}

int run_command(const std::string& name, const Scenario& scenario)
{
    try {
        CommandResult r;
        if (name == "eigen") {
            r = run_eigen(scenario);
        } else if (name == "simulate") {
            r = run_simulate(scenario);
        } else if (name == "optimize") {
            r = run_optimize(scenario);
        } else {
            log(fmt::format("unknown command '{}'", name));
            return kExitError;
        }
        for (const auto& f : r.files) log("wrote " + f.string());
        return r.exit_code;
    } catch (const Error& e) {
        log(fmt::format("error ({}): {}", to_string(e.code()), e.what()));
    } catch (const std::exception& e) {
        log(fmt::format("error: {}", e.what()));
    }
    return kExitError;
}

}  // namespace chatterbar
