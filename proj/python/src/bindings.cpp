#include "chatterbar/commands.hpp"
#include "chatterbar/error.hpp"
#include "chatterbar/extremal.hpp"
#include "chatterbar/field.hpp"
#include "chatterbar/modal.hpp"
#include "chatterbar/oracle.hpp"
#include "chatterbar/scenario.hpp"
#include "chatterbar/schedule.hpp"
#include "chatterbar/sturm_liouville.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace chatterbar;

namespace {

py::array_t<double> to_array(const std::vector<double>& v)
{
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

/// Rows are modes, columns grid nodes.
py::array_t<double> eigenfunctions(const SpectralBasis& b)
{
    py::array_t<double> out({b.size(), b.grid.size()});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t j = 0; j < b.size(); ++j) {
        for (std::size_t i = 0; i < b.grid.size(); ++i) a(j, i) = b.modes[j].h[i];
    }
    return out;
}

py::dict run_dict(const ExtremalRun& run, Eigen::Index n)
{
    const auto& smp = run.trajectory.samples;
    py::array_t<double> s({smp.size(), static_cast<std::size_t>(n)});
    auto sa = s.mutable_unchecked<2>();
    std::vector<double> t, u, h1;
    std::vector<std::string> regime;
    for (std::size_t i = 0; i < smp.size(); ++i) {
        t.push_back(smp[i].t);
        u.push_back(smp[i].u);
        h1.push_back(smp[i].H.H1);
        regime.emplace_back(to_string(smp[i].regime));
        for (Eigen::Index j = 0; j < n; ++j) sa(i, j) = smp[i].z.s[j];
    }
    const auto& r = run.report;
    return py::dict("t"_a = to_array(t), "s"_a = s, "u"_a = to_array(u), "H1"_a = to_array(h1),
                    "regime"_a = regime, "cost"_a = run.trajectory.cost,
                    "switch_times"_a = r.switch_times, "interval_ratios"_a = r.interval_ratios,
                    "accumulation_estimate"_a = r.accumulation_estimate,
                    "entered_singular_at"_a = r.entered_singular_at, "saturated"_a = r.saturated,
                    "flags"_a = r.flags, "hamiltonian_drift"_a = hamiltonian_drift(run.trajectory),
                    "hamiltonian_jump"_a = hamiltonian_jump(run.trajectory));
}

ExtremalState extremal_start(const ModalState& st, const std::vector<double>& psi1,
                             const std::vector<double>& psi2)
{
    ExtremalState z = ExtremalState::from(st);
    if (psi1.size() != st.size() || psi2.size() != st.size()) {
        throw Error(ErrorCode::dimension, "psi1 and psi2 need one entry per mode");
    }
    for (std::size_t j = 0; j < st.size(); ++j) {
        z.psi1[static_cast<Eigen::Index>(j)] = psi1[j];
        z.psi2[static_cast<Eigen::Index>(j)] = psi2[j];
    }
    return z;
}

}  // namespace

PYBIND11_MODULE(_chatterbar, m)
{
    m.doc() = "Spectral optimal control of a clamped nonhomogeneous bar";

    static py::exception<Error> error_type(m, "Error", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error_type, fmt::format("[{}] {}", to_string(e.code()), e.what()).c_str());
        }
    });

    py::class_<CoefficientProfile>(m, "CoefficientProfile")
        .def_static("constant", &CoefficientProfile::constant, "length"_a, "p0"_a = 1.0, "k0"_a = 1.0)
        .def_static("exponential", &CoefficientProfile::exponential, "length"_a = 1.0, "rate"_a = 1.0)
        .def_static("affine", &CoefficientProfile::affine, "length"_a = 1.0, "slope"_a = 1.0)
        .def("with_force", &CoefficientProfile::with_force, "force"_a,
             "Copy with the force profile f(x) replaced by a callable")
        .def("with_sine_force", [](const CoefficientProfile& p) { return p.with_force(force::sine(p.length)); })
        .def("with_clamped_quartic_force",
             [](const CoefficientProfile& p) { return p.with_force(force::clamped_quartic(p.length)); })
        .def_readonly("name", &CoefficientProfile::name)
        .def_readonly("length", &CoefficientProfile::length)
        .def("p", [](const CoefficientProfile& c, double x) { return c.p(x); })
        .def("k", [](const CoefficientProfile& c, double x) { return c.k(x); })
        .def("f", [](const CoefficientProfile& c, double x) { return c.f(x); });

    py::class_<SpectralBasis>(m, "SpectralBasis")
        .def_property_readonly("grid", [](const SpectralBasis& b) { return to_array(b.grid); })
        .def_property_readonly("eigenfunctions", &eigenfunctions)
        .def_property_readonly("lambdas", [](const SpectralBasis& b) { return to_array(b.lambdas()); })
        .def_property_readonly("omegas", [](const SpectralBasis& b) { return to_array(b.omegas()); })
        .def_property_readonly("force_coefficients",
                               [](const SpectralBasis& b) { return to_array(b.force_coefficients()); })
        .def("truncated", &SpectralBasis::truncated, "n"_a)
        .def("__len__", &SpectralBasis::size);

    m.def("solve_eigenpairs",
          [](const CoefficientProfile& p, int n, int grid) { return solve_eigenpairs(p, n, grid); },
          "profile"_a, "n_modes"_a, "grid_size"_a);
    m.def("eigenvalue_asymptote", &eigenvalue_asymptote, "profile"_a);
    m.def("certify_spectrum", [](const SpectralBasis& b) {
        const auto c = certify_spectrum(b);
        return py::dict("asymptote"_a = c.asymptote, "gap_delta"_a = c.gap_delta, "growth_K"_a = c.growth_K,
                        "decay_bound"_a = c.decay_bound, "cj_omega4_tail"_a = c.cj_omega4_tail);
    });
    m.def("check_force_decay", [](const CoefficientProfile& p, const SpectralBasis& b) {
        const auto d = check_force_decay(p, b);
        return py::dict("scaled"_a = d.scaled, "zero_indices"_a = d.zero_indices,
                        "hypothesis_ok"_a = d.hypothesis_ok, "bounded"_a = d.bounded,
                        "tail_max"_a = d.tail_max, "tail_median"_a = d.tail_median, "warnings"_a = d.warnings);
    });

    py::class_<ModalState>(m, "ModalState")
        .def(py::init([](std::vector<double> s, std::vector<double> tau, std::vector<double> omega,
                         std::vector<double> c) {
                 ModalState st{std::move(s), std::move(tau), std::move(omega), std::move(c)};
                 st.validate();
                 return st;
             }),
             "s"_a, "tau"_a, "omega"_a, "c"_a)
        .def_readwrite("s", &ModalState::s)
        .def_readwrite("tau", &ModalState::tau)
        .def_readwrite("omega", &ModalState::omega)
        .def_readwrite("c", &ModalState::c)
        .def("__len__", &ModalState::size);

    py::class_<ControlSchedule>(m, "ControlSchedule")
        .def(py::init([](double horizon, std::vector<double> times, std::vector<double> values) {
                 ControlSchedule s{horizon, std::move(times), std::move(values)};
                 s.validate();
                 return s;
             }),
             "horizon"_a, "switch_times"_a, "values"_a)
        .def_static("bang", &ControlSchedule::bang, "horizon"_a, "leading_sign"_a, "switches"_a,
                    "singular_entry"_a = py::none())
        .def_static("constant", &ControlSchedule::constant, "horizon"_a, "value"_a)
        .def_readonly("horizon", &ControlSchedule::horizon)
        .def_readonly("switch_times", &ControlSchedule::switch_times)
        .def_readonly("values", &ControlSchedule::values)
        .def("value_at", &ControlSchedule::value_at)
        .def("bang_switches", &ControlSchedule::bang_switches)
        .def("singular_entry", &ControlSchedule::singular_entry);

    m.def("propagate_interval", &propagate_interval, "state"_a, "u"_a, "dt"_a);
    m.def("interval_cost", &interval_cost, "state"_a, "u"_a, "dt"_a);
    m.def("evaluate_schedule", [](const ModalState& st, const ControlSchedule& s) {
        const auto e = evaluate_schedule(st, s);
        return py::make_tuple(e.final_state, e.cost);
    }, "state"_a, "schedule"_a, "Returns (final_state, cost)");
    m.def("default_horizon", &default_horizon, "state"_a);

    py::class_<OptimizationResult>(m, "OptimizationResult")
        .def_readonly("schedule", &OptimizationResult::schedule)
        .def_readonly("cost", &OptimizationResult::cost)
        .def_readonly("cost_gain", &OptimizationResult::cost_gain)
        .def_readonly("n_switches", &OptimizationResult::n_switches)
        .def_readonly("stagnated", &OptimizationResult::stagnated);

    m.def("optimize_family",
          [](const ModalState& st, int k, double horizon, bool singular_tail, std::uint64_t seed) {
              OptimizerOptions o;
              o.singular_tail = singular_tail;
              o.seed = seed;
              py::gil_scoped_release release;
              return optimize_family(st, k, horizon, o);
          },
          "state"_a, "max_switches"_a, "horizon"_a, "singular_tail"_a = true, "seed"_a = 1);

    m.def("discrete_adjoint", [](const ModalState& st, const ControlSchedule& s, double tol) {
        const auto a = discrete_adjoint(st, s, tol);
        std::vector<double> p1(a.z0.psi1.data(), a.z0.psi1.data() + a.z0.psi1.size());
        std::vector<double> p2(a.z0.psi2.data(), a.z0.psi2.data() + a.z0.psi2.size());
        return py::dict("psi1"_a = p1, "psi2"_a = p2, "switch_times"_a = a.switch_times,
                        "h1_at_switch"_a = a.h1_at_switch, "h1_max"_a = a.h1_max,
                        "stationary"_a = a.stationary());
    }, "state"_a, "schedule"_a, "tolerance"_a = 1e-4);

    m.def("integrate_extremal",
          [](const ModalState& st, const std::vector<double>& psi1, const std::vector<double>& psi2,
             double horizon, double atol, double rtol) {
              IntegrationOptions io;
              io.tol = {atol, rtol};
              const auto z0 = extremal_start(st, psi1, psi2);
              ExtremalRun run;
              {
                  py::gil_scoped_release release;
                  run = integrate_extremal(z0, ModalPlant::from(st), horizon, io);
              }
              return run_dict(run, z0.size());
          },
          "state"_a, "psi1"_a, "psi2"_a, "horizon"_a, "atol"_a = 1e-10, "rtol"_a = 1e-10,
          "Feedback extremal from (psi1, psi2, s, tau)");

    m.def("integrate_schedule",
          [](const ModalState& st, const std::vector<double>& psi1, const std::vector<double>& psi2,
             const ControlSchedule& s, double atol, double rtol) {
              IntegrationOptions io;
              io.tol = {atol, rtol};
              const auto z0 = extremal_start(st, psi1, psi2);
              return run_dict(integrate_extremal(z0, ModalPlant::from(st), s, io), z0.size());
          },
          "state"_a, "psi1"_a, "psi2"_a, "schedule"_a, "atol"_a = 1e-10, "rtol"_a = 1e-10);

    py::class_<Scenario>(m, "Scenario")
        .def_readwrite("n_modes", &Scenario::n_modes)
        .def_readwrite("horizon", &Scenario::horizon)
        .def_readwrite("seed", &Scenario::seed)
        .def_property("output", [](const Scenario& s) { return s.output.string(); },
                      [](Scenario& s, const std::string& p) { s.output = p; });
    m.def("parse_scenario", &parse_scenario, "text"_a, "base_dir"_a = std::filesystem::path{});
    m.def("load_scenario", &load_scenario, "path"_a);
    m.def("modal_state", [](const Scenario& sc) { return prepare_problem(sc).state; }, "scenario"_a,
          "Rescaled modal state of a scenario's initial data");
    m.def("run_command", [](const std::string& name, const Scenario& sc) {
        py::gil_scoped_release release;
        return run_command(name, sc);
    }, "name"_a, "scenario"_a, "Runs eigen / simulate / optimize; returns the exit code");
}
