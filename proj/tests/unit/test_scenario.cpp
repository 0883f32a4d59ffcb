#include "chatterbar/commands.hpp"
#include "chatterbar/error.hpp"
#include "chatterbar/scenario.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

using namespace chatterbar;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::path(testing::TempDir()) / ("chatterbar_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& p)
{
    return nlohmann::json::parse(slurp(p));
}

std::optional<ErrorCode> code_of(const std::string& text)
{
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

Scenario one_mode_scenario(const fs::path& out)
{
    Scenario sc = parse_scenario(R"({
        "force": "sine",
        "initial": {"displacement": "mode:1", "amplitude": 0.5},
        "modes": 1,
        "controller": {"type": "optimize", "max_switches": 2}
    })");
    sc.output = out;
    return sc;
}

}  // namespace

TEST(ParseScenario, DefaultsAndFields)
{
    const Scenario d = parse_scenario("{}");
    EXPECT_EQ(d.profile.builtin, "constant");
    EXPECT_DOUBLE_EQ(d.profile.length, pi);
    EXPECT_EQ(d.force, "sine");
    EXPECT_EQ(d.n_modes, 0);
    EXPECT_EQ(d.horizon, 0.0);
    EXPECT_EQ(d.controller.kind, ControllerKind::feedback);

    const Scenario s = parse_scenario(R"({
        "profile": {"builtin": "exponential", "rate": 2.0},
        "force": "clamped_quartic",
        "initial": {"displacement": "parabola", "amplitude": 0.01, "velocity": "mode:2"},
        "modes": "auto",
        "tail_target": 1e-8,
        "horizon": 12.5,
        "controller": {"type": "feedback", "psi0": {"psi1": [0.1], "psi2": [0.2]}},
        "tolerances": {"atol": 1e-12, "h1": 1e-9},
        "field": {"time_intervals": 500, "x_stride": 4, "export": false},
        "output": "runs/a",
        "seed": 42
    })", "/base");
    EXPECT_EQ(s.profile.builtin, "exponential");
    EXPECT_EQ(s.profile.length, 1.0);
    EXPECT_EQ(s.profile.rate, 2.0);
    EXPECT_EQ(s.initial.velocity, "mode:2");
    EXPECT_EQ(s.tail_target, 1e-8);
    EXPECT_EQ(s.horizon, 12.5);
    EXPECT_EQ(s.controller.psi1, std::vector<double>{0.1});
    EXPECT_EQ(s.tolerances.atol, 1e-12);
    EXPECT_EQ(s.tolerances.feedback.h1, 1e-9);
    EXPECT_EQ(s.field.time_intervals, 500);
    EXPECT_FALSE(s.field.export_csv);
    EXPECT_EQ(s.output, fs::path("/base/runs/a"));
    EXPECT_EQ(s.seed, 42u);

    const Scenario o = parse_scenario(R"({"controller": {"type": "optimize", "max_switches": 0,
                                                         "singular_tail": false}})");
    EXPECT_EQ(o.controller.kind, ControllerKind::optimize);
    EXPECT_EQ(o.controller.max_switches, 0);
    EXPECT_FALSE(o.controller.singular_tail);
}

TEST(ParseScenario, ConfigErrors)
{
    EXPECT_EQ(code_of("not json"), ErrorCode::config);
    EXPECT_EQ(code_of("[1, 2]"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"horizon": -1})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"horizon": "later"})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"tolerances": {"atol": 0}})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"controller": {"type": "magic"}})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"controller": {"type": "schedule"}})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"controller": {"psi0": {"psi1": [1, 2], "psi2": [1]}}})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"modes": "many"})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"modes": 100})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"seed": "x"})"), ErrorCode::config);
    EXPECT_EQ(code_of(R"({"field": {"time_intervals": 2}})"), ErrorCode::config);
    EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST(PrepareProblem, SingleModeData)
{
    Scenario sc = parse_scenario(R"({"initial": {"displacement": "mode:1", "amplitude": 0.5}})");
    const Problem pb = prepare_problem(sc);
    // every other coefficient vanishes, so the automatic truncation keeps one mode
    ASSERT_EQ(pb.state.size(), 1u);
    EXPECT_NEAR(pb.state.s[0], 0.5, 1e-10);
    EXPECT_EQ(pb.state.tau[0], 0.0);
    EXPECT_NEAR(pb.state.omega[0], 1.0, 1e-10);
    // C_1 = int sin x sqrt(2/pi) sin x dx = sqrt(pi/2)
    EXPECT_NEAR(pb.state.c[0], std::sqrt(pi / 2), 1e-9);
    EXPECT_NEAR(pb.horizon, 40 * pi, 1e-8);
    EXPECT_NEAR(pb.total_energy, 0.25, 1e-10);

    sc.initial.displacement = "mode:x";
    EXPECT_THROW(prepare_problem(sc), Error);
}

TEST(PrepareProblem, ParabolaAutoTruncation)
{
    const Scenario sc = parse_scenario(R"({
        "force": "clamped_quartic",
        "initial": {"displacement": "parabola", "amplitude": 0.01},
        "tail_target": 1e-6
    })");
    const Problem pb = prepare_problem(sc);
    const std::size_t n = pb.state.size();
    EXPECT_GE(n, 3u);
    EXPECT_LT(n, 32u);
    EXPECT_LE(pb.truncation_tail, 1e-6 * pb.total_energy);
    // the quartic is symmetric about l/2 so even modes carry no force
    for (int j : pb.force.zero_indices) EXPECT_EQ(j % 2, 0);
}

TEST(LoadSchedule, BothLayouts)
{
    const fs::path dir = scratch_dir("schedules");
    {
        std::ofstream(dir / "one.json")
            << R"({"horizon": 5.0, "leading_sign": -1, "switch_times": [1.0, 2.0], "singular_entry": 4.0})";
        std::ofstream(dir / "family.json")
            << R"({"schedules": [{"horizon": 3.0, "leading_sign": 1, "switch_times": []},
                                 {"horizon": 3.0, "leading_sign": 1, "switch_times": [1.5]}]})";
        std::ofstream(dir / "bad.json") << R"({"horizon": 3.0, "leading_sign": 1, "switch_times": [2.0, 1.0]})";
    }
    const auto a = load_schedule(dir / "one.json");
    EXPECT_EQ(a.horizon, 5.0);
    EXPECT_EQ(a.leading_sign(), -1);
    EXPECT_EQ(a.bang_switches(), (std::vector<double>{1.0, 2.0}));
    ASSERT_TRUE(a.singular_entry());
    EXPECT_EQ(*a.singular_entry(), 4.0);

    const auto b = load_schedule(dir / "family.json");
    EXPECT_EQ(b.bang_switches(), std::vector<double>{1.5});
    EXPECT_THROW(load_schedule(dir / "bad.json"), Error);
    EXPECT_THROW(load_schedule(dir / "missing.json"), Error);
}

TEST(Commands, EigenWritesCertificateAndFlagsZeroForce)
{
    const fs::path dir = scratch_dir("eigen");
    Scenario sc = parse_scenario(R"({"modes": 6})");
    sc.output = dir / "sine";
    // sin x is h_1 itself on the constant bar, so C_2.. vanish
    EXPECT_EQ(run_command("eigen", sc), kExitWarning);
    const auto cert = read_json(dir / "sine" / "certificate.json");
    EXPECT_NEAR(cert["certificate"]["gap_delta"].get<double>(), 1.0, 1e-8);
    EXPECT_TRUE(fs::exists(dir / "sine" / "basis.csv"));
    EXPECT_TRUE(fs::exists(dir / "sine" / "basis_grid.csv"));

    // a nonuniform bar couples the sine force to every mode
    Scenario affine = parse_scenario(R"({"profile": {"builtin": "affine"}, "modes": 6})");
    affine.output = dir / "affine";
    EXPECT_EQ(run_command("eigen", affine), kExitOk);
    EXPECT_TRUE(read_json(dir / "affine" / "certificate.json")["force"]["zero_indices"].empty());

    // f = h_1 is orthogonal to every other mode
    sc.force = "mode:1";
    sc.output = dir / "h1";
    EXPECT_EQ(run_command("eigen", sc), kExitWarning);
    const auto warn = read_json(dir / "h1" / "certificate.json");
    EXPECT_EQ(warn["exit_code"].get<int>(), kExitWarning);
    EXPECT_FALSE(warn["force"]["zero_indices"].empty());

    EXPECT_EQ(run_command("unknown", sc), kExitError);
}

TEST(Commands, SimulateZeroDataCostsNothing)
{
    const fs::path dir = scratch_dir("zero");
    Scenario sc = parse_scenario(R"({"initial": {"displacement": "zero"}, "modes": 2, "horizon": 3.0,
                                     "field": {"time_intervals": 60}})");
    sc.output = dir;
    EXPECT_EQ(run_command("simulate", sc), kExitOk);
    const auto rep = read_json(dir / "chattering_report.json");
    EXPECT_EQ(rep["modal_cost"].get<double>(), 0.0);
    EXPECT_TRUE(rep["switch_times"].empty());
    const auto field = read_json(dir / "field_summary.json");
    EXPECT_EQ(field["physical_cost"].get<double>(), 0.0);
    EXPECT_TRUE(fs::exists(dir / "trajectory.csv"));
    EXPECT_TRUE(fs::exists(dir / "field.csv"));
}

TEST(Commands, OptimizeIsMonotoneAndDeterministic)
{
    const fs::path dir = scratch_dir("optimize");
    EXPECT_EQ(run_command("optimize", one_mode_scenario(dir / "a")), kExitOk);
    EXPECT_EQ(run_command("optimize", one_mode_scenario(dir / "b")), kExitOk);
    EXPECT_EQ(slurp(dir / "a" / "schedules.json"), slurp(dir / "b" / "schedules.json"));
    EXPECT_EQ(slurp(dir / "a" / "cost_vs_k.csv"), slurp(dir / "b" / "cost_vs_k.csv"));

    const auto doc = read_json(dir / "a" / "schedules.json");
    const auto& fam = doc["schedules"];
    ASSERT_EQ(fam.size(), 3u);
    for (std::size_t k = 1; k < fam.size(); ++k) {
        EXPECT_LE(fam[k]["cost"].get<double>(), fam[k - 1]["cost"].get<double>());
    }

    // simulating the exported schedule reproduces its cost
    Scenario sim = one_mode_scenario(dir / "sim");
    sim.controller.kind = ControllerKind::schedule;
    sim.controller.schedule_file = dir / "a" / "schedules.json";
    sim.field.time_intervals = 200;
    sim.tolerances.atol = 1e-14;
    sim.tolerances.rtol = 1e-13;
    EXPECT_EQ(run_command("simulate", sim), kExitOk);
    const auto rep = read_json(dir / "sim" / "chattering_report.json");
    EXPECT_NEAR(rep["oracle_cost"].get<double>(), fam[2]["cost"].get<double>(),
                1e-9 * fam[2]["cost"].get<double>());
    EXPECT_LE(rep["oracle_cost_gap"].get<double>(), 1e-9);
    EXPECT_LE(rep["hamiltonian_drift"].get<double>(), 1e-6);
}
