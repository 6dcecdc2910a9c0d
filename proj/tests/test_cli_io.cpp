#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "safespeed/io/cli.hpp"

using namespace safespeed;
using namespace safespeed::io;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("safespeed-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  fs::path file(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p) << content;
    return p;
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "safespeed");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string error_key(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InputError& ex) {
    return ex.key();
  }
  return "<no error>";
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, BuiltInDefaults) {
  const auto s = load_profile("defaults");
  EXPECT_EQ(s.flight, default_scenario());
  EXPECT_EQ(s.solver, SolverConfig{});
  EXPECT_EQ(s.sim, SimConfig{});
  EXPECT_FALSE(s.sweep);
  EXPECT_FALSE(s.latency_model);
}

TEST(Config, RejectsTightSpacingWithRelation) {
  TempDir dir;
  const auto path = dir.file("bad.json", R"({"flight": {"R": 0.4, "r": 0.1, "d": 0.37}})");
  try {
    parse_config(path);
    FAIL();
  } catch (const InputError& ex) {
    EXPECT_EQ(ex.key(), "flight.R");
    EXPECT_NE(std::string(ex.what()).find("R > r + d"), std::string::npos);
  }
}

TEST(Config, SingleOverrideOverDefaults) {
  TempDir dir;
  const auto s = parse_config(dir.file("e.json", R"({"flight": {"e": 0.02}})"));
  auto expected = default_scenario();
  expected.e = 0.02;
  EXPECT_EQ(s.flight, expected);
  EXPECT_EQ(s.solver, SolverConfig{});
  EXPECT_EQ(s.sim, SimConfig{});
}

TEST(Config, UnknownKeysNamed) {
  TempDir dir;
  EXPECT_EQ(error_key([&] { parse_config(dir.file("a.json", R"({"flght": {}})")); }), "flght");
  EXPECT_EQ(error_key([&] { parse_config(dir.file("b.json", R"({"flight": {"speed": 3}})")); }),
            "flight.speed");
  EXPECT_EQ(error_key([&] { parse_config(dir.file("c.json", R"({"solver": {"mode": "fast"}})")); }),
            "solver.mode");
  EXPECT_EQ(error_key([&] { parse_config(dir.file("d.json", R"({"sim": {"dt": "small"}})")); }),
            "sim.dt");
}

TEST(Config, MalformedAndMissingFiles) {
  TempDir dir;
  EXPECT_EQ(error_key([&] { parse_config(dir.file("m.json", "{\"flight\": ")); }), "config");
  EXPECT_EQ(error_key([&] { parse_config(dir / "absent.json"); }), "config");
}

TEST(Config, AllSections) {
  TempDir dir;
  const auto s = parse_config(dir.file("all.json", R"({
    "flight": {"tau": 0.01, "latency_components": [{"name": "depth", "seconds": 0.004},
                                                    {"name": "position", "seconds": 0.006}]},
    "solver": {"mode": "exact", "grid_points": 256, "threads": 2},
    "sim": {"collision_model": "explicit-obstacles", "dt": 5e-5},
    "sweep": {"param": "S", "values": [4, 8, 12], "run_simulator": true},
    "latency_model": {"c_e": 0.002}
  })"));
  EXPECT_EQ(s.solver.mode, ModelMode::exact);
  EXPECT_EQ(s.solver.grid_points, 256);
  EXPECT_EQ(s.solver.threads, 2u);
  EXPECT_EQ(s.sim.collision_model, CollisionModel::explicit_obstacles);
  ASSERT_TRUE(s.sweep);
  EXPECT_EQ(s.sweep->param, ParamField::S);
  EXPECT_EQ(s.sweep->values, (std::vector<double>{4, 8, 12}));
  EXPECT_EQ(s.sweep->base, s.flight);
  ASSERT_TRUE(s.latency_model);
  EXPECT_EQ(s.latency_model->c_e, 0.002);
  EXPECT_EQ(s.latency_model->tau0, LatencyModel{}.tau0);
  ASSERT_TRUE(s.flight.latency_components);
  EXPECT_EQ(s.flight.latency_components->size(), 2u);
}

TEST(Config, LatencyBreakdownMustMatch) {
  TempDir dir;
  const auto path = dir.file("l.json", R"({"flight": {"tau": 0.02,
      "latency_components": [{"name": "depth", "seconds": 0.004}]}})");
  EXPECT_EQ(error_key([&] { parse_config(path); }), "flight.tau");
}

TEST(Config, ThreeLayerPrecedence) {
  TempDir dir;
  dir.file("forest.json", R"({"flight": {"e": 0.02, "R": 4.0, "S": 7.0}})");
  ::setenv(kProfileDirEnv, (dir / "").c_str(), 1);
  const auto cfg = dir.file("cfg.json", R"({"flight": {"e": 0.03, "S": 8.0}})");
  const auto s = resolve_scenario("forest", cfg, {"e=0.04"});
  ::unsetenv(kProfileDirEnv);
  EXPECT_EQ(s.flight.e, 0.04);  // flag
  EXPECT_EQ(s.flight.S, 8.0);   // file
  EXPECT_EQ(s.flight.R, 4.0);   // profile
  EXPECT_EQ(s.flight.tau, 0.01);  // built-in
  EXPECT_EQ(s.profile, "forest");
}

TEST(Config, UnknownProfile) {
  ::unsetenv(kProfileDirEnv);
  EXPECT_EQ(error_key([] { load_profile("mars"); }), "profile");
}

TEST(Config, OverrideSyntax) {
  EXPECT_EQ(override_to_json("R=1e6"), json::parse(R"({"flight": {"R": 1e6}})"));
  EXPECT_EQ(override_to_json("solver.mode=exact"), json::parse(R"({"solver": {"mode": "exact"}})"));
  EXPECT_EQ(override_to_json("sweep.values=0,0.01"),
            json::parse(R"({"sweep": {"values": [0, 0.01]}})"));
  EXPECT_EQ(override_to_json("sweep.run_simulator=true"),
            json::parse(R"({"sweep": {"run_simulator": true}})"));
  EXPECT_EQ(error_key([] { override_to_json("R"); }), "--set");
}

TEST(Config, ScenarioJsonRoundTrip) {
  auto s = load_profile("defaults");
  s.sweep = SweepSpec{s.flight, ParamField::e, {0.0, 0.01}, true};
  s.latency_model = LatencyModel{};
  s.solver.mode = ModelMode::exact;
  EXPECT_EQ(scenario_from_json(to_json(s)), s);
  EXPECT_EQ(scenario_hash(scenario_from_json(to_json(s))), scenario_hash(s));
}

// ---------------------------------------------------------------------------
// Reports

namespace {

Scenario defaults() { return load_profile("defaults"); }

std::vector<Payload> sample_payloads() {
  const auto p = default_scenario();
  SolverConfig cfg;
  SimConfig sc;
  sc.record_trace = false;
  std::vector<Payload> out;
  out.emplace_back(max_safe_speed(p, cfg));
  auto zero = p;
  zero.a_max = 30.0;
  out.emplace_back(max_safe_speed(zero, cfg));
  out.emplace_back(sweep({p, ParamField::R, {0.2, 2.5, 3.0}, false}, cfg));
  out.emplace_back(validate_model({{p, ParamField::tau, {0.0, 0.01}, true}}, sc, cfg));
  out.emplace_back(coupling_surface(p, {0.0, 0.01}, {4.0, 6.0}, LatencyModel{}, cfg));
  out.emplace_back(crossing_curve(p, cfg, 20));
  out.emplace_back(simulate_run(p, sc, make_layout(p, sc), 12.0).verdict);
  out.emplace_back(empirical_max_speed(p, sc, make_layout(p, sc)));
  out.emplace_back(SweepFamily{ParamField::R,
                               {2.5, 3.5},
                               {sweep({with_field(p, ParamField::R, 2.5), ParamField::e, {0.0}}, cfg),
                                sweep({with_field(p, ParamField::R, 3.5), ParamField::e, {0.0}}, cfg)}});
  return out;
}

}  // namespace

TEST(Report, JsonRoundTripEveryKind) {
  TempDir dir;
  for (auto& payload : sample_payloads()) {
    auto rep = make_report(defaults(), payload);
    const auto path = dir / (std::string(payload_kind(payload)) + ".json");
    emit_report(rep, ReportFormat::json, path);
    EXPECT_EQ(read_report(path), rep) << payload_kind(payload);
    rep.wall_time_s = 0.125;
    emit_report(rep, ReportFormat::json, path);
    EXPECT_EQ(read_report(path), rep) << payload_kind(payload);
  }
}

TEST(Report, EmbedsResolvedScenario) {
  auto s = defaults();
  s.flight.e = 0.02;
  const auto j = to_json(make_report(s, max_safe_speed(s.flight, s.solver)));
  EXPECT_EQ(j.at("tool"), "safespeed");
  EXPECT_EQ(j.at("kind"), "solve");
  EXPECT_EQ(scenario_from_json(j.at("scenario")), s);
  EXPECT_EQ(j.at("scenario_hash"), scenario_hash(s));
  EXPECT_FALSE(j.contains("wall_time_s"));
}

TEST(Report, EmptySweepCsvIsHeaderOnly) {
  EXPECT_EQ(sweep_csv(SweepResult{}), "param,value,v_safe,binding,v1,v2,empirical,rel_err\n");
}

TEST(Report, LatencySweepCsvRows) {
  SolverConfig cfg;
  cfg.mode = ModelMode::exact;
  const auto r = sweep({default_scenario(), ParamField::tau, {0.0, 0.005, 0.01, 0.02, 0.03}, true},
                       cfg);
  const auto csv = sweep_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
    EXPECT_NE(line.back(), ',');  // rel_err present
    EXPECT_EQ(line.rfind("tau,", 0), 0u);
  }
  EXPECT_EQ(rows, 5);
}

TEST(Report, CsvNumberFormat) {
  SweepResult r;
  r.param = ParamField::e;
  SweepRow row;
  row.value = 1.0 / 3.0;
  row.solution = SpeedSolution{};
  row.solution->v_safe = 9.07975312345;
  row.solution->binding = Binding::stage2;
  r.rows.push_back(row);
  EXPECT_EQ(sweep_csv(r).substr(sweep_csv(r).find('\n') + 1), "e,0.333333333,9.07975312,stage2,,,,\n");
}

TEST(Report, OtherCsvHeaders) {
  const auto p = default_scenario();
  EXPECT_EQ(surface_csv({}).substr(0, 23), "e,S,tau,v_safe,binding\n");
  EXPECT_EQ(crossings_csv({}), "v_x,v_y_T,v_y_max_T,t_prime_over_T\n");
  SimConfig sc;
  const auto run = simulate_run(p, sc, make_layout(p, sc), 5.0);
  const auto trace = trace_csv(run.trace);
  EXPECT_EQ(trace.substr(0, trace.find('\n')), "t,x,y,vy,ay,r_inflated,phase");
  EXPECT_EQ(static_cast<std::size_t>(std::count(trace.begin(), trace.end(), '\n')), run.trace.size() + 1);
}

TEST(Report, UnwritablePath) {
  EXPECT_THROW(write_file_atomic("/nonexistent-dir/x/report.json", "{}"), InputError);
}

TEST(Report, AtomicReplaceLeavesNoTemp) {
  TempDir dir;
  write_file_atomic(dir / "a.csv", "one\n");
  write_file_atomic(dir / "a.csv", "two\n");
  EXPECT_EQ(slurp(dir / "a.csv"), "two\n");
  EXPECT_FALSE(fs::exists(dir / "a.csv.tmp"));
}

// ---------------------------------------------------------------------------
// Plots

TEST(Svg, CrossingCurvesWithMarkers) {
  const auto c = crossing_curve(default_scenario(), SolverConfig{}, 100);
  const auto svg = svg::render(svg::crossing_chart(c));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("v_x [m/s]"), std::string::npos);
  EXPECT_NE(svg.find("lateral speed [m/s]"), std::string::npos);
  EXPECT_NE(svg.find("v1="), std::string::npos);
  EXPECT_NE(svg.find("v_y,max(T)"), std::string::npos);
  EXPECT_EQ(svg, svg::render(svg::crossing_chart(crossing_curve(default_scenario(), SolverConfig{}, 100))));
}

TEST(Svg, TwoCurveDriftSweep) {
  const auto p = default_scenario();
  std::vector<std::pair<std::string, SweepResult>> curves;
  for (double R : {2.5, 3.5}) {
    curves.emplace_back("R = " + std::to_string(R),
                        sweep({with_field(p, ParamField::R, R), ParamField::e, {0, 0.01, 0.02, 0.03}},
                              SolverConfig{}));
  }
  const auto svg = svg::render(svg::sweep_chart(curves));
  EXPECT_EQ(std::count(svg.begin(), svg.end(), 'p') > 0, true);
  std::size_t polylines = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
    ++polylines;
  }
  EXPECT_EQ(polylines, 2u);
  EXPECT_NE(svg.find("e [-]"), std::string::npos);
  EXPECT_NE(svg.find("v_safe [m/s]"), std::string::npos);
}

TEST(Svg, SingleCellHeatmap) {
  const auto s = coupling_surface(default_scenario(), {0.01}, {6.0}, LatencyModel{}, SolverConfig{});
  const auto svg = svg::render(svg::surface_map(s));
  EXPECT_NE(svg.find("S [m]"), std::string::npos);
  EXPECT_NE(svg.find("stroke=\"red\""), std::string::npos);
}

TEST(Svg, EmptyDataRejected) {
  EXPECT_THROW(svg::render(svg::LineChart{}), InputError);
  EXPECT_THROW(svg::render(svg::Heatmap{}), InputError);
  EXPECT_THROW(svg::render(svg::sweep_chart({{"", SweepResult{}}})), InputError);
}

TEST(Svg, NiceTicks) {
  const auto ax = svg::detail::nice_axis(0.0, 24.82);
  EXPECT_EQ(ax.lo, 0.0);
  EXPECT_EQ(ax.hi, 25.0);
  EXPECT_EQ(ax.ticks.size(), 6u);
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, SolveDefaults) {
  const auto r = cli({"solve", "--profile", "defaults"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("v_safe   = 9.07"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("binding  = stage2"), std::string::npos);
  EXPECT_TRUE(r.err.empty());
}

TEST(Cli, SolveOpenWorld) {
  const auto r = cli({"solve", "--set", "R=1e6"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("v_safe   = 24.82"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("binding  = stage1"), std::string::npos);
}

TEST(Cli, ValidateLatencyPanel) {
  const auto r = cli({"validate", "--sweep", "tau", "--max-error", "0.20"});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, ValidatePublishedFormExceedsBound) {
  const auto r = cli({"validate", "--sweep", "tau", "--mode", "paper"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("bound exceeded"), std::string::npos);
}

TEST(Cli, InputErrorsExitOne) {
  EXPECT_EQ(cli({"solve", "--set", "R=0.4"}).code, 1);
  EXPECT_EQ(cli({"solve", "--set", "flight.speed=3"}).code, 1);
  EXPECT_EQ(cli({"solve", "--config", "/nonexistent.json"}).code, 1);
  EXPECT_EQ(cli({"fly"}).code, 1);
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"validate", "--sweep", "R"}).code, 1);
  EXPECT_EQ(cli({"solve", "--svg", "x.svg"}).code, 1);
  EXPECT_EQ(cli({"sweep", "--param", "e", "--values", "0.02,0.01"}).code, 1);
  EXPECT_EQ(cli({"simulate", "--vx", "-1"}).code, 1);
  const auto r = cli({"solve", "--set", "R=0.4"});
  EXPECT_NE(r.err.find("flight.R"), std::string::npos);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, Help) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("validate"), std::string::npos);
}

TEST(Cli, ReportsAreDeterministic) {
  TempDir dir;
  const auto a = dir / "a.json";
  const auto b = dir / "b.json";
  ASSERT_EQ(cli({"crossings", "--json", a.string(), "--svg", (dir / "a.svg").string()}).code, 0);
  ASSERT_EQ(cli({"crossings", "--json", b.string(), "--svg", (dir / "b.svg").string()}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(dir / "a.svg"), slurp(dir / "b.svg"));
  const auto rep = read_report(a);
  EXPECT_EQ(scenario_from_json(rep.scenario), load_profile("defaults"));
}

TEST(Cli, TimingOnlyWhenAsked) {
  TempDir dir;
  ASSERT_EQ(cli({"solve", "--timing", "--json", (dir / "t.json").string()}).code, 0);
  EXPECT_TRUE(read_report(dir / "t.json").wall_time_s.has_value());
  ASSERT_EQ(cli({"solve", "--json", (dir / "u.json").string()}).code, 0);
  EXPECT_FALSE(read_report(dir / "u.json").wall_time_s.has_value());
}

TEST(Cli, SweepWithSimulatorCsv) {
  TempDir dir;
  const auto csv = dir / "tau.csv";
  const auto r = cli({"--set", "solver.mode=exact", "sweep", "--param", "tau", "--values",
                      "0,0.005,0.01,0.02,0.03", "--simulate", "--csv", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = slurp(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST(Cli, SweepFamilyAndSurfacePlots) {
  TempDir dir;
  ASSERT_EQ(cli({"sweep", "--param", "e", "--values", "0,0.01,0.02,0.03", "--series-param", "R",
                 "--series-values", "2.5,3.5", "--svg", (dir / "e.svg").string(), "--json",
                 (dir / "e.json").string()})
                .code,
            0);
  EXPECT_TRUE(std::holds_alternative<SweepFamily>(read_report(dir / "e.json").payload));
  ASSERT_EQ(cli({"surface", "--e-grid", "0.01", "--S-grid", "6", "--svg", (dir / "s.svg").string()})
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir / "s.svg"));
}

TEST(Cli, SimulateTrace) {
  TempDir dir;
  const auto r = cli({"simulate", "--vx", "20", "--trace", (dir / "t.csv").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("exceeded-L-stage2"), std::string::npos);
  EXPECT_EQ(slurp(dir / "t.csv").rfind("t,x,y,vy,ay,r_inflated,phase\n", 0), 0u);
}

TEST(Cli, Empirical) {
  const auto r = cli({"empirical"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("v_max    = 17.3750"), std::string::npos) << r.out;
}
