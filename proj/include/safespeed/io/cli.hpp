#pragma once

// Command-line front end. Exit codes: 0 success, 1 input error, 2 numerical
// failure, 3 validation error bound exceeded.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "safespeed/envelope_solver.hpp"
#include "safespeed/errors.hpp"
#include "safespeed/io/report.hpp"
#include "safespeed/io/scenario.hpp"
#include "safespeed/io/svg.hpp"
#include "safespeed/kinematic_sim.hpp"
#include "safespeed/validation.hpp"

namespace safespeed::io {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitBoundExceeded = 3;

namespace detail {

struct CliOptions {
  std::optional<std::string> config;
  std::string profile = "defaults";
  std::vector<std::string> overrides;
  std::optional<std::string> json_path;
  std::optional<std::string> csv_path;
  std::optional<std::string> svg_path;
  std::optional<unsigned> threads;
  bool timing = false;

  int points = 200;

  std::optional<std::string> sweep_param;
  std::vector<double> sweep_values;
  bool simulate = false;
  std::optional<std::string> series_param;
  std::vector<double> series_values;

  std::vector<double> e_grid{0.0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03};
  std::vector<double> S_grid{4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0};

  double vx = 0.0;
  std::optional<std::string> trace_path;

  std::string validate_sweep = "all";
  double max_error = 0.20;
  std::string validate_mode = "exact";
};

inline std::string fixed(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string fixed(const std::optional<double>& v, int digits = 4) {
  return v ? fixed(*v, digits) : std::string("none");
}

inline ParamField parse_param(const std::string& name, const std::string& key) {
  auto f = param_field_from_string(name);
  if (!f) throw InputError("unknown parameter '" + name + "'", key);
  return *f;
}

class Runner {
 public:
  Runner(const CliOptions& opt, std::ostream& out, std::ostream& err)
      : opt_(opt), out_(out), err_(err), start_(std::chrono::steady_clock::now()) {}

  Scenario scenario() const {
    auto overrides = opt_.overrides;
    if (opt_.threads) overrides.push_back("solver.threads=" + std::to_string(*opt_.threads));
    std::optional<std::filesystem::path> cfg;
    if (opt_.config) cfg = *opt_.config;
    return resolve_scenario(opt_.profile, cfg, overrides);
  }

  int solve() {
    no_plot("solve");
    const auto s = scenario();
    const auto sol = max_safe_speed(s.flight, s.solver);
    out_ << "v_safe   = " << fixed(sol.v_safe) << " m/s\n"
         << "binding  = " << to_string(sol.binding) << "\n"
         << "v_x_max  = " << fixed(sol.v_x_max) << " m/s\n"
         << "v1       = " << fixed(sol.v1) << "\n"
         << "v2       = " << fixed(sol.v2) << "\n"
         << "mode     = " << to_string(s.solver.mode) << "\n";
    if (sol.terminal) {
      out_ << "y(T)     = " << fixed(sol.terminal->y_T) << " m\n"
           << "v_y(T)   = " << fixed(sol.terminal->v_y_T) << " m/s\n"
           << "t'       = " << fixed(sol.terminal->t_prime, 6) << " s\n";
    }
    emit(s, sol);
    return kExitOk;
  }

  int crossings() {
    const auto s = scenario();
    const auto c = crossing_curve(s.flight, s.solver, opt_.points);
    const auto sol = max_safe_speed(s.flight, s.solver);
    out_ << "v_x_max  = " << fixed(c.v_x_max) << " m/s\n"
         << "v1       = " << fixed(c.v1) << "\n"
         << "v2       = " << fixed(c.v2) << "\n"
         << "argmax t'/T at v_x = " << fixed(sol.saturation_ratio_peak) << " m/s\n"
         << "samples  = " << c.v_x.size() << "\n";
    if (opt_.svg_path) write_file_atomic(*opt_.svg_path, svg::render(svg::crossing_chart(c)));
    emit(s, c);
    return kExitOk;
  }

  int sweep_cmd() {
    const auto s = scenario();
    SweepSpec spec = s.sweep.value_or(SweepSpec{});
    spec.base = s.flight;
    if (opt_.sweep_param) spec.param = parse_param(*opt_.sweep_param, "--param");
    if (!opt_.sweep_values.empty()) spec.values = opt_.sweep_values;
    if (opt_.simulate) spec.run_simulator = true;
    if (spec.values.empty()) throw InputError("no sweep values given", "--values");
    validate(spec);

    if (!opt_.series_param) {
      const auto r = sweep(spec, s.solver, s.sim);
      print_sweep(r);
      if (opt_.svg_path) {
        write_file_atomic(*opt_.svg_path, svg::render(svg::sweep_chart({{"", r}})));
      }
      emit(s, r);
      return kExitOk;
    }

    if (opt_.series_values.empty()) throw InputError("no series values given", "--series-values");
    SweepFamily fam;
    fam.series_param = parse_param(*opt_.series_param, "--series-param");
    fam.series_values = opt_.series_values;
    std::vector<std::pair<std::string, SweepResult>> curves;
    for (double sv : fam.series_values) {
      SweepSpec member = spec;
      member.base = with_field(spec.base, fam.series_param, sv);
      validate(member.base);
      out_ << "# " << to_string(fam.series_param) << " = " << sv << "\n";
      fam.members.push_back(sweep(member, s.solver, s.sim));
      print_sweep(fam.members.back());
      char label[64];
      std::snprintf(label, sizeof label, "%s = %g %s", to_string(fam.series_param), sv,
                    unit_of(fam.series_param));
      curves.emplace_back(label, fam.members.back());
    }
    if (opt_.svg_path) write_file_atomic(*opt_.svg_path, svg::render(svg::sweep_chart(curves)));
    emit(s, fam);
    return kExitOk;
  }

  int surface() {
    auto s = scenario();
    if (!s.latency_model) s.latency_model = LatencyModel{};
    const auto r = coupling_surface(s.flight, opt_.e_grid, opt_.S_grid, *s.latency_model, s.solver);
    const auto& best = r.at(r.argmax_e, r.argmax_S);
    out_ << "cells    = " << r.cells.size() << "\n"
         << "argmax   = e " << best.e << ", S " << best.S << " m (tau " << fixed(best.tau, 5)
         << " s)\n"
         << "v_safe   = " << fixed(best.v_safe) << " m/s\n";
    const bool corner = r.argmax_e == 0 && r.argmax_S + 1 == r.S_grid.size();
    out_ << "interior = " << (corner ? "no (min e, max S corner)" : "yes") << "\n";
    if (opt_.svg_path) write_file_atomic(*opt_.svg_path, svg::render(svg::surface_map(r)));
    emit(s, r);
    return kExitOk;
  }

  int simulate() {
    no_plot("simulate");
    auto s = scenario();
    if (!(opt_.vx > 0.0)) throw InputError("must be > 0", "--vx");
    s.sim.record_trace = opt_.trace_path.has_value();
    const auto run = simulate_run(s.flight, s.sim, make_layout(s.flight, s.sim), opt_.vx);
    out_ << "outcome  = " << to_string(run.verdict.outcome) << "\n"
         << "y_max    = " << fixed(run.verdict.y_max) << " m\n"
         << "y(T)     = " << fixed(run.verdict.y_terminal) << " m\n"
         << "v_y(T)   = " << fixed(run.verdict.v_y_terminal) << " m/s\n";
    if (opt_.trace_path) {
      write_file_atomic(*opt_.trace_path, trace_csv(run.trace));
      out_ << "trace    = " << run.trace.size() << " samples\n";
    }
    emit(s, run.verdict);
    return kExitOk;
  }

  int empirical() {
    no_plot("empirical");
    const auto s = scenario();
    const auto r = empirical_max_speed(s.flight, s.sim, make_layout(s.flight, s.sim));
    out_ << "v_max    = " << fixed(r.v_max) << " m/s\n"
         << "bracket  = [" << fixed(r.last_cleared) << ", " << fixed(r.first_failed) << "]\n"
         << "runs     = " << r.runs << "\n";
    emit(s, r);
    return kExitOk;
  }

  int validate_cmd() {
    no_plot("validate");
    auto s = scenario();
    auto mode = model_mode_from_string(opt_.validate_mode);
    if (!mode) throw InputError("expected paper or exact", "--mode");
    s.solver.mode = *mode;
    if (!(opt_.max_error > 0.0)) throw InputError("must be > 0", "--max-error");

    auto all = default_validation_sweeps(s.flight);
    std::vector<SweepSpec> chosen;
    for (auto& spec : all) {
      if (opt_.validate_sweep == "all" || opt_.validate_sweep == to_string(spec.param)) {
        chosen.push_back(spec);
      }
    }
    if (chosen.empty()) throw InputError("expected tau, e, S or all", "--sweep");
    const auto rep = validate_model(chosen, s.sim, s.solver);

    bool exceeded = false;
    out_ << "param      value     model  empirical   rel_err  (published-form model, rel_err)\n";
    for (const auto& panel : rep.panels) {
      for (const auto& row : panel.rows) {
        char line[200];
        if (!row.error.empty()) {
          std::snprintf(line, sizeof line, "%-6s %9.4g  error: %s\n", to_string(panel.param),
                        row.value, row.error.c_str());
        } else {
          std::snprintf(line, sizeof line, "%-6s %9.4g %9.4f %10s %9s  (%.4f, %s)\n",
                        to_string(panel.param), row.value, row.v_safe,
                        fixed(row.empirical).c_str(), fixed(row.rel_err).c_str(), row.v_safe_paper,
                        fixed(row.rel_err_paper).c_str());
        }
        out_ << line;
        if (row.rel_err && *row.empirical <= rep.speed_ceiling && *row.rel_err > opt_.max_error) {
          exceeded = true;
        }
      }
    }
    out_ << "max rel_err (empirical <= " << rep.speed_ceiling << " m/s, " << rep.counted_points
         << " points) = " << fixed(rep.max_rel_error) << "  bound " << opt_.max_error << "\n"
         << "published-form max rel_err = " << fixed(rep.max_rel_error_paper) << "\n";
    emit(s, rep);
    if (rep.failed_points > 0) {
      err_ << "error: " << rep.failed_points << " validation point(s) failed\n";
      return kExitNumerical;
    }
    if (exceeded) {
      err_ << "validation error bound exceeded\n";
      return kExitBoundExceeded;
    }
    return kExitOk;
  }

 private:
  void no_plot(const char* cmd) const {
    if (opt_.svg_path) throw InputError(std::string("no plot for '") + cmd + "'", "--svg");
  }

  void print_sweep(const SweepResult& r) const {
    out_ << to_string(r.param) << "\tv_safe\tbinding\tempirical\n";
    for (const auto& row : r.rows) {
      out_ << row.value << "\t";
      if (row.solution) {
        out_ << fixed(row.solution->v_safe) << "\t" << to_string(row.solution->binding);
      } else {
        out_ << "error: " << row.error << "\t";
      }
      out_ << "\t" << (row.empirical ? fixed(*row.empirical) : std::string("-")) << "\n";
    }
  }

  void emit(const Scenario& s, Payload payload) const {
    if (!opt_.json_path && !opt_.csv_path && !opt_.timing) return;
    Report rep = make_report(s, std::move(payload));
    if (opt_.timing) {
      rep.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      err_ << "wall time " << fixed(*rep.wall_time_s, 3) << " s\n";
    }
    if (opt_.json_path) emit_report(rep, ReportFormat::json, *opt_.json_path);
    if (opt_.csv_path) emit_report(rep, ReportFormat::csv, *opt_.csv_path);
  }

  const CliOptions& opt_;
  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  detail::CliOptions opt;
  CLI::App app{"Maximum safe forward speed of a UAV under localization drift and latency",
               "safespeed"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", opt.config, "JSON scenario file");
  app.add_option("--profile", opt.profile, "Named base scenario")->capture_default_str();
  app.add_option("--set", opt.overrides, "Override KEY=VALUE (repeatable, applied last)")
      ->allow_extra_args(false);
  app.add_option("--json", opt.json_path, "Write a JSON report");
  app.add_option("--csv", opt.csv_path, "Write a CSV table");
  app.add_option("--svg", opt.svg_path, "Write an SVG chart");
  app.add_option("--threads", opt.threads, "Worker threads (0 = all cores)");
  app.add_flag("--timing", opt.timing, "Record wall time in the report");

  auto* solve = app.add_subcommand("solve", "Maximum safe speed for one scenario");
  auto* crossings = app.add_subcommand("crossings", "Stage-2 crossings and t'/T curve data");
  crossings->add_option("--points", opt.points, "Samples over (0, v_x_max]")
      ->capture_default_str();
  auto* sweep = app.add_subcommand("sweep", "One-at-a-time parameter sweep");
  sweep->add_option("--param", opt.sweep_param, "Swept parameter");
  sweep->add_option("--values", opt.sweep_values, "Strictly increasing grid")->delimiter(',');
  sweep->add_flag("--simulate", opt.simulate, "Also run the simulator at every point");
  sweep->add_option("--series-param", opt.series_param, "Second parameter, one curve per value");
  sweep->add_option("--series-values", opt.series_values, "Values of the second parameter")
      ->delimiter(',');
  auto* surface = app.add_subcommand("surface", "v_safe over (e, S) with coupled latency");
  surface->add_option("--e-grid", opt.e_grid, "Drift-rate grid")->delimiter(',');
  surface->add_option("--S-grid", opt.S_grid, "Sensing-range grid [m]")->delimiter(',');
  auto* simulate = app.add_subcommand("simulate", "Single simulator run");
  simulate->add_option("--vx", opt.vx, "Forward speed [m/s]")->required();
  simulate->add_option("--trace", opt.trace_path, "Write the per-step trace CSV");
  auto* empirical = app.add_subcommand("empirical", "Simulator maximum speed by bisection");
  auto* validate = app.add_subcommand("validate", "Model against simulator over sweeps");
  validate->add_option("--sweep", opt.validate_sweep, "tau, e, S or all")->capture_default_str();
  validate->add_option("--max-error", opt.max_error, "Relative error bound")
      ->capture_default_str();
  validate->add_option("--mode", opt.validate_mode, "Model form: exact or paper")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  }

  detail::Runner run(opt, out, err);
  try {
    if (solve->parsed()) return run.solve();
    if (crossings->parsed()) return run.crossings();
    if (sweep->parsed()) return run.sweep_cmd();
    if (surface->parsed()) return run.surface();
    if (simulate->parsed()) return run.simulate();
    if (empirical->parsed()) return run.empirical();
    if (validate->parsed()) return run.validate_cmd();
  } catch (const InputError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const LatencyInfeasible& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception& ex) {
    err << "numerical failure: " << ex.what() << "\n";
    return kExitNumerical;
  }
  return kExitInput;
}

}  // namespace safespeed::io
