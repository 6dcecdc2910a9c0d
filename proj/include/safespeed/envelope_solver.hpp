#pragma once

// Numerical layer over the closed forms: locates where the stage-1 terminal
// lateral speed crosses the stage-2 admissible bound, resolves the maximum
// safe speed and its binding constraint, and evaluates sweeps and the
// latency-coupling surface.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "safespeed/envelope_model.hpp"
#include "safespeed/errors.hpp"
#include "safespeed/flight_params.hpp"
#include "safespeed/kinematic_sim.hpp"
#include "safespeed/parallel.hpp"

namespace safespeed {

struct SolverConfig {
  int grid_points = 512;
  double v_tolerance = 1e-4;
  ModelMode mode = ModelMode::paper;
  unsigned threads = 1;  ///< sweep/surface workers; 0 = hardware concurrency

  bool operator==(const SolverConfig&) const = default;
};

inline void validate(const SolverConfig& cfg) {
  if (cfg.grid_points < 64) throw InputError("must be >= 64", "solver.grid_points");
  if (!(cfg.v_tolerance > 0.0)) throw InputError("must be > 0", "solver.v_tolerance");
}

/// Bisects a sign change of `positive` between `good` (false) and `bad`
/// (true) until they are within `tol`; returns {good, bad}.
template <class Pred>
std::pair<double, double> bisect_boundary(Pred positive, double good, double bad, double tol) {
  while (std::abs(bad - good) > tol) {
    const double mid = 0.5 * (good + bad);
    if (mid == good || mid == bad) break;
    if (positive(mid)) {
      bad = mid;
    } else {
      good = mid;
    }
  }
  return {good, bad};
}

/// Stage-2 margin g(v) = v_y(T) - v_y,max(T). +inf where no terminal speed
/// is admissible at all; stage 2 holds where g <= 0.
inline double stage2_margin(const FlightParams& p, double v_x, ModelMode mode) {
  const auto ts = terminal_state(p, v_x, mode);
  if (!ts.v_y_max_T) return std::numeric_limits<double>::infinity();
  return ts.v_y_T - *ts.v_y_max_T;
}

struct Crossings {
  std::optional<double> v1;  ///< first speed where stage 2 starts failing
  std::optional<double> v2;  ///< next speed where it holds again
  bool infeasible_from_zero = false;  ///< g > 0 already at the slowest probe
};

/// Scans (0, v_x_max] on the coarse grid and bisects each sign change of the
/// stage-2 margin. v1 is returned on its feasible side, v2 likewise.
inline Crossings find_crossings(const FlightParams& p, const SolverConfig& cfg) {
  validate(p);
  validate(cfg);
  const double v_top = stage1_speed_limit(p);
  const int n = cfg.grid_points;
  auto fails = [&](double v) {
    return stage2_margin(p, v, cfg.mode) > kFeasibilitySlack;
  };

  Crossings out;
  // Just above zero the stage-1 manoeuvre is slowest; if stage 2 fails even
  // there, no positive speed is safe.
  const double v_floor = v_top / (static_cast<double>(n) * 1024.0);
  double prev_v = v_floor;
  bool prev_fail = fails(v_floor);
  if (prev_fail) {
    out.infeasible_from_zero = true;
    out.v1 = 0.0;
  }
  for (int i = 1; i <= n; ++i) {
    const double v = v_top * static_cast<double>(i) / static_cast<double>(n);
    const bool fail = fails(v);
    if (fail != prev_fail) {
      if (!out.v1) {
        out.v1 = bisect_boundary(fails, prev_v, v, cfg.v_tolerance).first;
      } else if (!out.v2 && !fail) {
        out.v2 = bisect_boundary(fails, v, prev_v, cfg.v_tolerance).first;
        break;
      }
    }
    prev_v = v;
    prev_fail = fail;
  }
  return out;
}

/// t'/T with the published switch time.
inline double saturation_ratio(const FlightParams& p, double v_x) {
  const double v_top = stage1_speed_limit(p);
  if (!(v_x > 0.0 && v_x <= v_top)) throw InputError("outside (0, v_x_max]", "v_x");
  const auto dp = derive(p, v_x);
  return accel_switch_time(p, v_x, ModelMode::paper).t_prime / dp.T;
}

enum class Binding { stage1, stage2, latency };

inline const char* to_string(Binding b) {
  switch (b) {
    case Binding::stage1: return "stage1";
    case Binding::stage2: return "stage2";
    case Binding::latency: return "latency";
  }
  return "?";
}

inline std::optional<Binding> binding_from_string(std::string_view s) {
  if (s == "stage1") return Binding::stage1;
  if (s == "stage2") return Binding::stage2;
  if (s == "latency") return Binding::latency;
  return std::nullopt;
}

struct SpeedSolution {
  double v_safe = 0.0;
  double v_x_max = 0.0;
  std::optional<double> v1;
  std::optional<double> v2;
  Binding binding = Binding::stage1;
  std::optional<TerminalState> terminal;  ///< absent for a zero-speed solution
  double saturation_ratio_peak = 0.0;     ///< argmax of t'/T over the grid

  bool operator==(const SpeedSolution&) const = default;
};

/// Maximum safe forward speed. Speeds above v1 are never returned, even if
/// stage 2 holds again past v2.
inline SpeedSolution max_safe_speed(const FlightParams& p, const SolverConfig& cfg) {
  const auto cr = find_crossings(p, cfg);
  SpeedSolution sol;
  sol.v_x_max = stage1_speed_limit(p);
  sol.v1 = cr.v1;
  sol.v2 = cr.v2;
  if (cr.v1 && *cr.v1 < sol.v_x_max) {
    sol.v_safe = *cr.v1;
    sol.binding = Binding::stage2;
  } else {
    sol.v_safe = sol.v_x_max;
    sol.binding = Binding::stage1;
  }
  if (sol.v_safe > 0.0) sol.terminal = terminal_state(p, sol.v_safe, cfg.mode);

  double best = -1.0;
  for (int i = 1; i <= cfg.grid_points; ++i) {
    const double v = sol.v_x_max * static_cast<double>(i) / static_cast<double>(cfg.grid_points);
    const double ratio = saturation_ratio(p, v);
    if (ratio > best) {
      best = ratio;
      sol.saturation_ratio_peak = v;
    }
  }
  return sol;
}

/// v_y(T), v_y,max(T) and t'/T sampled over (0, v_x_max] for plotting.
struct CrossingCurve {
  ModelMode mode = ModelMode::paper;
  double v_x_max = 0.0;
  std::optional<double> v1;
  std::optional<double> v2;
  std::vector<double> v_x;
  std::vector<double> v_y_T;
  std::vector<std::optional<double>> v_y_max_T;
  std::vector<double> ratio;

  bool operator==(const CrossingCurve&) const = default;
};

inline CrossingCurve crossing_curve(const FlightParams& p, const SolverConfig& cfg, int points) {
  if (points < 2) throw InputError("must be >= 2", "points");
  const auto cr = find_crossings(p, cfg);
  CrossingCurve c;
  c.mode = cfg.mode;
  c.v_x_max = stage1_speed_limit(p);
  c.v1 = cr.v1;
  c.v2 = cr.v2;
  for (int i = 1; i <= points; ++i) {
    const double v = c.v_x_max * static_cast<double>(i) / static_cast<double>(points);
    const auto ts = terminal_state(p, v, cfg.mode);
    c.v_x.push_back(v);
    c.v_y_T.push_back(ts.v_y_T);
    c.v_y_max_T.push_back(ts.v_y_max_T);
    c.ratio.push_back(saturation_ratio(p, v));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepSpec {
  FlightParams base;
  ParamField param = ParamField::tau;
  std::vector<double> values;
  bool run_simulator = false;
};

inline void validate(const SweepSpec& spec) {
  for (std::size_t i = 1; i < spec.values.size(); ++i) {
    if (!(spec.values[i] > spec.values[i - 1])) {
      throw InputError("grid must be strictly increasing", "sweep.values");
    }
  }
}

struct SweepRow {
  double value = 0.0;
  std::string params_hash;
  std::optional<SpeedSolution> solution;
  std::optional<double> empirical;
  std::optional<double> rel_err;
  std::string error;  ///< non-empty when this row failed

  Binding binding() const { return solution ? solution->binding : Binding::latency; }

  bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
  ParamField param = ParamField::tau;
  std::vector<SweepRow> rows;

  bool operator==(const SweepResult&) const = default;
};

/// One independent solve per grid value (optionally with the simulator's
/// empirical speed). A failing row records its error and the sweep goes on.
inline SweepResult sweep(const SweepSpec& spec, const SolverConfig& cfg,
                         const SimConfig& sim = {}) {
  validate(spec);
  validate(cfg);
  SweepResult out;
  out.param = spec.param;
  out.rows.resize(spec.values.size());
  parallel_for(spec.values.size(), cfg.threads, [&](std::size_t i) {
    SweepRow& row = out.rows[i];
    row.value = spec.values[i];
    try {
      const auto p = with_field(spec.base, spec.param, row.value);
      row.params_hash = params_hash(p);
      validate(p);
      row.solution = max_safe_speed(p, cfg);
      if (spec.run_simulator) {
        const auto emp = empirical_max_speed(p, sim, make_layout(p, sim));
        row.empirical = emp.v_max;
        if (emp.v_max > 0.0) {
          row.rel_err = std::abs(row.solution->v_safe - emp.v_max) / emp.v_max;
        }
      }
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Latency coupling

/// Latency as a function of drift rate and sensing range:
///   tau(e, S) = tau0 + c_S * S + c_e / (e + e0).
/// Better localization and longer range both cost latency.
struct LatencyModel {
  double tau0 = 0.002;   ///< s
  double c_S = 0.001;    ///< s per metre of range
  double c_e = 0.00005;  ///< s
  double e0 = 0.002;

  double operator()(double e, double S) const { return tau0 + c_S * S + c_e / (e + e0); }

  bool operator==(const LatencyModel&) const = default;
};

inline void validate(const LatencyModel& lm) {
  if (!(lm.tau0 >= 0.0)) throw InputError("must be >= 0", "latency_model.tau0");
  if (!(lm.c_S >= 0.0)) throw InputError("must be >= 0", "latency_model.c_S");
  if (!(lm.c_e >= 0.0)) throw InputError("must be >= 0", "latency_model.c_e");
  if (!(lm.e0 > 0.0)) throw InputError("must be > 0", "latency_model.e0");
}

struct SurfaceCell {
  double e = 0.0;
  double S = 0.0;
  double tau = 0.0;
  double v_safe = 0.0;
  Binding binding = Binding::stage1;
  std::string error;

  bool operator==(const SurfaceCell&) const = default;
};

struct SurfaceResult {
  std::vector<double> e_grid;
  std::vector<double> S_grid;
  std::vector<SurfaceCell> cells;  ///< row-major: index = i_e * S_grid.size() + i_S
  std::size_t argmax_e = 0;
  std::size_t argmax_S = 0;

  bool operator==(const SurfaceResult&) const = default;

  const SurfaceCell& at(std::size_t i_e, std::size_t i_S) const {
    return cells[i_e * S_grid.size() + i_S];
  }
};

/// Solves every (e, S) cell with tau taken from the latency model. The
/// argmax is the first maximum in row-major order.
inline SurfaceResult coupling_surface(const FlightParams& base, const std::vector<double>& e_grid,
                                      const std::vector<double>& S_grid, const LatencyModel& lm,
                                      const SolverConfig& cfg) {
  validate(lm);
  validate(cfg);
  if (e_grid.empty() || S_grid.empty()) throw InputError("grids must be non-empty", "surface");
  SurfaceResult out;
  out.e_grid = e_grid;
  out.S_grid = S_grid;
  out.cells.resize(e_grid.size() * S_grid.size());
  parallel_for(out.cells.size(), cfg.threads, [&](std::size_t idx) {
    SurfaceCell& cell = out.cells[idx];
    cell.e = e_grid[idx / S_grid.size()];
    cell.S = S_grid[idx % S_grid.size()];
    cell.tau = lm(cell.e, cell.S);
    try {
      auto p = base;
      p.e = cell.e;
      p.S = cell.S;
      p.tau = cell.tau;
      p.latency_components.reset();
      validate(p);
      const auto sol = max_safe_speed(p, cfg);
      cell.v_safe = sol.v_safe;
      cell.binding = sol.binding;
    } catch (const std::exception& ex) {
      cell.error = ex.what();
      cell.binding = Binding::latency;
    }
  });
  double best = -1.0;
  for (std::size_t idx = 0; idx < out.cells.size(); ++idx) {
    if (out.cells[idx].error.empty() && out.cells[idx].v_safe > best) {
      best = out.cells[idx].v_safe;
      out.argmax_e = idx / S_grid.size();
      out.argmax_S = idx % S_grid.size();
    }
  }
  return out;
}

}  // namespace safespeed
