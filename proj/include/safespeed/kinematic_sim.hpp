#pragma once

// Time-stepped lateral double integrator flown by the same re-planning law
// the closed-form envelope assumes, judged against the true (drift-free)
// obstacle geometry. Used as an independent check on the closed forms and
// to measure the empirical maximum safe speed by bracket-and-bisect.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "safespeed/envelope_model.hpp"
#include "safespeed/errors.hpp"
#include "safespeed/flight_params.hpp"

namespace safespeed {

/// Integration step refused: dt is too coarse for the control window.
class StepSizeError : public InputError {
 public:
  explicit StepSizeError(const std::string& what) : InputError(what, "sim.dt") {}
};

/// Fewest integration steps allowed inside the controlled window T'.
inline constexpr double kMinStepsPerWindow = 16.0;

namespace detail {

/// Acceleration that lands exactly on the inflated edge at the end of the
/// window if held constant: 1/2 a u^2 + v u = r' - y.
inline double replan_accel(double r_inflated, double y, double v_y, double remaining) {
  return 2.0 * (r_inflated - y - v_y * remaining) / (remaining * remaining);
}

inline void check_step(double dt, double T_prime) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StepSizeError("dt must be > 0");
  if (T_prime < kMinStepsPerWindow * dt) {
    throw StepSizeError("dt too large: need at least 16 steps in the control window T' = " +
                        std::to_string(T_prime) + " s; use a smaller dt");
  }
}

inline void check_command_jump(double previous, double current, double a_max) {
  if (std::abs(current - previous) > a_max) {
    throw StepSizeError("dt too large: commanded acceleration jumped by " +
                        std::to_string(std::abs(current - previous)) +
                        " m/s^2 in one step; use a smaller dt");
  }
}

}  // namespace detail

/// Brute-force integration of the stage-1 re-planning law from control onset
/// to T': each step re-solves for the constant acceleration that would graze
/// the live inflated radius, clamps it to +-a_max, then integrates velocity
/// then position. Every `sample_every`-th step is recorded, plus the end.
inline std::vector<TrajectoryState> ode_reference_trajectory(const FlightParams& p, double v_x,
                                                             double dt,
                                                             std::size_t sample_every = 1) {
  const auto dp = detail::require_controllable(p, v_x);
  detail::check_step(dt, dp.T_prime);
  sample_every = std::max<std::size_t>(sample_every, 1);

  std::vector<TrajectoryState> out;
  out.reserve(static_cast<std::size_t>(dp.T_prime / dt) / sample_every + 2);
  double y = 0.0;
  double v = 0.0;
  double a = 0.0;
  bool saturated = false;
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * dt;
    if (s >= dp.T_prime) break;
    const double remaining = dp.T_prime - s;
    if (remaining > dt) {
      const double wanted = detail::replan_accel(inflated_radius(p, v_x, p.tau + s), y, v, remaining);
      const double clamped = std::clamp(wanted, -p.a_max, p.a_max);
      if (k > 0) detail::check_command_jump(a, clamped, p.a_max);
      a = clamped;
      saturated = std::abs(wanted) > p.a_max;
    }
    if (k % sample_every == 0) out.push_back({s, y, v, a, saturated});
    const double h = std::min(dt, remaining);
    v += a * h;
    y += v * h;
  }
  out.push_back({dp.T_prime, y, v, a, saturated});
  return out;
}

enum class CollisionModel { excursion_bound, explicit_obstacles };

inline const char* to_string(CollisionModel m) {
  return m == CollisionModel::excursion_bound ? "excursion-bound" : "explicit-obstacles";
}

inline std::optional<CollisionModel> collision_model_from_string(std::string_view s) {
  if (s == "excursion-bound") return CollisionModel::excursion_bound;
  if (s == "explicit-obstacles") return CollisionModel::explicit_obstacles;
  return std::nullopt;
}

struct SimConfig {
  double dt = 1e-4;
  double start_distance = 25.0;  ///< take-off to obstacle centre (m)
  CollisionModel collision_model = CollisionModel::excursion_bound;
  double bisection_tolerance = 0.02;
  double min_speed_probe = 1.0;
  double max_speed_probe = 64.0;
  double contact_tolerance = 1e-6;  ///< penetration depth that counts as contact (m)
  bool record_trace = true;

  bool operator==(const SimConfig&) const = default;
};

inline void validate(const SimConfig& sc, const FlightParams& p) {
  if (!(sc.dt > 0.0)) throw InputError("must be > 0", "sim.dt");
  if (!(sc.start_distance >= p.S)) throw InputError("must be >= S", "sim.start_distance");
  if (!(sc.bisection_tolerance > 0.0)) throw InputError("must be > 0", "sim.bisection_tolerance");
  if (!(sc.min_speed_probe > 0.0)) throw InputError("must be > 0", "sim.min_speed_probe");
  if (!(sc.max_speed_probe > sc.min_speed_probe)) {
    throw InputError("must exceed min_speed_probe", "sim.max_speed_probe");
  }
  if (!(sc.contact_tolerance >= 0.0)) throw InputError("must be >= 0", "sim.contact_tolerance");
}

/// Axis-aligned square obstacle of half-width r, inflated by d.
struct Obstacle {
  double cx = 0.0;
  double cy = 0.0;
  double half_width = 0.0;
  double inflation = 0.0;

  double extent() const { return half_width + inflation; }
};

struct WorldLayout {
  std::vector<Obstacle> obstacles;    ///< obstacles[0] sits on the flight line
  std::optional<double> boundary_y;   ///< virtual wall at y = L (excursion mode)
};

/// Single obstacle at the start distance plus the y = L wall, or the
/// three-obstacle reconstruction: a lateral neighbour at y = R on the same
/// plane and a third obstacle one spacing downstream.
inline WorldLayout make_layout(const FlightParams& p, const SimConfig& sc) {
  WorldLayout w;
  const Obstacle first{sc.start_distance, 0.0, p.r, p.d};
  w.obstacles.push_back(first);
  if (sc.collision_model == CollisionModel::excursion_bound) {
    w.boundary_y = return_distance(p);
  } else {
    w.obstacles.push_back({sc.start_distance, p.R, p.r, p.d});
    w.obstacles.push_back({sc.start_distance + p.R, 0.0, p.r, p.d});
  }
  return w;
}

inline void validate(const WorldLayout& w) {
  if (w.obstacles.empty()) throw InputError("needs at least one obstacle", "layout");
  if (w.obstacles.front().cy != 0.0) {
    throw InputError("first obstacle must sit on the flight line", "layout.obstacles[0]");
  }
  for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
    for (std::size_t k = i + 1; k < w.obstacles.size(); ++k) {
      const auto& a = w.obstacles[i];
      const auto& b = w.obstacles[k];
      const double reach = a.extent() + b.extent();
      if (std::abs(a.cx - b.cx) < reach && std::abs(a.cy - b.cy) < reach) {
        throw InputError("inflated obstacles overlap", "layout.obstacles");
      }
    }
  }
}

enum class SimPhase { cruise, latency, stage1, stage2, settled };

inline const char* to_string(SimPhase ph) {
  switch (ph) {
    case SimPhase::cruise: return "cruise";
    case SimPhase::latency: return "latency";
    case SimPhase::stage1: return "stage1";
    case SimPhase::stage2: return "stage2";
    case SimPhase::settled: return "settled";
  }
  return "?";
}

struct SimSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double v_y = 0.0;
  double a_y = 0.0;
  double r_inflated = 0.0;  ///< planner's view of the obstacle half-extent
  SimPhase phase = SimPhase::cruise;
};

enum class SimOutcome { cleared, collided_stage1, exceeded_L_stage2, infeasible_latency };

inline const char* to_string(SimOutcome o) {
  switch (o) {
    case SimOutcome::cleared: return "cleared";
    case SimOutcome::collided_stage1: return "collided-stage1";
    case SimOutcome::exceeded_L_stage2: return "exceeded-L-stage2";
    case SimOutcome::infeasible_latency: return "infeasible-latency";
  }
  return "?";
}

struct SimVerdict {
  SimOutcome outcome = SimOutcome::cleared;
  double y_max = 0.0;
  double v_y_terminal = 0.0;  ///< lateral speed on reaching the obstacle plane
  double y_terminal = 0.0;

  bool operator==(const SimVerdict&) const = default;
};

struct SimRun {
  std::vector<SimSample> trace;
  SimVerdict verdict;
};

/// Purely geometric predicate: where (x, y) violates the true world. The
/// first obstacle is the one being dodged; anything else is a stage-2 miss.
/// Drift never enters here, it only lives in the planner's map.
inline std::optional<SimOutcome> judge_position(const WorldLayout& w, double x, double y,
                                                double contact_tolerance) {
  for (std::size_t i = 0; i < w.obstacles.size(); ++i) {
    const auto& o = w.obstacles[i];
    if (std::abs(x - o.cx) < o.extent() && std::abs(y - o.cy) < o.extent() - contact_tolerance) {
      return i == 0 ? SimOutcome::collided_stage1 : SimOutcome::exceeded_L_stage2;
    }
  }
  if (w.boundary_y && y > *w.boundary_y) return SimOutcome::exceeded_L_stage2;
  return std::nullopt;
}

/// Re-judges a recorded trace; the first violation wins.
inline SimOutcome judge_trace(const WorldLayout& w, const std::vector<SimSample>& trace,
                              double contact_tolerance) {
  for (const auto& smp : trace) {
    if (auto hit = judge_position(w, smp.x, smp.y, contact_tolerance)) return *hit;
  }
  return SimOutcome::cleared;
}

/// One flight at constant forward speed v_x: cruise, detection at range S
/// (drift starts here), dead time tau, stage-1 re-planning until the
/// inflated obstacle face, then the stage-2 jerk ramp a_max -> -a_max at
/// j_max, holding -a_max until v_y reaches zero.
inline SimRun simulate_run(const FlightParams& p, const SimConfig& sc, const WorldLayout& layout,
                           double v_x) {
  validate(p);
  validate(sc, p);
  validate(layout);
  const auto dp = derive(p, v_x);
  SimRun run;
  if (!dp.latency_feasible()) {
    run.verdict.outcome = SimOutcome::infeasible_latency;
    return run;
  }
  detail::check_step(sc.dt, dp.T_prime);

  const Obstacle& target = layout.obstacles.front();
  const double t_detect = std::max(0.0, (target.cx - target.half_width - p.S) / v_x);
  const double t_onset = t_detect + p.tau;
  const double t_face = t_detect + dp.T;  // x reaches cx - r - d
  const double ramp_time = 2.0 * p.a_max / p.j_max;
  double x_exit = 0.0;
  for (const auto& o : layout.obstacles) x_exit = std::max(x_exit, o.cx + o.extent());

  const double t_limit = x_exit / v_x + dp.T + ramp_time + 10.0 * (1.0 + p.a_max);
  if (sc.record_trace) {
    run.trace.reserve(static_cast<std::size_t>(std::min(t_limit / sc.dt, 5e6)));
  }

  double y = 0.0;
  double v = 0.0;
  double a = 0.0;
  bool stage2_started = false;
  bool settled = false;
  bool stage1_commanded = false;
  auto& verdict = run.verdict;
  verdict.outcome = SimOutcome::cleared;

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    const double x = v_x * t;
    if (t > t_limit) throw NumericalError("simulation did not terminate");

    SimPhase phase;
    double r_seen = p.r + p.d;
    if (t < t_detect) {
      phase = SimPhase::cruise;
      a = 0.0;
    } else if (t < t_onset) {
      phase = SimPhase::latency;
      r_seen = inflated_radius(p, v_x, t - t_detect);
      a = 0.0;
    } else if (t < t_face) {
      phase = SimPhase::stage1;
      r_seen = inflated_radius(p, v_x, t - t_detect);
      const double remaining = t_face - t;
      // Hold the last command over the final sub-step.
      if (remaining > sc.dt || !stage1_commanded) {
        const double wanted = detail::replan_accel(r_seen, y, v, remaining);
        const double clamped = std::clamp(wanted, -p.a_max, p.a_max);
        if (stage1_commanded) detail::check_command_jump(a, clamped, p.a_max);
        a = clamped;
        stage1_commanded = true;
      }
    } else if (!settled) {
      phase = SimPhase::stage2;
      r_seen = inflated_radius(p, v_x, t - t_detect);
      if (!stage2_started) {
        stage2_started = true;
        verdict.v_y_terminal = v;
        verdict.y_terminal = y;
      }
      const double since = t - t_face;
      a = since < ramp_time ? p.a_max - p.j_max * since : -p.a_max;
      if (v <= 0.0) {
        settled = true;
        phase = SimPhase::settled;
        v = 0.0;
        a = 0.0;
      }
    } else {
      phase = SimPhase::settled;
      r_seen = inflated_radius(p, v_x, t - t_detect);
      a = 0.0;
    }

    verdict.y_max = std::max(verdict.y_max, y);
    if (sc.record_trace) run.trace.push_back({t, x, y, v, a, r_seen, phase});
    if (auto hit = judge_position(layout, x, y, sc.contact_tolerance)) {
      verdict.outcome = *hit;
      return run;
    }
    if (settled && x > x_exit) return run;

    v += a * sc.dt;
    if (phase == SimPhase::stage2 && v < 0.0) v = 0.0;
    y += v * sc.dt;
  }
}

struct SpeedProbe {
  double v_x = 0.0;
  SimOutcome outcome = SimOutcome::cleared;

  bool operator==(const SpeedProbe&) const = default;
};

struct EmpiricalSpeedResult {
  double v_max = 0.0;                 ///< last cleared speed (0 if none)
  std::optional<double> last_cleared;
  std::optional<double> first_failed;  ///< nullopt: cleared up to max_speed_probe
  std::size_t runs = 0;
  std::vector<SpeedProbe> probes;

  bool operator==(const EmpiricalSpeedResult&) const = default;
};

/// Throws NumericalError when a cleared probe sits above a failed one.
inline void check_monotone_verdicts(const std::vector<SpeedProbe>& probes) {
  std::optional<double> lowest_failure;
  for (const auto& pr : probes) {
    if (pr.outcome != SimOutcome::cleared) {
      lowest_failure = lowest_failure ? std::min(*lowest_failure, pr.v_x) : pr.v_x;
    }
  }
  if (!lowest_failure) return;
  for (const auto& pr : probes) {
    if (pr.outcome == SimOutcome::cleared && pr.v_x > *lowest_failure) {
      throw NumericalError("non-monotone verdicts: cleared at " + std::to_string(pr.v_x) +
                           " m/s but failed at " + std::to_string(*lowest_failure) + " m/s");
    }
  }
}

/// Largest clearing forward speed: doubling from min_speed_probe up to
/// max_speed_probe, then bisection down to bisection_tolerance.
inline EmpiricalSpeedResult empirical_max_speed(const FlightParams& p, const SimConfig& sc,
                                                const WorldLayout& layout) {
  validate(sc, p);
  SimConfig quiet = sc;
  quiet.record_trace = false;
  EmpiricalSpeedResult res;
  auto probe = [&](double v) {
    const auto outcome = simulate_run(p, quiet, layout, v).verdict.outcome;
    res.probes.push_back({v, outcome});
    ++res.runs;
    check_monotone_verdicts(res.probes);
    return outcome == SimOutcome::cleared;
  };

  double lo = sc.min_speed_probe;
  if (!probe(lo)) {
    res.first_failed = lo;
    return res;
  }
  std::optional<double> hi;
  while (!hi) {
    const double next = std::min(2.0 * lo, sc.max_speed_probe);
    if (probe(next)) {
      lo = next;
      if (next >= sc.max_speed_probe) break;
    } else {
      hi = next;
    }
  }
  if (hi) {
    while (*hi - lo > sc.bisection_tolerance) {
      const double mid = 0.5 * (lo + *hi);
      if (probe(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  res.v_max = lo;
  res.last_cleared = lo;
  res.first_failed = hi;
  return res;
}

}  // namespace safespeed
