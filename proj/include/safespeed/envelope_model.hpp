#pragma once

// Closed-form speed envelope for a UAV dodging an obstacle straight ahead.
//
// Stage 1: after detection at range S and a dead time tau, a re-planning
// controller steers laterally so that it just grazes the obstacle as seen in
// its drifting map, whose apparent half-extent grows as r + d + e*v_x*t.
// Stage 2: once past the obstacle, a jerk-limited reversal must bring the
// lateral speed back to zero within the return distance L = R - r - d.
//
// Time conventions: `t` is absolute time since detection, `s` is time since
// control onset (t = tau + s). Stage 1 lasts T = (S - d) / v_x, of which
// T' = T - tau is controlled.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "safespeed/errors.hpp"
#include "safespeed/flight_params.hpp"

namespace safespeed {

/// Which closed form to use where the published equations and an exact
/// re-derivation differ.
///  - paper: switch time t' = 2 e v_x / (a_max + 2 e v_x / T'), stage-2 ramp
///    displacement 2 a_max^3 / j_max^2.
///  - exact: t' solves a_y(T' - t') = a_max, ramp displacement
///    (2/3) a_max^3 / j_max^2 (integral of the linear jerk ramp).
enum class ModelMode { paper, exact };

inline const char* to_string(ModelMode m) { return m == ModelMode::paper ? "paper" : "exact"; }

inline std::optional<ModelMode> model_mode_from_string(std::string_view s) {
  if (s == "paper") return ModelMode::paper;
  if (s == "exact") return ModelMode::exact;
  return std::nullopt;
}

/// Absolute slack for every feasibility inequality (SI units).
inline constexpr double kFeasibilitySlack = 1e-9;

/// Lateral room before the neighbouring obstacle.
inline double return_distance(const FlightParams& p) {
  if (!(p.R > p.r + p.d)) throw InputError("violates R > r + d", "flight.R");
  return p.R - p.r - p.d;
}

/// Stage-1 speed bound: the fastest v_x at which full lateral acceleration
/// after the dead time still clears r + d before reaching the obstacle,
///   1/2 a_max ((S - d)/v - tau)^2 = r + d.
/// The published rearrangement prints `tau - sqrt(...)` in the denominator;
/// solving the relation above gives `tau + sqrt(...)`, which is used here.
inline double stage1_speed_limit(const FlightParams& p) {
  return (p.S - p.d) / (p.tau + std::sqrt(2.0 * (p.r + p.d) / p.a_max));
}

/// Obstacle half-extent in the drifting map, t seconds after detection.
inline double inflated_radius(const FlightParams& p, double v_x, double t) {
  if (!(t >= 0.0)) throw InputError("time must be >= 0", "t");
  return p.r + p.d + p.e * v_x * t;
}

struct DerivedParams {
  double L = 0.0;        ///< return distance
  double T = 0.0;        ///< stage-1 duration
  double T_prime = 0.0;  ///< controlled part of stage 1, T - tau
  double v_x = 0.0;

  bool latency_feasible() const { return T_prime > 0.0; }
};

inline DerivedParams derive(const FlightParams& p, double v_x) {
  if (!(v_x > 0.0) || !std::isfinite(v_x)) throw InputError("must be > 0", "v_x");
  DerivedParams out;
  out.L = return_distance(p);
  out.v_x = v_x;
  out.T = (p.S - p.d) / v_x;
  out.T_prime = out.T - p.tau;
  return out;
}

/// Lateral state at time s after control onset.
struct TrajectoryState {
  double s = 0.0;
  double y = 0.0;
  double v_y = 0.0;
  double a_y = 0.0;
  bool saturated = false;

  bool operator==(const TrajectoryState&) const = default;
};

struct SwitchTime {
  double t_prime = 0.0;  ///< length of the terminal a_max segment
  bool saturated_throughout = false;
};

namespace detail {

inline DerivedParams require_controllable(const FlightParams& p, double v_x) {
  auto dp = derive(p, v_x);
  if (!dp.latency_feasible()) {
    throw LatencyInfeasible("v_x leaves no control time after the latency (T <= tau)");
  }
  return dp;
}

/// Acceleration the re-planner commands at onset, 2 r'(tau) / T'^2.
inline double onset_accel(const FlightParams& p, const DerivedParams& dp) {
  return 2.0 * inflated_radius(p, dp.v_x, p.tau) / (dp.T_prime * dp.T_prime);
}

/// Unclamped closed-form solution of the re-planning law, s in [0, T').
inline TrajectoryState ideal_state(const FlightParams& p, const DerivedParams& dp, double s) {
  const double Tp = dp.T_prime;
  const double r_onset = inflated_radius(p, dp.v_x, p.tau);
  TrajectoryState st;
  st.s = s;
  if (p.e == 0.0) {
    const double a = 2.0 * r_onset / (Tp * Tp);
    st.a_y = a;
    st.v_y = a * s;
    st.y = 0.5 * a * s * s;
    return st;
  }
  const double k = 2.0 * p.e * dp.v_x;
  const double u = Tp - s;
  const double log_ratio = -std::log1p(-s / Tp);  // ln(T' / (T' - s))
  const double r_end = inflated_radius(p, dp.v_x, dp.T);
  st.y = r_end - k * u * log_ratio - 0.5 * k * u * u / Tp -
         r_onset * (Tp - s) * (Tp + s) / (Tp * Tp);
  st.v_y = k * log_ratio - k * s / Tp + 2.0 * r_onset * s / (Tp * Tp);
  st.a_y = k / u - k / Tp + 2.0 * r_onset / (Tp * Tp);
  return st;
}

}  // namespace detail

/// Length t' of the terminal stage-1 segment flown at a_max.
inline SwitchTime accel_switch_time(const FlightParams& p, double v_x,
                                    ModelMode mode = ModelMode::paper) {
  const auto dp = detail::require_controllable(p, v_x);
  const double Tp = dp.T_prime;
  const double k = 2.0 * p.e * v_x;
  if (mode == ModelMode::paper) {
    return {p.e == 0.0 ? 0.0 : k / (p.a_max + k / Tp), false};
  }
  // a_y(s) is increasing, so a_y(0) >= a_max means saturation from onset.
  const double a0 = detail::onset_accel(p, dp);
  if (a0 >= p.a_max) return {std::nextafter(Tp, 0.0), true};
  if (p.e == 0.0) return {0.0, false};
  const double sigma = k / (p.a_max + k / Tp - a0);
  return {std::clamp(sigma, 0.0, std::nextafter(Tp, 0.0)), false};
}

/// Stage-1 lateral state: closed form up to T' - t', then a constant-a_max
/// continuation. Throws LatencyInfeasible when T' <= 0.
inline TrajectoryState trajectory_state(const FlightParams& p, double v_x, double s,
                                        ModelMode mode = ModelMode::paper) {
  const auto dp = detail::require_controllable(p, v_x);
  if (!(s >= 0.0 && s <= dp.T_prime)) throw InputError("outside [0, T']", "s");
  const auto sw = accel_switch_time(p, v_x, mode);

  if (sw.saturated_throughout) {
    return {s, 0.5 * p.a_max * s * s, p.a_max * s, p.a_max, true};
  }
  const double s_switch = dp.T_prime - sw.t_prime;
  if (s <= s_switch) return detail::ideal_state(p, dp, s);

  const auto from = detail::ideal_state(p, dp, s_switch);
  const double h = s - s_switch;
  return {s, from.y + from.v_y * h + 0.5 * p.a_max * h * h, from.v_y + p.a_max * h, p.a_max,
          true};
}

/// Displacement accumulated while the stage-2 jerk ramp swings a_y from
/// +a_max to -a_max (beyond the v_y(T) * 2 a_max / j_max term).
inline double ramp_displacement(const FlightParams& p, ModelMode mode = ModelMode::paper) {
  const double coeff = mode == ModelMode::paper ? 2.0 : 2.0 / 3.0;
  return coeff * p.a_max * p.a_max * p.a_max / (p.j_max * p.j_max);
}

/// Largest stage-1 terminal lateral speed from which the jerk-limited
/// reversal still stops within L:
///   y_T + 2 a v / j + ramp + v^2 / (2 a) = L.
/// nullopt when not even v = 0 fits.
inline std::optional<double> stage2_max_terminal_vy(const FlightParams& p, double y_T,
                                                    ModelMode mode = ModelMode::paper) {
  if (!(y_T >= 0.0)) throw InputError("must be >= 0", "y_T");
  const double a = p.a_max;
  const double j = p.j_max;
  const double c = y_T + ramp_displacement(p, mode) - return_distance(p);
  if (c > kFeasibilitySlack) return std::nullopt;
  const double b = 2.0 * a / j;
  const double disc = b * b - 2.0 * c / a;
  if (disc < 0.0) return std::nullopt;
  return std::max(0.0, a * (-b + std::sqrt(disc)));
}

struct TerminalState {
  double y_T = 0.0;
  double v_y_T = 0.0;
  double t_prime = 0.0;
  bool saturated_throughout = false;
  std::optional<double> v_y_max_T;  ///< nullopt: no admissible terminal speed

  bool operator==(const TerminalState&) const = default;
};

/// State at the end of stage 1 plus the stage-2 admissible terminal speed.
inline TerminalState terminal_state(const FlightParams& p, double v_x,
                                    ModelMode mode = ModelMode::paper) {
  const auto dp = detail::require_controllable(p, v_x);
  const auto sw = accel_switch_time(p, v_x, mode);
  TerminalState out;
  out.t_prime = sw.t_prime;
  out.saturated_throughout = sw.saturated_throughout;
  if (sw.saturated_throughout) {
    out.y_T = 0.5 * p.a_max * dp.T_prime * dp.T_prime;
    out.v_y_T = p.a_max * dp.T_prime;
  } else if (sw.t_prime == 0.0) {
    const auto end = detail::ideal_state(p, dp, dp.T_prime);
    out.y_T = end.y;
    out.v_y_T = end.v_y;
  } else {
    const auto from = detail::ideal_state(p, dp, dp.T_prime - sw.t_prime);
    out.y_T = from.y + from.v_y * sw.t_prime + 0.5 * p.a_max * sw.t_prime * sw.t_prime;
    out.v_y_T = from.v_y + p.a_max * sw.t_prime;
  }
  out.v_y_max_T = stage2_max_terminal_vy(p, std::max(0.0, out.y_T), mode);
  return out;
}

enum class Stage2Status { ok, exceeds_vy_max, no_admissible_vy, latency };

inline const char* to_string(Stage2Status s) {
  switch (s) {
    case Stage2Status::ok: return "ok";
    case Stage2Status::exceeds_vy_max: return "exceeds_vy_max";
    case Stage2Status::no_admissible_vy: return "no_admissible_vy";
    case Stage2Status::latency: return "latency";
  }
  return "?";
}

struct Stage2Check {
  bool feasible = false;
  Stage2Status status = Stage2Status::latency;

  explicit operator bool() const { return feasible; }
};

/// Whether the stage-1 terminal lateral speed at v_x is stage-2 admissible.
inline Stage2Check stage2_feasible(const FlightParams& p, double v_x,
                                   ModelMode mode = ModelMode::paper) {
  if (!derive(p, v_x).latency_feasible()) return {false, Stage2Status::latency};
  const auto ts = terminal_state(p, v_x, mode);
  if (!ts.v_y_max_T) return {false, Stage2Status::no_admissible_vy};
  if (ts.v_y_T <= *ts.v_y_max_T + kFeasibilitySlack) return {true, Stage2Status::ok};
  return {false, Stage2Status::exceeds_vy_max};
}

}  // namespace safespeed
