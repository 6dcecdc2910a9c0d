#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "safespeed/envelope_solver.hpp"

using namespace safespeed;

namespace {

const FlightParams kDefaults = default_scenario();

/// Published stage-2 limit for the default vehicle and spacing.
double published_vy_limit(double y_T) {
  const double a = 20.0, j = 120.0, L = 2.53;
  const double c = y_T + 2 * a * a * a / (j * j) - L;
  const double b = 2 * a / j;
  return a * (-b + std::sqrt(b * b - 2 * c / a));
}

double clamped_terminal_vy(const FlightParams& p, double v, double* y = nullptr) {
  const double Tp = (p.S - p.d) / v - p.tau;
  const auto end = oracle::rk4(p, v, Tp * (1 - 1e-9), 1e-6, true, 1u << 30).back();
  if (y) *y = end.y;
  return end.v;
}

SolverConfig fine(ModelMode mode = ModelMode::paper) {
  SolverConfig c;
  c.mode = mode;
  c.v_tolerance = 1e-10;
  return c;
}

}  // namespace

TEST(Crossings, DefaultFirstCrossing) {
  const auto cr = find_crossings(kDefaults, SolverConfig{});
  ASSERT_TRUE(cr.v1);
  EXPECT_GE(*cr.v1, 9.0);
  EXPECT_LE(*cr.v1, 9.1);
  EXPECT_NEAR(*cr.v1, 9.0798, 2e-4);
  EXPECT_FALSE(cr.v2);

  // Integrated planner terminal state against the published stage-2 limit.
  const double ref = oracle::bisect(
      [](double v) {
        double y = 0.0;
        const double vy = clamped_terminal_vy(kDefaults, v, &y);
        return vy - published_vy_limit(y);
      },
      5.0, 12.0, 1e-6);
  EXPECT_NEAR(*cr.v1, ref, 0.02);
}

TEST(Crossings, ZeroDriftScalarEquation) {
  auto p = kDefaults;
  p.e = 0.0;
  const double ref = oracle::bisect(
      [](double v) { return 0.94 * v / (5.63 - 0.01 * v) - published_vy_limit(0.47); }, 1.0, 24.0);
  const auto cr = find_crossings(p, fine());
  ASSERT_TRUE(cr.v1);
  EXPECT_NEAR(*cr.v1, ref, 1e-8);
  EXPECT_NEAR(*cr.v1, 14.1, 0.05);
}

TEST(Crossings, OpenWorldHasNone) {
  auto p = kDefaults;
  p.R = 1e6;
  for (auto mode : {ModelMode::paper, ModelMode::exact}) {
    const auto cr = find_crossings(p, fine(mode));
    EXPECT_FALSE(cr.v1);
    EXPECT_FALSE(cr.v2);
    EXPECT_FALSE(cr.infeasible_from_zero);
  }
}

TEST(Crossings, OrderingAndSignChange) {
  std::mt19937_64 rng(53);
  int both = 0;
  for (int set = 0; set < 300; ++set) {
    const auto p = oracle::random_params(rng);
    for (auto mode : {ModelMode::paper, ModelMode::exact}) {
      const auto cfg = fine(mode);
      const auto cr = find_crossings(p, cfg);
      const double top = stage1_speed_limit(p);
      auto g = [&](double v) { return stage2_margin(p, v, mode); };
      if (cr.v1 && !cr.infeasible_from_zero) {
        EXPECT_LE(g(*cr.v1 - 1e-6 * top), 0.0);
        EXPECT_GT(g(std::min(*cr.v1 + 1e-6 * top, top)), 0.0);
      }
      if (cr.v1 && cr.v2) {
        ++both;
        EXPECT_LE(*cr.v1, *cr.v2);
        EXPECT_GT(g(*cr.v2 - 1e-6 * top), 0.0);
      }
    }
  }
  SCOPED_TRACE(both);
}

TEST(MaxSafeSpeed, DefaultBindsStageTwo) {
  const auto sol = max_safe_speed(kDefaults, SolverConfig{});
  EXPECT_GE(sol.v_safe, 9.0);
  EXPECT_LE(sol.v_safe, 9.1);
  EXPECT_EQ(sol.binding, Binding::stage2);
  EXPECT_NEAR(sol.v_x_max, 24.8242, 1e-4);
  ASSERT_TRUE(sol.terminal);
  EXPECT_NEAR(sol.terminal->v_y_T, *sol.terminal->v_y_max_T, 1e-3);
}

TEST(MaxSafeSpeed, ExactFormDefault) {
  const auto sol = max_safe_speed(kDefaults, SolverConfig{512, 1e-4, ModelMode::exact, 1});
  EXPECT_NEAR(sol.v_safe, 17.386, 1e-3);
  EXPECT_EQ(sol.binding, Binding::stage2);
}

TEST(MaxSafeSpeed, OpenWorldEqualsStageOneBound) {
  auto p = kDefaults;
  p.R = 1e6;
  const auto sol = max_safe_speed(p, SolverConfig{});
  EXPECT_EQ(sol.binding, Binding::stage1);
  EXPECT_NEAR(sol.v_safe, oracle::stage1_root(p), 1e-6 * sol.v_safe);
}

TEST(MaxSafeSpeed, LongLatency) {
  auto p = kDefaults;
  p.tau = 10.0;
  const auto sol = max_safe_speed(p, SolverConfig{});
  EXPECT_NEAR(sol.v_x_max, 5.63 / (10.0 + std::sqrt(0.047)), 1e-12);
  EXPECT_NEAR(sol.v_safe, 0.55, 0.02);
  // At the stage-1 bound the whole window is flown at a_max, so the terminal
  // lateral speed a_max * T' exceeds the stage-2 limit for this spacing.
  EXPECT_EQ(sol.binding, Binding::stage2);
  EXPECT_GT(kDefaults.a_max * std::sqrt(2 * 0.47 / kDefaults.a_max), published_vy_limit(0.47));
}

TEST(MaxSafeSpeed, ZeroWhenNothingFits) {
  auto p = kDefaults;
  p.a_max = 30.0;
  const auto sol = max_safe_speed(p, SolverConfig{});
  EXPECT_EQ(sol.v_safe, 0.0);
  EXPECT_EQ(sol.binding, Binding::stage2);
  EXPECT_FALSE(sol.terminal);
}

TEST(MaxSafeSpeed, BisectionSoundness) {
  std::mt19937_64 rng(59);
  for (int set = 0; set < 100; ++set) {
    const auto p = oracle::random_params(rng);
    for (auto mode : {ModelMode::paper, ModelMode::exact}) {
      SolverConfig cfg;
      cfg.mode = mode;
      const auto sol = max_safe_speed(p, cfg);
      if (sol.v_safe > 2 * cfg.v_tolerance) {
        EXPECT_TRUE(stage2_feasible(p, sol.v_safe - 2 * cfg.v_tolerance, mode));
      }
      if (sol.binding == Binding::stage2) {
        EXPECT_FALSE(stage2_feasible(p, sol.v_safe + 2 * cfg.v_tolerance, mode));
      }
      EXPECT_LE(sol.v_safe, sol.v_x_max);
    }
  }
}

TEST(MaxSafeSpeed, Deterministic) {
  const auto a = max_safe_speed(kDefaults, SolverConfig{});
  const auto b = max_safe_speed(kDefaults, SolverConfig{});
  EXPECT_EQ(a, b);
}

TEST(MaxSafeSpeed, ScalingCovariance) {
  auto scale = [](FlightParams p, double k) {
    p.r *= k;
    p.d *= k;
    p.R *= k;
    p.S *= k;
    p.a_max *= k;
    p.j_max *= k;
    return p;
  };
  for (auto mode : {ModelMode::paper, ModelMode::exact}) {
    for (double R : {3.0, 1e6}) {
      auto p = kDefaults;
      p.R = R;
      const double base = max_safe_speed(p, fine(mode)).v_safe;
      for (double k : {0.5, 2.0, 5.0}) {
        EXPECT_NEAR(max_safe_speed(scale(p, k), fine(mode)).v_safe, k * base, 1e-6 * k * base);
      }
    }
  }
}

TEST(SaturationRatio, ZeroDrift) {
  auto p = kDefaults;
  p.e = 0.0;
  for (double v : {1.0, 10.0, 24.0}) EXPECT_EQ(saturation_ratio(p, v), 0.0);
}

TEST(SaturationRatio, DefaultAtTen) {
  EXPECT_NEAR(saturation_ratio(kDefaults, 10.0), 0.0098224 / 0.563, 1e-6);
  EXPECT_NEAR(saturation_ratio(kDefaults, 10.0), 0.0174, 1e-4);
  EXPECT_THROW(saturation_ratio(kDefaults, 30.0), InputError);
}

TEST(SaturationRatio, PeakAtTopSpeedForDefaults) {
  const auto sol = max_safe_speed(kDefaults, SolverConfig{});
  EXPECT_NEAR(sol.saturation_ratio_peak, sol.v_x_max, 1e-12);
}

TEST(SolverConfig, Rejected) {
  SolverConfig c;
  c.grid_points = 1;
  EXPECT_THROW(validate(c), InputError);
  c = {};
  c.v_tolerance = 0.0;
  EXPECT_THROW(validate(c), InputError);
}

// ---------------------------------------------------------------------------
// Sweeps

TEST(Sweep, RangeAffineAtZeroDrift) {
  auto base = kDefaults;
  base.e = 0.0;
  base.R = 1e6;
  const auto r = sweep({base, ParamField::S, {4, 5, 6, 7, 8, 9, 10, 11, 12}}, SolverConfig{});
  const double slope = 1.0 / (base.tau + std::sqrt(2 * 0.47 / 20.0));
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.solution);
    EXPECT_NEAR(row.solution->v_safe, (row.value - base.d) * slope, 1e-9);
  }
  // With stage 2 binding the crossing still scales with S - d.
  base.R = 3.0;
  const auto bound = sweep({base, ParamField::S, {4, 5, 6, 7, 8, 9, 10, 11, 12}}, fine());
  for (std::size_t i = 2; i < bound.rows.size(); ++i) {
    EXPECT_EQ(bound.rows[i].binding(), Binding::stage2);
    const double second = bound.rows[i].solution->v_safe - 2 * bound.rows[i - 1].solution->v_safe +
                          bound.rows[i - 2].solution->v_safe;
    EXPECT_NEAR(second, 0.0, 1e-8);
  }
}

TEST(Sweep, LatencyStrictlyDecreasing) {
  for (auto mode : {ModelMode::paper, ModelMode::exact}) {
    SolverConfig cfg;
    cfg.mode = mode;
    const auto r = sweep({kDefaults, ParamField::tau, {0.0, 0.005, 0.01, 0.02, 0.03}}, cfg);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
      EXPECT_LT(r.rows[i].solution->v_safe, r.rows[i - 1].solution->v_safe);
    }
  }
}

TEST(Sweep, WideSpacingExactFormStartsFlat) {
  const auto base = with_field(kDefaults, ParamField::R, 3.5);
  SolverConfig cfg;
  cfg.mode = ModelMode::exact;
  const auto r = sweep({base, ParamField::e, {0.0, 0.005, 0.01, 0.02, 0.03}}, cfg);
  EXPECT_EQ(r.rows[0].binding(), Binding::stage1);
  EXPECT_EQ(r.rows[1].binding(), Binding::stage1);
  EXPECT_EQ(r.rows[0].solution->v_safe, r.rows[1].solution->v_safe);
  EXPECT_EQ(r.rows[4].binding(), Binding::stage2);
}

TEST(Sweep, FailedRowRecordedAndOthersKept) {
  const auto r = sweep({kDefaults, ParamField::R, {0.2, 3.0}}, SolverConfig{});
  EXPECT_FALSE(r.rows[0].solution);
  EXPECT_NE(r.rows[0].error.find("flight.R"), std::string::npos);
  EXPECT_TRUE(r.rows[1].solution);
}

TEST(Sweep, RejectsUnsortedGrid) {
  EXPECT_THROW(sweep({kDefaults, ParamField::e, {0.01, 0.0}}, SolverConfig{}), InputError);
}

TEST(Sweep, ParallelEqualsSequential) {
  SweepSpec spec{kDefaults, ParamField::e, {}};
  for (int i = 0; i < 40; ++i) spec.values.push_back(0.001 * i);
  SolverConfig seq;
  SolverConfig par;
  par.threads = 8;
  EXPECT_EQ(sweep(spec, seq), sweep(spec, par));
}

TEST(Monotonicity, SevenAxes) {
  struct Axis {
    ParamField f;
    int sign;  ///< +1 non-decreasing, -1 non-increasing
  };
  const Axis axes[] = {{ParamField::tau, -1}, {ParamField::e, -1}, {ParamField::r, -1},
                       {ParamField::d, -1},   {ParamField::S, +1}, {ParamField::R, +1},
                       {ParamField::j_max, +1}};
  for (auto mode : {ModelMode::paper, ModelMode::exact}) {
    SolverConfig cfg;
    cfg.mode = mode;
    for (const auto& ax : axes) {
      const double v0 = field_value(kDefaults, ax.f);
      SweepSpec spec{kDefaults, ax.f, {}};
      for (double m : {0.5, 0.625, 0.75, 0.875, 1.0, 1.25, 1.5, 2.0}) spec.values.push_back(m * v0);
      const auto r = sweep(spec, cfg);
      for (std::size_t i = 1; i < r.rows.size(); ++i) {
        ASSERT_TRUE(r.rows[i].solution) << r.rows[i].error;
        const double step = r.rows[i].solution->v_safe - r.rows[i - 1].solution->v_safe;
        EXPECT_GE(ax.sign * step, -2 * cfg.v_tolerance) << to_string(ax.f) << " " << to_string(mode);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Latency coupling

TEST(Surface, FlatLatencyPeaksAtCorner) {
  LatencyModel lm{0.01, 0.0, 0.0, 0.002};
  const auto s = coupling_surface(kDefaults, {0.0, 0.01, 0.02, 0.03}, {4, 6, 8, 10, 12}, lm,
                                  SolverConfig{});
  EXPECT_EQ(s.argmax_e, 0u);
  EXPECT_EQ(s.argmax_S, 4u);
}

TEST(Surface, StrongDriftCostPeaksInside) {
  LatencyModel lm;
  lm.c_e = 0.002;
  const std::vector<double> eg{0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03};
  for (auto mode : {ModelMode::paper, ModelMode::exact}) {
    SolverConfig cfg;
    cfg.mode = mode;
    const auto s = coupling_surface(kDefaults, eg, {4, 6, 8, 10, 12}, lm, cfg);
    EXPECT_GT(s.argmax_e, 0u);
    EXPECT_LT(s.argmax_e, eg.size() - 1);
  }
}

TEST(Surface, SingleCellEqualsSolve) {
  LatencyModel lm;
  const auto s = coupling_surface(kDefaults, {0.01}, {6.0}, lm, SolverConfig{});
  ASSERT_EQ(s.cells.size(), 1u);
  auto p = kDefaults;
  p.tau = lm(0.01, 6.0);
  EXPECT_EQ(s.cells[0].v_safe, max_safe_speed(p, SolverConfig{}).v_safe);
  EXPECT_NEAR(s.cells[0].tau, 0.002 + 0.006 + 0.00005 / 0.012, 1e-15);
}

TEST(Surface, ParallelEqualsSequential) {
  const std::vector<double> eg{0, 0.01, 0.02, 0.03};
  const std::vector<double> Sg{4, 8, 12};
  SolverConfig par;
  par.threads = 0;
  EXPECT_EQ(coupling_surface(kDefaults, eg, Sg, LatencyModel{}, SolverConfig{}),
            coupling_surface(kDefaults, eg, Sg, LatencyModel{}, par));
}

TEST(Surface, RejectsBadModel) {
  LatencyModel lm;
  lm.e0 = 0.0;
  EXPECT_THROW(coupling_surface(kDefaults, {0.0}, {6.0}, lm, SolverConfig{}), InputError);
}

TEST(CrossingCurve, SamplesAndMarkers) {
  const auto c = crossing_curve(kDefaults, SolverConfig{}, 100);
  ASSERT_EQ(c.v_x.size(), 100u);
  EXPECT_NEAR(c.v_x.back(), c.v_x_max, 1e-12);
  ASSERT_TRUE(c.v1);
  for (std::size_t i = 0; i < c.v_x.size(); ++i) {
    ASSERT_TRUE(c.v_y_max_T[i]);
    EXPECT_EQ(c.v_y_T[i] <= *c.v_y_max_T[i], c.v_x[i] <= *c.v1) << c.v_x[i];
  }
  EXPECT_THROW(crossing_curve(kDefaults, SolverConfig{}, 1), InputError);
}
