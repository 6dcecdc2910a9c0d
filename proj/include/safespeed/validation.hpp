#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "safespeed/envelope_solver.hpp"
#include "safespeed/kinematic_sim.hpp"
#include "safespeed/parallel.hpp"

namespace safespeed {

/// Only points whose empirical speed is at most this count toward the
/// headline error bound.
inline constexpr double kValidationSpeedCeiling = 18.0;

struct ValidationRow {
  double value = 0.0;
  std::string params_hash;
  double v_safe = 0.0;  ///< model prediction in the configured mode
  Binding binding = Binding::stage1;
  std::optional<double> v1;
  std::optional<double> v2;
  std::optional<double> empirical;
  std::optional<double> rel_err;
  std::optional<double> bracket_low;
  std::optional<double> bracket_high;
  std::size_t runs = 0;
  /// The same point under the published closed forms, reported alongside so
  /// the gap between the two stage-2 ramp terms stays visible.
  double v_safe_paper = 0.0;
  std::optional<double> rel_err_paper;
  std::string error;

  bool operator==(const ValidationRow&) const = default;
};

struct ValidationPanel {
  ParamField param = ParamField::tau;
  std::vector<ValidationRow> rows;

  bool operator==(const ValidationPanel&) const = default;
};

struct ValidationReport {
  ModelMode mode = ModelMode::exact;
  double speed_ceiling = kValidationSpeedCeiling;
  std::vector<ValidationPanel> panels;
  /// Max relative error over rows with empirical speed <= speed_ceiling.
  double max_rel_error = 0.0;
  double max_rel_error_paper = 0.0;
  std::size_t counted_points = 0;
  std::size_t failed_points = 0;

  bool operator==(const ValidationReport&) const = default;
};

/// The three one-at-a-time panels around a base scenario: latency, drift
/// rate and sensing range.
inline std::vector<SweepSpec> default_validation_sweeps(const FlightParams& base) {
  return {
      {base, ParamField::tau, {0.0, 0.005, 0.01, 0.02, 0.03}, true},
      {base, ParamField::e, {0.0, 0.005, 0.01, 0.02, 0.03}, true},
      {base, ParamField::S, {4.0, 6.0, 8.0, 10.0, 12.0}, true},
  };
}

/// Model prediction against the simulator's empirical maximum speed at every
/// grid point; per-point failures are recorded and the report still built.
inline ValidationReport validate_model(const std::vector<SweepSpec>& sweeps, const SimConfig& sc,
                                       const SolverConfig& cfg) {
  validate(cfg);
  ValidationReport rep;
  rep.mode = cfg.mode;
  SolverConfig paper_cfg = cfg;
  paper_cfg.mode = ModelMode::paper;

  struct Job {
    std::size_t panel;
    std::size_t row;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < sweeps.size(); ++k) {
    validate(sweeps[k]);
    rep.panels.push_back({sweeps[k].param, std::vector<ValidationRow>(sweeps[k].values.size())});
    for (std::size_t i = 0; i < sweeps[k].values.size(); ++i) jobs.push_back({k, i});
  }

  parallel_for(jobs.size(), cfg.threads, [&](std::size_t j) {
    const auto& spec = sweeps[jobs[j].panel];
    ValidationRow& row = rep.panels[jobs[j].panel].rows[jobs[j].row];
    row.value = spec.values[jobs[j].row];
    try {
      const auto p = with_field(spec.base, spec.param, row.value);
      row.params_hash = params_hash(p);
      validate(p);
      const auto sol = max_safe_speed(p, cfg);
      row.v_safe = sol.v_safe;
      row.binding = sol.binding;
      row.v1 = sol.v1;
      row.v2 = sol.v2;
      row.v_safe_paper = max_safe_speed(p, paper_cfg).v_safe;
      const auto emp = empirical_max_speed(p, sc, make_layout(p, sc));
      row.empirical = emp.v_max;
      row.bracket_low = emp.last_cleared;
      row.bracket_high = emp.first_failed;
      row.runs = emp.runs;
      if (emp.v_max > 0.0) {
        row.rel_err = std::abs(row.v_safe - emp.v_max) / emp.v_max;
        row.rel_err_paper = std::abs(row.v_safe_paper - emp.v_max) / emp.v_max;
      }
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
  });

  for (const auto& panel : rep.panels) {
    for (const auto& row : panel.rows) {
      if (!row.error.empty() || !row.rel_err) {
        ++rep.failed_points;
        continue;
      }
      if (*row.empirical > rep.speed_ceiling) continue;
      ++rep.counted_points;
      rep.max_rel_error = std::max(rep.max_rel_error, *row.rel_err);
      rep.max_rel_error_paper = std::max(rep.max_rel_error_paper, row.rel_err_paper.value_or(0.0));
    }
  }
  return rep;
}

}  // namespace safespeed
