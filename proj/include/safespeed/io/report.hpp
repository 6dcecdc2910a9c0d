#pragma once

// Machine-readable reports (JSON, lossless round-trip) and CSV tables.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include "json.hpp"
#include "safespeed/envelope_solver.hpp"
#include "safespeed/errors.hpp"
#include "safespeed/io/scenario.hpp"
#include "safespeed/kinematic_sim.hpp"
#include "safespeed/validation.hpp"

namespace safespeed::io {

inline constexpr const char* kToolName = "safespeed";
inline constexpr const char* kToolVersion = "0.1.0";

/// One sweep per value of a second parameter (a family of curves).
struct SweepFamily {
  ParamField series_param = ParamField::R;
  std::vector<double> series_values;
  std::vector<SweepResult> members;  ///< members[i] ran at series_values[i]

  bool operator==(const SweepFamily&) const = default;
};

using Payload = std::variant<SpeedSolution, SweepResult, ValidationReport, SurfaceResult,
                             CrossingCurve, SimVerdict, EmpiricalSpeedResult, SweepFamily>;

struct Report {
  std::string tool = kToolName;
  std::string version = kToolVersion;
  std::string scenario_hash;
  std::optional<double> wall_time_s;  ///< only when timing was requested
  json scenario;                      ///< fully resolved scenario
  Payload payload;

  bool operator==(const Report&) const = default;
};

inline const char* payload_kind(const Payload& p) {
  static constexpr const char* kinds[] = {"solve",     "sweep",    "validate", "surface",
                                          "crossings", "simulate", "empirical", "sweep-family"};
  return kinds[p.index()];
}

inline Report make_report(const Scenario& s, Payload payload) {
  Report r;
  r.scenario_hash = scenario_hash(s);
  r.scenario = to_json(s);
  r.payload = std::move(payload);
  return r;
}

// ---------------------------------------------------------------------------
// JSON conversion

namespace detail {

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> opt_from(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

template <class Enum, class Parse>
Enum enum_from(const json& j, const char* key, Parse parse) {
  const auto text = j.at(key).get<std::string>();
  auto v = parse(text);
  if (!v) throw InputError("unrecognised value '" + text + "'", key);
  return *v;
}

inline std::optional<SimOutcome> outcome_from_string(std::string_view s) {
  for (auto o : {SimOutcome::cleared, SimOutcome::collided_stage1, SimOutcome::exceeded_L_stage2,
                 SimOutcome::infeasible_latency}) {
    if (s == to_string(o)) return o;
  }
  return std::nullopt;
}

}  // namespace detail

inline json to_json(const TerminalState& t) {
  return {{"y_T", t.y_T},
          {"v_y_T", t.v_y_T},
          {"t_prime", t.t_prime},
          {"saturated_throughout", t.saturated_throughout},
          {"v_y_max_T", detail::opt(t.v_y_max_T)}};
}

inline TerminalState terminal_from_json(const json& j) {
  return {j.at("y_T").get<double>(), j.at("v_y_T").get<double>(), j.at("t_prime").get<double>(),
          j.at("saturated_throughout").get<bool>(), detail::opt_from(j, "v_y_max_T")};
}

inline json to_json(const SpeedSolution& s) {
  return {{"v_safe", s.v_safe},
          {"v_x_max", s.v_x_max},
          {"v1", detail::opt(s.v1)},
          {"v2", detail::opt(s.v2)},
          {"binding", to_string(s.binding)},
          {"terminal", s.terminal ? to_json(*s.terminal) : json(nullptr)},
          {"saturation_ratio_peak", s.saturation_ratio_peak}};
}

inline SpeedSolution solution_from_json(const json& j) {
  SpeedSolution s;
  s.v_safe = j.at("v_safe").get<double>();
  s.v_x_max = j.at("v_x_max").get<double>();
  s.v1 = detail::opt_from(j, "v1");
  s.v2 = detail::opt_from(j, "v2");
  s.binding = detail::enum_from<Binding>(j, "binding", binding_from_string);
  if (!j.at("terminal").is_null()) s.terminal = terminal_from_json(j.at("terminal"));
  s.saturation_ratio_peak = j.at("saturation_ratio_peak").get<double>();
  return s;
}

inline json to_json(const SweepResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"value", row.value},
                    {"params_hash", row.params_hash},
                    {"solution", row.solution ? to_json(*row.solution) : json(nullptr)},
                    {"empirical", detail::opt(row.empirical)},
                    {"rel_err", detail::opt(row.rel_err)},
                    {"error", row.error}});
  }
  return {{"param", to_string(r.param)}, {"rows", rows}};
}

inline SweepResult sweep_from_json(const json& j) {
  SweepResult r;
  r.param = detail::enum_from<ParamField>(j, "param", param_field_from_string);
  for (const auto& row : j.at("rows")) {
    SweepRow out;
    out.value = row.at("value").get<double>();
    out.params_hash = row.at("params_hash").get<std::string>();
    if (!row.at("solution").is_null()) out.solution = solution_from_json(row.at("solution"));
    out.empirical = detail::opt_from(row, "empirical");
    out.rel_err = detail::opt_from(row, "rel_err");
    out.error = row.at("error").get<std::string>();
    r.rows.push_back(std::move(out));
  }
  return r;
}

inline json to_json(const ValidationReport& rep) {
  json panels = json::array();
  for (const auto& panel : rep.panels) {
    json rows = json::array();
    for (const auto& row : panel.rows) {
      rows.push_back({{"value", row.value},
                      {"params_hash", row.params_hash},
                      {"v_safe", row.v_safe},
                      {"binding", to_string(row.binding)},
                      {"v1", detail::opt(row.v1)},
                      {"v2", detail::opt(row.v2)},
                      {"empirical", detail::opt(row.empirical)},
                      {"rel_err", detail::opt(row.rel_err)},
                      {"bracket_low", detail::opt(row.bracket_low)},
                      {"bracket_high", detail::opt(row.bracket_high)},
                      {"runs", row.runs},
                      {"v_safe_paper", row.v_safe_paper},
                      {"rel_err_paper", detail::opt(row.rel_err_paper)},
                      {"error", row.error}});
    }
    panels.push_back({{"param", to_string(panel.param)}, {"rows", rows}});
  }
  return {{"mode", to_string(rep.mode)},
          {"speed_ceiling", rep.speed_ceiling},
          {"max_rel_error", rep.max_rel_error},
          {"max_rel_error_paper", rep.max_rel_error_paper},
          {"counted_points", rep.counted_points},
          {"failed_points", rep.failed_points},
          {"panels", panels}};
}

inline ValidationReport validation_from_json(const json& j) {
  ValidationReport rep;
  rep.mode = detail::enum_from<ModelMode>(j, "mode", model_mode_from_string);
  rep.speed_ceiling = j.at("speed_ceiling").get<double>();
  rep.max_rel_error = j.at("max_rel_error").get<double>();
  rep.max_rel_error_paper = j.at("max_rel_error_paper").get<double>();
  rep.counted_points = j.at("counted_points").get<std::size_t>();
  rep.failed_points = j.at("failed_points").get<std::size_t>();
  for (const auto& pj : j.at("panels")) {
    ValidationPanel panel;
    panel.param = detail::enum_from<ParamField>(pj, "param", param_field_from_string);
    for (const auto& rj : pj.at("rows")) {
      ValidationRow row;
      row.value = rj.at("value").get<double>();
      row.params_hash = rj.at("params_hash").get<std::string>();
      row.v_safe = rj.at("v_safe").get<double>();
      row.binding = detail::enum_from<Binding>(rj, "binding", binding_from_string);
      row.v1 = detail::opt_from(rj, "v1");
      row.v2 = detail::opt_from(rj, "v2");
      row.empirical = detail::opt_from(rj, "empirical");
      row.rel_err = detail::opt_from(rj, "rel_err");
      row.bracket_low = detail::opt_from(rj, "bracket_low");
      row.bracket_high = detail::opt_from(rj, "bracket_high");
      row.runs = rj.at("runs").get<std::size_t>();
      row.v_safe_paper = rj.at("v_safe_paper").get<double>();
      row.rel_err_paper = detail::opt_from(rj, "rel_err_paper");
      row.error = rj.at("error").get<std::string>();
      panel.rows.push_back(std::move(row));
    }
    rep.panels.push_back(std::move(panel));
  }
  return rep;
}

inline json to_json(const SurfaceResult& s) {
  json cells = json::array();
  for (const auto& c : s.cells) {
    cells.push_back({{"e", c.e},
                     {"S", c.S},
                     {"tau", c.tau},
                     {"v_safe", c.v_safe},
                     {"binding", to_string(c.binding)},
                     {"error", c.error}});
  }
  return {{"e_grid", s.e_grid},
          {"S_grid", s.S_grid},
          {"argmax", {{"e_index", s.argmax_e}, {"S_index", s.argmax_S}}},
          {"cells", cells}};
}

inline SurfaceResult surface_from_json(const json& j) {
  SurfaceResult s;
  s.e_grid = j.at("e_grid").get<std::vector<double>>();
  s.S_grid = j.at("S_grid").get<std::vector<double>>();
  s.argmax_e = j.at("argmax").at("e_index").get<std::size_t>();
  s.argmax_S = j.at("argmax").at("S_index").get<std::size_t>();
  for (const auto& c : j.at("cells")) {
    s.cells.push_back({c.at("e").get<double>(), c.at("S").get<double>(), c.at("tau").get<double>(),
                       c.at("v_safe").get<double>(),
                       detail::enum_from<Binding>(c, "binding", binding_from_string),
                       c.at("error").get<std::string>()});
  }
  return s;
}

inline json to_json(const CrossingCurve& c) {
  json vmax = json::array();
  for (const auto& v : c.v_y_max_T) vmax.push_back(detail::opt(v));
  return {{"mode", to_string(c.mode)}, {"v_x_max", c.v_x_max}, {"v1", detail::opt(c.v1)},
          {"v2", detail::opt(c.v2)},   {"v_x", c.v_x},         {"v_y_T", c.v_y_T},
          {"v_y_max_T", vmax},         {"t_prime_over_T", c.ratio}};
}

inline CrossingCurve crossings_from_json(const json& j) {
  CrossingCurve c;
  c.mode = detail::enum_from<ModelMode>(j, "mode", model_mode_from_string);
  c.v_x_max = j.at("v_x_max").get<double>();
  c.v1 = detail::opt_from(j, "v1");
  c.v2 = detail::opt_from(j, "v2");
  c.v_x = j.at("v_x").get<std::vector<double>>();
  c.v_y_T = j.at("v_y_T").get<std::vector<double>>();
  for (const auto& v : j.at("v_y_max_T")) {
    c.v_y_max_T.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  }
  c.ratio = j.at("t_prime_over_T").get<std::vector<double>>();
  return c;
}

inline json to_json(const SimVerdict& v) {
  return {{"outcome", to_string(v.outcome)},
          {"y_max", v.y_max},
          {"v_y_terminal", v.v_y_terminal},
          {"y_terminal", v.y_terminal}};
}

inline SimVerdict verdict_from_json(const json& j) {
  return {detail::enum_from<SimOutcome>(j, "outcome", detail::outcome_from_string),
          j.at("y_max").get<double>(), j.at("v_y_terminal").get<double>(),
          j.at("y_terminal").get<double>()};
}

inline json to_json(const EmpiricalSpeedResult& r) {
  json probes = json::array();
  for (const auto& pr : r.probes) probes.push_back({{"v_x", pr.v_x}, {"outcome", to_string(pr.outcome)}});
  return {{"v_max", r.v_max},
          {"last_cleared", detail::opt(r.last_cleared)},
          {"first_failed", detail::opt(r.first_failed)},
          {"runs", r.runs},
          {"probes", probes}};
}

inline EmpiricalSpeedResult empirical_from_json(const json& j) {
  EmpiricalSpeedResult r;
  r.v_max = j.at("v_max").get<double>();
  r.last_cleared = detail::opt_from(j, "last_cleared");
  r.first_failed = detail::opt_from(j, "first_failed");
  r.runs = j.at("runs").get<std::size_t>();
  for (const auto& pj : j.at("probes")) {
    r.probes.push_back({pj.at("v_x").get<double>(),
                        detail::enum_from<SimOutcome>(pj, "outcome", detail::outcome_from_string)});
  }
  return r;
}

inline json to_json(const SweepFamily& f) {
  json members = json::array();
  for (const auto& m : f.members) members.push_back(to_json(m));
  return {{"series_param", to_string(f.series_param)},
          {"series_values", f.series_values},
          {"members", members}};
}

inline SweepFamily family_from_json(const json& j) {
  SweepFamily f;
  f.series_param = detail::enum_from<ParamField>(j, "series_param", param_field_from_string);
  f.series_values = j.at("series_values").get<std::vector<double>>();
  for (const auto& m : j.at("members")) f.members.push_back(sweep_from_json(m));
  if (f.members.size() != f.series_values.size()) {
    throw InputError("members and series_values differ in length", "result.members");
  }
  return f;
}

inline json to_json(const Report& r) {
  json j;
  j["tool"] = r.tool;
  j["version"] = r.version;
  j["scenario_hash"] = r.scenario_hash;
  if (r.wall_time_s) j["wall_time_s"] = *r.wall_time_s;
  j["scenario"] = r.scenario;
  j["kind"] = payload_kind(r.payload);
  j["result"] = std::visit([](const auto& p) { return to_json(p); }, r.payload);
  return j;
}

inline Report report_from_json(const json& j) {
  Report r;
  r.tool = j.at("tool").get<std::string>();
  r.version = j.at("version").get<std::string>();
  r.scenario_hash = j.at("scenario_hash").get<std::string>();
  if (j.contains("wall_time_s")) r.wall_time_s = j.at("wall_time_s").get<double>();
  r.scenario = j.at("scenario");
  const auto kind = j.at("kind").get<std::string>();
  const auto& res = j.at("result");
  if (kind == "solve") {
    r.payload = solution_from_json(res);
  } else if (kind == "sweep") {
    r.payload = sweep_from_json(res);
  } else if (kind == "validate") {
    r.payload = validation_from_json(res);
  } else if (kind == "surface") {
    r.payload = surface_from_json(res);
  } else if (kind == "crossings") {
    r.payload = crossings_from_json(res);
  } else if (kind == "simulate") {
    r.payload = verdict_from_json(res);
  } else if (kind == "empirical") {
    r.payload = empirical_from_json(res);
  } else if (kind == "sweep-family") {
    r.payload = family_from_json(res);
  } else {
    throw InputError("unknown report kind '" + kind + "'", "kind");
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace detail

inline constexpr const char* kSweepCsvHeader = "param,value,v_safe,binding,v1,v2,empirical,rel_err\n";

inline std::string sweep_csv(const SweepResult& r) {
  std::string out = kSweepCsvHeader;
  for (const auto& row : r.rows) {
    const auto& s = row.solution;
    out += std::string(to_string(r.param)) + "," + detail::num(row.value) + "," +
           (s ? detail::num(s->v_safe) : "") + "," + (s ? to_string(s->binding) : "") + "," +
           (s ? detail::num(s->v1) : "") + "," + (s ? detail::num(s->v2) : "") + "," +
           detail::num(row.empirical) + "," + detail::num(row.rel_err) + "\n";
  }
  return out;
}

inline std::string family_csv(const SweepFamily& f) {
  std::string out = std::string("series_param,series_value,") + kSweepCsvHeader;
  for (std::size_t i = 0; i < f.members.size(); ++i) {
    const std::string prefix =
        std::string(to_string(f.series_param)) + "," + detail::num(f.series_values[i]) + ",";
    const auto body = sweep_csv(f.members[i]);
    std::size_t pos = body.find('\n') + 1;
    while (pos < body.size()) {
      const auto end = body.find('\n', pos);
      out += prefix + body.substr(pos, end - pos + 1);
      pos = end + 1;
    }
  }
  return out;
}

inline std::string validation_csv(const ValidationReport& rep) {
  std::string out = kSweepCsvHeader;
  for (const auto& panel : rep.panels) {
    for (const auto& row : panel.rows) {
      const bool ok = row.error.empty();
      out += std::string(to_string(panel.param)) + "," + detail::num(row.value) + "," +
             (ok ? detail::num(row.v_safe) : "") + "," + (ok ? to_string(row.binding) : "") + "," +
             detail::num(row.v1) + "," + detail::num(row.v2) + "," + detail::num(row.empirical) +
             "," + detail::num(row.rel_err) + "\n";
    }
  }
  return out;
}

inline std::string solution_csv(const SpeedSolution& s) {
  return std::string("v_safe,binding,v_x_max,v1,v2\n") + detail::num(s.v_safe) + "," +
         to_string(s.binding) + "," + detail::num(s.v_x_max) + "," + detail::num(s.v1) + "," +
         detail::num(s.v2) + "\n";
}

inline std::string surface_csv(const SurfaceResult& s) {
  std::string out = "e,S,tau,v_safe,binding\n";
  for (const auto& c : s.cells) {
    out += detail::num(c.e) + "," + detail::num(c.S) + "," + detail::num(c.tau) + "," +
           (c.error.empty() ? detail::num(c.v_safe) : "") + "," + to_string(c.binding) + "\n";
  }
  return out;
}

inline std::string crossings_csv(const CrossingCurve& c) {
  std::string out = "v_x,v_y_T,v_y_max_T,t_prime_over_T\n";
  for (std::size_t i = 0; i < c.v_x.size(); ++i) {
    out += detail::num(c.v_x[i]) + "," + detail::num(c.v_y_T[i]) + "," +
           detail::num(c.v_y_max_T[i]) + "," + detail::num(c.ratio[i]) + "\n";
  }
  return out;
}

inline std::string verdict_csv(const SimVerdict& v) {
  return std::string("outcome,y_max,v_y_terminal,y_terminal\n") + to_string(v.outcome) + "," +
         detail::num(v.y_max) + "," + detail::num(v.v_y_terminal) + "," +
         detail::num(v.y_terminal) + "\n";
}

inline std::string empirical_csv(const EmpiricalSpeedResult& r) {
  std::string out = "v_x,outcome\n";
  for (const auto& pr : r.probes) out += detail::num(pr.v_x) + "," + to_string(pr.outcome) + "\n";
  return out;
}

/// One row per simulation step.
inline std::string trace_csv(const std::vector<SimSample>& trace) {
  std::string out = "t,x,y,vy,ay,r_inflated,phase\n";
  for (const auto& s : trace) {
    out += detail::num(s.t) + "," + detail::num(s.x) + "," + detail::num(s.y) + "," +
           detail::num(s.v_y) + "," + detail::num(s.a_y) + "," + detail::num(s.r_inflated) + "," +
           to_string(s.phase) + "\n";
  }
  return out;
}

inline std::string payload_csv(const Payload& p) {
  struct {
    std::string operator()(const SpeedSolution& v) const { return solution_csv(v); }
    std::string operator()(const SweepResult& v) const { return sweep_csv(v); }
    std::string operator()(const ValidationReport& v) const { return validation_csv(v); }
    std::string operator()(const SurfaceResult& v) const { return surface_csv(v); }
    std::string operator()(const CrossingCurve& v) const { return crossings_csv(v); }
    std::string operator()(const SimVerdict& v) const { return verdict_csv(v); }
    std::string operator()(const EmpiricalSpeedResult& v) const { return empirical_csv(v); }
    std::string operator()(const SweepFamily& v) const { return family_csv(v); }
  } visitor;
  return std::visit(visitor, p);
}

// ---------------------------------------------------------------------------
// Files

/// Writes via a sibling temporary and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'", "output");
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for '" + path.string() + "'", "output");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot replace '" + path.string() + "'", "output");
  }
}

enum class ReportFormat { json, csv };

inline void emit_report(const Report& report, ReportFormat format,
                        const std::filesystem::path& path) {
  const std::string body =
      format == ReportFormat::json ? to_json(report).dump(2) + "\n" : payload_csv(report.payload);
  write_file_atomic(path, body);
}

inline Report read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open report '" + path.string() + "'", "report");
  return report_from_json(json::parse(in));
}

}  // namespace safespeed::io
