#pragma once

// Scenario resolution: built-in profile -> optional profile file -> config
// file -> `--set` overrides, then full validation. Config documents are JSON
// with sections flight, solver, sim, sweep and latency_model; unknown keys
// are rejected with their key path.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "safespeed/envelope_solver.hpp"
#include "safespeed/errors.hpp"
#include "safespeed/flight_params.hpp"
#include "safespeed/kinematic_sim.hpp"

namespace safespeed::io {

using nlohmann::json;

/// Directory searched for `<name>.json` profiles besides the built-ins.
inline constexpr const char* kProfileDirEnv = "SAFESPEED_PROFILE_DIR";

struct Scenario {
  std::string profile = "defaults";
  FlightParams flight;
  SolverConfig solver;
  SimConfig sim;
  std::optional<SweepSpec> sweep;  ///< base is kept equal to `flight`
  std::optional<LatencyModel> latency_model;

  bool operator==(const Scenario& o) const {
    auto same_sweep = [&] {
      if (sweep.has_value() != o.sweep.has_value()) return false;
      if (!sweep) return true;
      return sweep->param == o.sweep->param && sweep->values == o.sweep->values &&
             sweep->run_simulator == o.sweep->run_simulator;
    };
    return profile == o.profile && flight == o.flight && solver == o.solver && sim == o.sim &&
           same_sweep() && latency_model == o.latency_model;
  }
};

namespace detail {

inline double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw InputError("expected a number", key);
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw InputError("expected a string", key);
  return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw InputError("expected true or false", key);
  return v.get<bool>();
}

inline void require_object(const json& v, const std::string& key) {
  if (!v.is_object()) throw InputError("expected an object", key);
}

inline void apply_flight(FlightParams& p, const json& j) {
  require_object(j, "flight");
  bool tau_set = false;
  for (const auto& [k, v] : j.items()) {
    const std::string key = "flight." + k;
    if (k == "latency_components") continue;
    auto field = param_field_from_string(k);
    if (!field) throw InputError("unknown key", key);
    field_ref(p, *field) = as_number(v, key);
    tau_set = tau_set || *field == ParamField::tau;
  }
  if (j.contains("latency_components")) {
    const auto& arr = j.at("latency_components");
    if (!arr.is_array()) throw InputError("expected an array", "flight.latency_components");
    std::vector<LatencyTerm> terms;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string key = "flight.latency_components[" + std::to_string(i) + "]";
      require_object(arr[i], key);
      LatencyTerm term;
      for (const auto& [k, v] : arr[i].items()) {
        if (k == "name") {
          term.name = as_string(v, key + ".name");
        } else if (k == "seconds") {
          term.seconds = as_number(v, key + ".seconds");
        } else {
          throw InputError("unknown key", key + "." + k);
        }
      }
      terms.push_back(std::move(term));
    }
    if (!tau_set) p.tau = total_latency(terms);
    p.latency_components = std::move(terms);
  } else if (tau_set) {
    p.latency_components.reset();
  }
}

inline void apply_solver(SolverConfig& c, const json& j) {
  require_object(j, "solver");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "solver." + k;
    if (k == "grid_points") {
      if (!v.is_number_integer()) throw InputError("expected an integer", key);
      c.grid_points = v.get<int>();
    } else if (k == "v_tolerance") {
      c.v_tolerance = as_number(v, key);
    } else if (k == "mode") {
      auto m = model_mode_from_string(as_string(v, key));
      if (!m) throw InputError("expected \"paper\" or \"exact\"", key);
      c.mode = *m;
    } else if (k == "threads") {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw InputError("expected a non-negative integer", key);
      }
      c.threads = v.get<unsigned>();
    } else {
      throw InputError("unknown key", key);
    }
  }
}

inline void apply_sim(SimConfig& c, const json& j) {
  require_object(j, "sim");
  for (const auto& [k, v] : j.items()) {
    const std::string key = "sim." + k;
    if (k == "dt") {
      c.dt = as_number(v, key);
    } else if (k == "start_distance") {
      c.start_distance = as_number(v, key);
    } else if (k == "collision_model") {
      auto m = collision_model_from_string(as_string(v, key));
      if (!m) throw InputError("expected \"excursion-bound\" or \"explicit-obstacles\"", key);
      c.collision_model = *m;
    } else if (k == "bisection_tolerance") {
      c.bisection_tolerance = as_number(v, key);
    } else if (k == "min_speed_probe") {
      c.min_speed_probe = as_number(v, key);
    } else if (k == "max_speed_probe") {
      c.max_speed_probe = as_number(v, key);
    } else if (k == "contact_tolerance") {
      c.contact_tolerance = as_number(v, key);
    } else {
      throw InputError("unknown key", key);
    }
  }
}

inline void apply_sweep(std::optional<SweepSpec>& s, const json& j) {
  require_object(j, "sweep");
  if (!s) s.emplace();
  for (const auto& [k, v] : j.items()) {
    const std::string key = "sweep." + k;
    if (k == "param") {
      auto f = param_field_from_string(as_string(v, key));
      if (!f) throw InputError("unknown parameter name", key);
      s->param = *f;
    } else if (k == "values") {
      s->values.clear();
      if (v.is_number()) {
        s->values.push_back(v.get<double>());
        continue;
      }
      if (!v.is_array()) throw InputError("expected an array", key);
      for (std::size_t i = 0; i < v.size(); ++i) {
        s->values.push_back(as_number(v[i], key + "[" + std::to_string(i) + "]"));
      }
    } else if (k == "run_simulator") {
      s->run_simulator = as_bool(v, key);
    } else {
      throw InputError("unknown key", key);
    }
  }
}

inline void apply_latency_model(std::optional<LatencyModel>& lm, const json& j) {
  require_object(j, "latency_model");
  if (!lm) lm.emplace();
  for (const auto& [k, v] : j.items()) {
    const std::string key = "latency_model." + k;
    if (k == "tau0") {
      lm->tau0 = as_number(v, key);
    } else if (k == "c_S") {
      lm->c_S = as_number(v, key);
    } else if (k == "c_e") {
      lm->c_e = as_number(v, key);
    } else if (k == "e0") {
      lm->e0 = as_number(v, key);
    } else {
      throw InputError("unknown key", key);
    }
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path.string() + "'", "config");
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw InputError(std::string("malformed JSON: ") + ex.what(), "config");
  }
}

}  // namespace detail

/// Overlays the keys present in `doc` onto `s`. Does not validate.
inline void apply_overlay(Scenario& s, const json& doc) {
  detail::require_object(doc, "config");
  for (const auto& [k, v] : doc.items()) {
    if (k == "flight") {
      detail::apply_flight(s.flight, v);
    } else if (k == "solver") {
      detail::apply_solver(s.solver, v);
    } else if (k == "sim") {
      detail::apply_sim(s.sim, v);
    } else if (k == "sweep") {
      detail::apply_sweep(s.sweep, v);
    } else if (k == "latency_model") {
      detail::apply_latency_model(s.latency_model, v);
    } else if (k == "profile") {
      // Resolved before overlaying; see resolve_scenario.
      detail::as_string(v, "profile");
    } else {
      throw InputError("unknown key", k);
    }
  }
  if (s.sweep) s.sweep->base = s.flight;
}

/// Enforces every invariant with field-precise diagnostics.
inline void validate(const Scenario& s) {
  validate(s.flight);
  validate(s.solver);
  validate(s.sim, s.flight);
  if (s.sweep) {
    if (s.sweep->values.empty()) throw InputError("must not be empty", "sweep.values");
    validate(*s.sweep);
  }
  if (s.latency_model) validate(*s.latency_model);
}

/// Built-in `defaults`, or `<name>.json` from $SAFESPEED_PROFILE_DIR layered
/// over the built-in defaults.
inline Scenario load_profile(const std::string& name) {
  Scenario s;
  s.profile = name;
  if (name == "defaults") return s;
  const char* dir = std::getenv(kProfileDirEnv);
  if (dir == nullptr) throw InputError("unknown profile '" + name + "'", "profile");
  const auto path = std::filesystem::path(dir) / (name + ".json");
  if (!std::filesystem::exists(path)) {
    throw InputError("unknown profile '" + name + "' (not in " + std::string(dir) + ")", "profile");
  }
  apply_overlay(s, detail::read_json_file(path));
  return s;
}

/// Parses one `key=value` override. Bare keys address flight parameters
/// (`R=1e6`); dotted keys address any section (`solver.mode=exact`).
/// Comma-separated values become arrays (`sweep.values=0,0.01,0.02`).
inline json override_to_json(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InputError("expected KEY=VALUE, got '" + assignment + "'", "--set");
  }
  std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  if (key.find('.') == std::string::npos) key = "flight." + key;

  auto scalar = [](const std::string& text) -> json {
    if (text == "true") return true;
    if (text == "false") return false;
    try {
      std::size_t used = 0;
      if (text.find_first_of(".eE") == std::string::npos) {
        const long long n = std::stoll(text, &used);
        if (used == text.size()) return n;
      }
      const double d = std::stod(text, &used);
      if (used == text.size()) return d;
    } catch (const std::exception&) {
    }
    return text;
  };

  json value;
  if (raw.find(',') != std::string::npos) {
    value = json::array();
    std::stringstream ss(raw);
    for (std::string item; std::getline(ss, item, ',');) value.push_back(scalar(item));
  } else {
    value = scalar(raw);
  }

  json doc = json::object();
  json* cursor = &doc;
  std::stringstream path(key);
  std::vector<std::string> parts;
  for (std::string part; std::getline(path, part, '.');) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) cursor = &(*cursor)[parts[i]];
  (*cursor)[parts.back()] = value;
  return doc;
}

/// Full resolution: profile, then config file, then overrides in order.
inline Scenario resolve_scenario(const std::string& profile,
                                 const std::optional<std::filesystem::path>& config_path,
                                 const std::vector<std::string>& overrides) {
  std::optional<json> file_doc;
  std::string profile_name = profile;
  if (config_path) {
    file_doc = detail::read_json_file(*config_path);
    if (file_doc->is_object() && file_doc->contains("profile") && profile == "defaults") {
      profile_name = detail::as_string(file_doc->at("profile"), "profile");
    }
  }
  Scenario s = load_profile(profile_name);
  if (file_doc) apply_overlay(s, *file_doc);
  for (const auto& o : overrides) apply_overlay(s, override_to_json(o));
  validate(s);
  return s;
}

inline Scenario parse_config(const std::filesystem::path& path) {
  return resolve_scenario("defaults", path, {});
}

// ---------------------------------------------------------------------------
// Serialization of the resolved scenario.

inline json to_json(const FlightParams& p) {
  json j = json::object();
  for (auto f : kAllParamFields) j[to_string(f)] = field_value(p, f);
  if (p.latency_components) {
    json arr = json::array();
    for (const auto& t : *p.latency_components) arr.push_back({{"name", t.name}, {"seconds", t.seconds}});
    j["latency_components"] = arr;
  }
  return j;
}

inline json to_json(const Scenario& s) {
  json j;
  j["profile"] = s.profile;
  j["flight"] = to_json(s.flight);
  j["solver"] = {{"grid_points", s.solver.grid_points},
                 {"v_tolerance", s.solver.v_tolerance},
                 {"mode", to_string(s.solver.mode)},
                 {"threads", s.solver.threads}};
  j["sim"] = {{"dt", s.sim.dt},
              {"start_distance", s.sim.start_distance},
              {"collision_model", to_string(s.sim.collision_model)},
              {"bisection_tolerance", s.sim.bisection_tolerance},
              {"min_speed_probe", s.sim.min_speed_probe},
              {"max_speed_probe", s.sim.max_speed_probe},
              {"contact_tolerance", s.sim.contact_tolerance}};
  if (s.sweep) {
    j["sweep"] = {{"param", to_string(s.sweep->param)},
                  {"values", s.sweep->values},
                  {"run_simulator", s.sweep->run_simulator}};
  }
  if (s.latency_model) {
    j["latency_model"] = {{"tau0", s.latency_model->tau0},
                          {"c_S", s.latency_model->c_S},
                          {"c_e", s.latency_model->c_e},
                          {"e0", s.latency_model->e0}};
  }
  return j;
}

/// Parses a fully resolved scenario (as embedded in reports).
inline Scenario scenario_from_json(const json& j) {
  Scenario s;
  if (j.contains("profile")) s.profile = detail::as_string(j.at("profile"), "profile");
  apply_overlay(s, j);
  return s;
}

inline std::string scenario_hash(const Scenario& s) {
  const std::string text = to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  safespeed::detail::fnv1a(h, text.data(), text.size());
  return safespeed::detail::hex64(h);
}

}  // namespace safespeed::io
