#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "safespeed/errors.hpp"

namespace safespeed {

/// One named contribution to the end-to-end latency (seconds).
struct LatencyTerm {
  std::string name;
  double seconds = 0.0;

  bool operator==(const LatencyTerm&) const = default;
};

/// Sum of latency terms. Negative terms are rejected.
inline double total_latency(std::span<const LatencyTerm> terms) {
  double sum = 0.0;
  for (const auto& term : terms) {
    if (!(term.seconds >= 0.0)) {
      throw InputError("latency term must be >= 0", "latency." + term.name);
    }
    sum += term.seconds;
  }
  return sum;
}

/// Scenario record for the speed envelope. Lengths in metres, times in
/// seconds. The UAV flies at constant forward speed and dodges laterally.
struct FlightParams {
  double r = 0.1;        ///< obstacle half-width
  double d = 0.37;       ///< safety / inflation distance
  double a_max = 20.0;   ///< lateral acceleration limit (m/s^2)
  double j_max = 120.0;  ///< lateral jerk limit (m/s^3)
  double R = 3.0;        ///< mean obstacle spacing
  double e = 0.01;       ///< drift rate: lateral map error per metre flown
  double S = 6.0;        ///< sensing range
  double tau = 0.01;     ///< total latency
  /// When present, tau must equal the sum of these terms.
  std::optional<std::vector<LatencyTerm>> latency_components;

  bool operator==(const FlightParams&) const = default;
};

/// Reference scenario: forest-style traversal with a 6 m sensor.
inline FlightParams default_scenario() { return FlightParams{}; }

inline constexpr double kLatencySumTolerance = 1e-12;

/// Throws InputError naming the first violated field.
inline void validate(const FlightParams& p) {
  auto require = [](bool ok, const char* key, const char* relation) {
    if (!ok) throw InputError(std::string("violates ") + relation, key);
  };
  require(std::isfinite(p.r) && p.r > 0.0, "flight.r", "r > 0");
  require(std::isfinite(p.d) && p.d > 0.0, "flight.d", "d > 0");
  require(std::isfinite(p.a_max) && p.a_max > 0.0, "flight.a_max", "a_max > 0");
  require(std::isfinite(p.j_max) && p.j_max > 0.0, "flight.j_max", "j_max > 0");
  require(std::isfinite(p.S) && p.S > p.d, "flight.S", "S > d");
  require(std::isfinite(p.R) && p.R > p.r + p.d, "flight.R", "R > r + d");
  require(std::isfinite(p.e) && p.e >= 0.0, "flight.e", "e >= 0");
  require(std::isfinite(p.tau) && p.tau >= 0.0, "flight.tau", "tau >= 0");
  if (p.latency_components) {
    const double sum = total_latency(*p.latency_components);
    require(std::abs(sum - p.tau) <= kLatencySumTolerance, "flight.tau",
            "tau == sum(latency_components)");
  }
}

/// Named scalar fields that sweeps and `--set` may address.
enum class ParamField { r, d, a_max, j_max, R, e, S, tau };

inline constexpr ParamField kAllParamFields[] = {
    ParamField::r, ParamField::d, ParamField::a_max, ParamField::j_max,
    ParamField::R, ParamField::e, ParamField::S,     ParamField::tau};

inline const char* to_string(ParamField f) {
  switch (f) {
    case ParamField::r: return "r";
    case ParamField::d: return "d";
    case ParamField::a_max: return "a_max";
    case ParamField::j_max: return "j_max";
    case ParamField::R: return "R";
    case ParamField::e: return "e";
    case ParamField::S: return "S";
    case ParamField::tau: return "tau";
  }
  return "?";
}

inline std::optional<ParamField> param_field_from_string(std::string_view name) {
  for (auto f : kAllParamFields) {
    if (name == to_string(f)) return f;
  }
  return std::nullopt;
}

inline const char* unit_of(ParamField f) {
  switch (f) {
    case ParamField::a_max: return "m/s^2";
    case ParamField::j_max: return "m/s^3";
    case ParamField::e: return "-";
    case ParamField::tau: return "s";
    default: return "m";
  }
}

inline double& field_ref(FlightParams& p, ParamField f) {
  switch (f) {
    case ParamField::r: return p.r;
    case ParamField::d: return p.d;
    case ParamField::a_max: return p.a_max;
    case ParamField::j_max: return p.j_max;
    case ParamField::R: return p.R;
    case ParamField::e: return p.e;
    case ParamField::S: return p.S;
    case ParamField::tau: return p.tau;
  }
  return p.r;
}

inline double field_value(FlightParams p, ParamField f) { return field_ref(p, f); }

/// Copy of `p` with one field replaced. Setting tau drops the latency
/// breakdown since it no longer sums to the new value.
inline FlightParams with_field(FlightParams p, ParamField f, double value) {
  field_ref(p, f) = value;
  if (f == ParamField::tau) p.latency_components.reset();
  return p;
}

namespace detail {

inline void fnv1a(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

inline void fnv1a(std::uint64_t& h, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  fnv1a(h, &bits, sizeof bits);
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

/// FNV-1a over the exact bit patterns of every field.
inline std::string params_hash(const FlightParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto f : kAllParamFields) detail::fnv1a(h, field_value(p, f));
  if (p.latency_components) {
    for (const auto& term : *p.latency_components) {
      detail::fnv1a(h, term.name.data(), term.name.size());
      detail::fnv1a(h, term.seconds);
    }
  }
  return detail::hex64(h);
}

}  // namespace safespeed
