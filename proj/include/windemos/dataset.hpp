#pragma once

#include <string>
#include <vector>

#include "windemos/core.hpp"

namespace windemos {

constexpr double kKnotInMs = 0.5144;

struct LoadOptions {
  bool require_observations = false;
  bool knots_to_ms = false;  // input u/v columns arrive in knots
};

/// Quality-control counters: every input row is either kept or dropped.
struct LoadReport {
  std::size_t rows = 0;
  std::size_t rows_kept = 0;
  std::size_t rows_dropped = 0;
  std::size_t cases_kept = 0;
  std::size_t dropped_incomplete = 0;   // cases missing member rows
  std::size_t dropped_missing_obs = 0;  // cases without observations, when required
};

/// Reads the dataset CSV (header: station_id,valid_time,member_id,u,v,obs_u,
/// obs_v; one row per member). Cases missing any member of the file's member
/// universe are dropped and counted. Returns cases sorted by (valid_time,
/// station_id) with members in a stable universe order.
std::vector<ForecastCase> load_dataset(const std::string& path, const LoadOptions& opts = {},
                                       LoadReport* report = nullptr);

void write_dataset(const std::string& path, const std::vector<ForecastCase>& cases);

/// Shortest round-trip decimal text for a double (CSV number format).
std::string format_double(double x);
double parse_double(const std::string& text);

}  // namespace windemos
