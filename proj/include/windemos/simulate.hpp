#pragma once

#include <cstdint>
#include <vector>

#include "windemos/core.hpp"
#include "windemos/sectors.hpp"

namespace windemos {

/// Synthetic-data generator: ensembles drawn around roaming latent means with
/// per-case spread, observations drawn from the EMOS model those ensembles
/// imply. Member scatter shares the direction-dependent correlation of the
/// observation errors, mimicking a flow-dependent ensemble. A dataset
/// generated with the identity coefficients is calibrated by construction.
struct GeneratorSpec {
  int n_stations = 20;
  int n_days = 100;
  int ensemble_size = 8;
  UtcTime start = UtcTime{1167609600};  // 2007-01-01T00:00:00Z

  double a_u = 0.0, b_u = 1.0, a_v = 0.0, b_v = 1.0;
  double c_u = 0.0, d_u = 1.0, c_v = 0.0, d_v = 1.0;
  CorrelationModel corr{0.0, 0.0, 1, 0.0};

  double mean_sd = 3.0;  // scatter of the latent ensemble-mean process
  double spread_lo = 0.5, spread_hi = 2.0;
  double missing_rate = 0.0;
  bool discretize_obs = false;  // round speeds to whole knots, zero below two
  std::uint64_t seed = 1;
};

std::vector<ForecastCase> simulate_dataset(const GeneratorSpec& spec);

}  // namespace windemos
