#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "windemos/core.hpp"
#include "windemos/estimation.hpp"

namespace windemos {

/// Postprocessed density forecast plus provenance.
struct DensityForecast {
  BivariateNormalParams params;
  Scope scope = Scope::Regional;
  std::string station_id;
  UtcTime valid_time;
  bool zero_mean_direction = false;  // theta = 0 convention was applied
};

/// Normal distribution truncated below at zero; the wind-speed reference
/// forecast form.
struct TruncatedNormal {
  double location = 0.0;
  double scale = 1.0;
};

/// Wind-speed forecast: a sampled discrete ensemble or a truncated normal.
using SpeedForecast = std::variant<std::vector<double>, TruncatedNormal>;

/// Density parameters for one ensemble: mean model on the ensemble means,
/// variance model on the ensemble variances, correlation model at the
/// ensemble mean direction. Variances are floored at 1e-12 so the result
/// always satisfies the density invariants.
BivariateNormalParams emos_density(const EmosParameters& p, const EnsembleForecast& e,
                                   std::optional<double> sector1_empirical = {});

DensityForecast make_forecast(const EmosParameters& p, const ForecastCase& c,
                              std::optional<double> sector1_empirical = {});

/// Discrete wind-speed ensemble: n density samples through the Euclidean norm.
std::vector<double> speed_ensemble(const BivariateNormalParams& p, std::size_t n,
                                   std::uint64_t rng_seed);
std::vector<double> speed_ensemble(const BivariateNormalParams& p, std::size_t n,
                                   std::mt19937_64& rng);

double truncnorm_cdf(const TruncatedNormal& tn, double x);
double truncnorm_median(const TruncatedNormal& tn);
/// Closed-form CRPS of the zero-truncated normal.
double truncnorm_crps(const TruncatedNormal& tn, double y);

/// Wind-speed EMOS coefficients: location = a + b * (mean member speed),
/// scale^2 = c + d * (member speed variance), with c, d >= 0 and the scale
/// floored at 1e-4 (m/s)^2.
struct SpeedEmosCoeffs {
  double a = 0.0, b = 1.0;
  double c = 1.0, d = 1.0;
  bool converged = true;
};

/// Minimum-CRPS estimation of the wind-speed EMOS coefficients over a
/// training window; observed speeds are the norms of the observation vectors.
SpeedEmosCoeffs fit_speed_emos(const TrainingWindow& w, const SpeedEmosCoeffs& init = {});

TruncatedNormal speed_emos_forecast(const SpeedEmosCoeffs& sc, const EnsembleForecast& e);

/// Mean and population variance of the member speeds.
struct SpeedStats {
  double mean = 0.0;
  double var = 0.0;
};
SpeedStats member_speed_stats(const EnsembleForecast& e);

}  // namespace windemos
