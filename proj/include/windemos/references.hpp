#pragma once

#include <random>
#include <vector>

#include "windemos/core.hpp"
#include "windemos/estimation.hpp"
#include "windemos/predict.hpp"

namespace windemos {

/// Discrete reference forecast: m = 8 recombined samples for ECC, 35 dressed
/// vectors for Error Dressing.
struct DiscreteForecast {
  std::vector<WindVector> members;
  std::string method;
  std::string station_id;
  UtcTime valid_time;
};

/// Same density as emos_density but with the correlation forced to zero: the
/// components postprocessed independently.
BivariateNormalParams independent_emos(const EmosParameters& p, const EnsembleForecast& e);

/// Recombination step of ensemble copula coupling: assigns the i-th smallest
/// u sample to the raw member with u rank i (ties in the raw values broken
/// uniformly at random), likewise for v. The sample vectors must be sorted
/// ascending.
std::vector<WindVector> ecc_recombine(const EnsembleForecast& raw,
                                      const std::vector<double>& sorted_u_samples,
                                      const std::vector<double>& sorted_v_samples,
                                      std::mt19937_64& rng);

/// Ensemble copula coupling: m independent normal samples per component,
/// reordered to inherit the raw ensemble's componentwise rank structure.
/// `f_indep` must have rho = 0. With `equidistant` set, the samples are the
/// quantiles at (i - 1/2) / m instead of random draws.
std::vector<WindVector> ecc(const EnsembleForecast& raw, const BivariateNormalParams& f_indep,
                            std::uint64_t rng_seed, bool equidistant = false);
std::vector<WindVector> ecc(const EnsembleForecast& raw, const BivariateNormalParams& f_indep,
                            std::mt19937_64& rng, bool equidistant = false);

/// Error Dressing: adds `count` training-window error vectors
/// (observation - ensemble mean) to the current ensemble mean. When the
/// window holds more than `count` errors the subsample is uniform without
/// replacement (or the most recent `count` with `most_recent` set); smaller
/// windows are used whole.
std::vector<WindVector> error_dress(const TrainingWindow& w, const EnsembleForecast& e,
                                    std::size_t count, std::uint64_t rng_seed,
                                    bool most_recent = false);
std::vector<WindVector> error_dress(const TrainingWindow& w, const EnsembleForecast& e,
                                    std::size_t count, std::mt19937_64& rng,
                                    bool most_recent = false);

}  // namespace windemos
