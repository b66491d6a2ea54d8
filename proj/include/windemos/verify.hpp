#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "windemos/core.hpp"

namespace windemos {

/// Half a recording knot: observations are rounded to whole knots, so the
/// marginal calibration jitter is uniform within this half-width.
constexpr double kObsJitterHalfWidth = 0.2572;  // m/s
/// Zero speed observations are re-randomized uniformly on (0, this].
constexpr double kZeroSpeedUpper = 1.03;  // m/s

struct RankHistogram {
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
  std::vector<double> frequencies() const;
};

/// Exact energy score of a discrete ensemble:
/// (1/m) sum ||x_i - y|| - 1/(2 m^2) sum_ij ||x_i - x_j||.
double energy_score_ensemble(const std::vector<WindVector>& members, WindVector y);

/// Monte-Carlo energy score over any sampler:
/// (1/k) sum ||x_i - y|| - 1/(2(k-1)) sum ||x_i - x_{i+1}||.
template <typename Sampler>
double energy_score_sampled(Sampler&& draw, WindVector y, std::size_t k) {
  if (k < 2) throw Error(ErrorCode::InvalidParameter, "estimator needs k >= 2 samples");
  WindVector prev = draw();
  double sum_obs = distance(prev, y);
  double sum_gap = 0.0;
  for (std::size_t i = 1; i < k; ++i) {
    const WindVector x = draw();
    sum_obs += distance(x, y);
    sum_gap += distance(prev, x);
    prev = x;
  }
  return sum_obs / static_cast<double>(k) - sum_gap / (2.0 * static_cast<double>(k - 1));
}

double energy_score_density(const BivariateNormalParams& p, WindVector y, std::size_t k,
                            std::mt19937_64& rng);
double energy_score_density(const BivariateNormalParams& p, WindVector y, std::size_t k = 10000,
                            std::uint64_t rng_seed = 0);

/// One-dimensional analogue of the ensemble energy score.
double crps_ensemble(const std::vector<double>& members, double y);

struct SpatialMedianResult {
  WindVector point;
  bool converged = false;
  int iterations = 0;
};

/// Weighted spatial median by the Vardi-Zhang modified Weiszfeld iteration;
/// stops when the step drops below 1e-9 or after 10^4 iterations.
SpatialMedianResult spatial_median(const std::vector<WindVector>& points,
                                   const std::vector<double>& weights = {});

/// bae = || bmed - y ||. For the elliptically symmetric density the bivariate
/// median is the mean vector; for a discrete ensemble it is the spatial
/// median of the members.
double bivariate_abs_error(const BivariateNormalParams& f, WindVector y);
double bivariate_abs_error(const std::vector<WindVector>& members, WindVector y);

/// Randomized multivariate rank of the observation in the pooled set, in
/// 1..m+1. Pre-ranks count pooled vectors componentwise <= the vector (both
/// coordinates, counting itself); pre-rank ties resolve uniformly at random.
int multivariate_rank(const std::vector<WindVector>& members, WindVector y,
                      std::mt19937_64& rng);
int multivariate_rank(const std::vector<WindVector>& members, WindVector y,
                      std::uint64_t rng_seed);

/// Histogram over m+1 ranks of density forecasts, each reduced to a simple
/// random sample of `sample_m` members first.
RankHistogram rank_histogram_density(
    const std::vector<std::pair<BivariateNormalParams, WindVector>>& cases,
    std::uint64_t rng_seed, std::size_t sample_m = 8);

/// Histogram for discrete forecasts. 35-member ensembles produce 36 ranks
/// binned into nine groups of four; anything else is binned per rank.
RankHistogram rank_histogram_discrete(
    const std::vector<std::pair<std::vector<WindVector>, WindVector>>& cases,
    std::uint64_t rng_seed);

/// Reliability index: sum_i | f_i - 1/B | over the B histogram bins.
double reliability_index(const RankHistogram& h);

/// Pearson chi-square p-value against the uniform histogram.
double chi_square_uniformity_pvalue(const RankHistogram& h);

/// Replaces exact zeros by uniform draws on (0, 1.03] m/s.
std::vector<double> randomize_zero_speeds(const std::vector<double>& speeds,
                                          std::mt19937_64& rng);
std::vector<double> randomize_zero_speeds(const std::vector<double>& speeds,
                                          std::uint64_t rng_seed);

/// Midpoint-convention sample median.
double sample_median(std::vector<double> values);

/// One row of the marginal calibration diagram: jittered observation, a
/// uniformly chosen raw member and one density sample.
struct MarginalCalibrationRow {
  std::string station_id;
  UtcTime valid_time;
  WindVector obs_perturbed;
  WindVector raw_member;
  WindVector density_sample;
};

std::vector<MarginalCalibrationRow> marginal_calibration_data(
    const std::vector<ForecastCase>& cases, const std::vector<BivariateNormalParams>& densities,
    std::uint64_t rng_seed);

/// Compensated accumulator so score averages are order-robust.
struct MeanAccumulator {
  double sum = 0.0;
  double comp = 0.0;
  std::size_t n = 0;

  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    ++n;
  }
  double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
};

/// Aggregate verification measures for one method.
struct ScoreSummary {
  std::string method;
  std::size_t n_cases = 0;
  double mean_es = 0.0;
  double bmae = 0.0;
  double delta = 0.0;  // reliability index of the rank histogram
  double uniformity_p = 0.0;
  double crps = 0.0;  // wind-speed scores
  double mae = 0.0;
  bool has_vector_scores = true;
  bool has_speed_scores = true;
};

}  // namespace windemos
