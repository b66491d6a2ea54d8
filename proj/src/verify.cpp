#include "windemos/verify.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

namespace windemos {

std::vector<double> RankHistogram::frequencies() const {
  const double t = static_cast<double>(total());
  std::vector<double> f(counts.size(), 0.0);
  if (t == 0.0) return f;
  for (std::size_t i = 0; i < counts.size(); ++i) f[i] = static_cast<double>(counts[i]) / t;
  return f;
}

double energy_score_ensemble(const std::vector<WindVector>& members, WindVector y) {
  const std::size_t m = members.size();
  if (m < 1) throw Error(ErrorCode::DegenerateEnsemble, "empty ensemble");
  double t1 = 0.0;
  for (const auto& x : members) t1 += distance(x, y);
  t1 /= static_cast<double>(m);
  double t2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) t2 += distance(members[i], members[j]);
  }
  t2 /= 2.0 * static_cast<double>(m) * static_cast<double>(m);
  return t1 - t2;
}

double energy_score_density(const BivariateNormalParams& p, WindVector y, std::size_t k,
                            std::mt19937_64& rng) {
  validate(p);
  return energy_score_sampled([&] { return sample_one(p, rng); }, y, k);
}

double energy_score_density(const BivariateNormalParams& p, WindVector y, std::size_t k,
                            std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return energy_score_density(p, y, k, rng);
}

double crps_ensemble(const std::vector<double>& members, double y) {
  const std::size_t m = members.size();
  if (m < 1) throw Error(ErrorCode::DegenerateEnsemble, "empty ensemble");
  double t1 = 0.0;
  for (double x : members) t1 += std::abs(x - y);
  t1 /= static_cast<double>(m);
  double t2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) t2 += std::abs(members[i] - members[j]);
  }
  t2 /= 2.0 * static_cast<double>(m) * static_cast<double>(m);
  return t1 - t2;
}

SpatialMedianResult spatial_median(const std::vector<WindVector>& points,
                                   const std::vector<double>& weights) {
  const std::size_t n = points.size();
  if (n == 0) throw Error(ErrorCode::InsufficientData, "spatial median of no points");
  if (!weights.empty() && weights.size() != n) {
    throw Error(ErrorCode::DatasetShape, "weight count does not match point count");
  }
  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  SpatialMedianResult res;
  if (n == 1) {
    res.point = points[0];
    res.converged = true;
    return res;
  }

  // Start at the weighted centroid.
  double wsum = 0.0;
  WindVector x{0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    x = x + weight(i) * points[i];
    wsum += weight(i);
  }
  x = (1.0 / wsum) * x;

  const int max_iters = 10000;
  const double step_tol = 1e-9;
  for (int iter = 0; iter < max_iters; ++iter) {
    res.iterations = iter + 1;
    // Split anchors into those coinciding with x and the rest.
    double eta = 0.0;          // weight sitting exactly at x
    double l_sum = 0.0;        // sum w_i / d_i over the rest
    WindVector t_num{0, 0};    // sum w_i p_i / d_i
    WindVector r_vec{0, 0};    // sum w_i (p_i - x) / d_i
    for (std::size_t i = 0; i < n; ++i) {
      const double d = distance(points[i], x);
      if (d < 1e-12) {
        eta += weight(i);
        continue;
      }
      const double c = weight(i) / d;
      l_sum += c;
      t_num = t_num + c * points[i];
      r_vec = r_vec + c * (points[i] - x);
    }
    if (l_sum == 0.0) {  // every point coincides with x
      res.converged = true;
      break;
    }
    WindVector xnext;
    if (eta > 0.0) {
      const double r_norm = speed(r_vec);
      if (r_norm <= eta) {  // optimality condition at an anchor point
        res.converged = true;
        break;
      }
      const WindVector t = (1.0 / l_sum) * t_num;
      const double shrink = eta / r_norm;
      xnext = (1.0 - shrink) * t + shrink * x;
    } else {
      xnext = (1.0 / l_sum) * t_num;
    }
    const double step = distance(x, xnext);
    x = xnext;
    if (step < step_tol) {
      res.converged = true;
      break;
    }
  }
  res.point = x;
  return res;
}

double bivariate_abs_error(const BivariateNormalParams& f, WindVector y) {
  validate(f);
  return distance(f.mean(), y);
}

double bivariate_abs_error(const std::vector<WindVector>& members, WindVector y) {
  return distance(spatial_median(members).point, y);
}

int multivariate_rank(const std::vector<WindVector>& members, WindVector y,
                      std::mt19937_64& rng) {
  const std::size_t m = members.size();
  if (m < 1) throw Error(ErrorCode::DegenerateEnsemble, "empty ensemble");
  std::vector<WindVector> pooled = members;
  pooled.push_back(y);
  const std::size_t n = pooled.size();
  std::vector<int> prerank(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (pooled[j].u <= pooled[i].u && pooled[j].v <= pooled[i].v) ++prerank[i];
    }
  }
  const int obs_prerank = prerank[n - 1];
  int below = 0, ties = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (prerank[i] < obs_prerank) ++below;
    if (prerank[i] == obs_prerank) ++ties;
  }
  std::uniform_int_distribution<int> pick(1, ties);
  return below + pick(rng);
}

int multivariate_rank(const std::vector<WindVector>& members, WindVector y,
                      std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return multivariate_rank(members, y, rng);
}

RankHistogram rank_histogram_density(
    const std::vector<std::pair<BivariateNormalParams, WindVector>>& cases,
    std::uint64_t rng_seed, std::size_t sample_m) {
  if (sample_m < 1) throw Error(ErrorCode::InvalidParameter, "sample size must be >= 1");
  RankHistogram h;
  h.counts.assign(sample_m + 1, 0);
  std::mt19937_64 rng(rng_seed);
  std::vector<WindVector> members(sample_m);
  for (const auto& [params, obs] : cases) {
    for (std::size_t i = 0; i < sample_m; ++i) members[i] = sample_one(params, rng);
    const int rank = multivariate_rank(members, obs, rng);
    ++h.counts[static_cast<std::size_t>(rank - 1)];
  }
  return h;
}

RankHistogram rank_histogram_discrete(
    const std::vector<std::pair<std::vector<WindVector>, WindVector>>& cases,
    std::uint64_t rng_seed) {
  RankHistogram h;
  if (cases.empty()) return h;
  const std::size_t m = cases.front().first.size();
  const bool binned = m == 35;  // 36 ranks -> nine groups of four
  h.counts.assign(binned ? 9 : m + 1, 0);
  std::mt19937_64 rng(rng_seed);
  for (const auto& [members, obs] : cases) {
    if (members.size() != m) {
      throw Error(ErrorCode::DatasetShape, "mixed ensemble sizes in rank histogram");
    }
    const int rank = multivariate_rank(members, obs, rng);
    const std::size_t bin = binned ? static_cast<std::size_t>((rank - 1) / 4)
                                   : static_cast<std::size_t>(rank - 1);
    ++h.counts[bin];
  }
  return h;
}

double reliability_index(const RankHistogram& h) {
  if (h.counts.empty()) throw Error(ErrorCode::InvalidParameter, "empty histogram");
  const double b = static_cast<double>(h.counts.size());
  double delta = 0.0;
  for (double f : h.frequencies()) delta += std::abs(f - 1.0 / b);
  return delta;
}

double chi_square_uniformity_pvalue(const RankHistogram& h) {
  if (h.counts.size() < 2 || h.total() == 0) {
    throw Error(ErrorCode::InvalidParameter, "histogram too small for a uniformity test");
  }
  const double expected = static_cast<double>(h.total()) / static_cast<double>(h.counts.size());
  double x2 = 0.0;
  for (auto c : h.counts) {
    const double d = static_cast<double>(c) - expected;
    x2 += d * d / expected;
  }
  boost::math::chi_squared_distribution<double> dist(static_cast<double>(h.counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, x2));
}

std::vector<double> randomize_zero_speeds(const std::vector<double>& speeds,
                                          std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, kZeroSpeedUpper);
  std::vector<double> out = speeds;
  for (double& s : out) {
    if (s < 0.0) throw Error(ErrorCode::InvalidParameter, "negative speed");
    if (s == 0.0) s = kZeroSpeedUpper - unif(rng);  // lands in (0, 1.03]
  }
  return out;
}

std::vector<double> randomize_zero_speeds(const std::vector<double>& speeds,
                                          std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return randomize_zero_speeds(speeds, rng);
}

double sample_median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::InsufficientData, "median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<MarginalCalibrationRow> marginal_calibration_data(
    const std::vector<ForecastCase>& cases, const std::vector<BivariateNormalParams>& densities,
    std::uint64_t rng_seed) {
  if (cases.size() != densities.size()) {
    throw Error(ErrorCode::DatasetShape, "case and density counts differ");
  }
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> jitter(-kObsJitterHalfWidth, kObsJitterHalfWidth);
  std::vector<MarginalCalibrationRow> rows;
  rows.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    if (!c.observation) {
      throw Error(ErrorCode::InvalidParameter, "marginal calibration needs observations");
    }
    if (c.ensemble.members.empty()) {
      throw Error(ErrorCode::DegenerateEnsemble, "empty raw ensemble");
    }
    MarginalCalibrationRow row;
    row.station_id = c.station_id;
    row.valid_time = c.valid_time;
    row.obs_perturbed = *c.observation + WindVector{jitter(rng), jitter(rng)};
    std::uniform_int_distribution<std::size_t> pick(0, c.ensemble.members.size() - 1);
    row.raw_member = c.ensemble.members[pick(rng)];
    row.density_sample = sample_one(densities[i], rng);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace windemos
