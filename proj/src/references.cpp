#include "windemos/references.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

namespace windemos {

namespace {

// Ascending ranks (0-based) with ties broken uniformly at random.
std::vector<std::size_t> random_tie_ranks(const std::vector<double>& values,
                                          std::mt19937_64& rng) {
  const std::size_t m = values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::size_t> rank(m);
  for (std::size_t i = 0; i < m; ++i) rank[order[i]] = i;
  return rank;
}

}  // namespace

BivariateNormalParams independent_emos(const EmosParameters& p, const EnsembleForecast& e) {
  BivariateNormalParams out = emos_density(p, e);
  out.rho = 0.0;
  return out;
}

std::vector<WindVector> ecc_recombine(const EnsembleForecast& raw,
                                      const std::vector<double>& sorted_u_samples,
                                      const std::vector<double>& sorted_v_samples,
                                      std::mt19937_64& rng) {
  const std::size_t m = raw.members.size();
  if (sorted_u_samples.size() != m || sorted_v_samples.size() != m) {
    throw Error(ErrorCode::DatasetShape, "sample count must match the raw ensemble size");
  }
  std::vector<double> raw_u(m), raw_v(m);
  for (std::size_t i = 0; i < m; ++i) {
    raw_u[i] = raw.members[i].u;
    raw_v[i] = raw.members[i].v;
  }
  const std::vector<std::size_t> rank_u = random_tie_ranks(raw_u, rng);
  const std::vector<std::size_t> rank_v = random_tie_ranks(raw_v, rng);
  std::vector<WindVector> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = {sorted_u_samples[rank_u[i]], sorted_v_samples[rank_v[i]]};
  }
  return out;
}

std::vector<WindVector> ecc(const EnsembleForecast& raw, const BivariateNormalParams& f_indep,
                            std::uint64_t rng_seed, bool equidistant) {
  std::mt19937_64 rng(rng_seed);
  return ecc(raw, f_indep, rng, equidistant);
}

std::vector<WindVector> ecc(const EnsembleForecast& raw, const BivariateNormalParams& f_indep,
                            std::mt19937_64& rng, bool equidistant) {
  if (f_indep.rho != 0.0) {
    throw Error(ErrorCode::InvalidParameter, "ecc requires an independent (rho = 0) forecast");
  }
  validate(f_indep);
  const std::size_t m = raw.members.size();
  if (m < 1) throw Error(ErrorCode::DegenerateEnsemble, "empty raw ensemble");

  std::vector<double> us(m), vs(m);
  if (equidistant) {
    boost::math::normal_distribution<double> gauss;
    for (std::size_t i = 0; i < m; ++i) {
      const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      const double z = boost::math::quantile(gauss, p);
      us[i] = f_indep.mu_u + std::sqrt(f_indep.var_u) * z;
      vs[i] = f_indep.mu_v + std::sqrt(f_indep.var_v) * z;
    }
  } else {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
      us[i] = f_indep.mu_u + std::sqrt(f_indep.var_u) * gauss(rng);
    }
    for (std::size_t i = 0; i < m; ++i) {
      vs[i] = f_indep.mu_v + std::sqrt(f_indep.var_v) * gauss(rng);
    }
  }
  std::sort(us.begin(), us.end());
  std::sort(vs.begin(), vs.end());
  return ecc_recombine(raw, us, vs, rng);
}

std::vector<WindVector> error_dress(const TrainingWindow& w, const EnsembleForecast& e,
                                    std::size_t count, std::uint64_t rng_seed,
                                    bool most_recent) {
  std::mt19937_64 rng(rng_seed);
  return error_dress(w, e, count, rng, most_recent);
}

std::vector<WindVector> error_dress(const TrainingWindow& w, const EnsembleForecast& e,
                                    std::size_t count, std::mt19937_64& rng,
                                    bool most_recent) {
  if (w.cases.empty()) throw Error(ErrorCode::InsufficientData, "empty training window");
  std::vector<WindVector> errors;
  errors.reserve(w.cases.size());
  for (const auto& c : w.cases) {
    if (!c.observation) continue;
    errors.push_back(*c.observation - ensemble_stats(c.ensemble).mean());
  }
  if (errors.empty()) throw Error(ErrorCode::InsufficientData, "window has no observations");

  std::vector<WindVector> chosen;
  if (errors.size() <= count) {
    chosen = errors;
  } else if (most_recent) {
    chosen.assign(errors.end() - static_cast<std::ptrdiff_t>(count), errors.end());
  } else {
    std::vector<std::size_t> idx(errors.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());  // keep window order
    for (std::size_t i : idx) chosen.push_back(errors[i]);
  }

  const WindVector center = ensemble_stats(e).mean();
  std::vector<WindVector> members;
  members.reserve(chosen.size());
  for (const auto& err : chosen) members.push_back(center + err);
  return members;
}

}  // namespace windemos
