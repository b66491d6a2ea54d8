#include "windemos/simulate.hpp"

#include <cmath>
#include <random>

#include "windemos/dataset.hpp"

namespace windemos {

namespace {

WindVector discretize_to_knots(WindVector w) {
  const double spd = speed(w);
  const double knots = spd / kKnotInMs;
  if (knots < 2.0) return {0.0, 0.0};  // below two knots recorded as zero
  const double snapped = std::round(knots) * kKnotInMs;
  const double f = snapped / spd;
  return {w.u * f, w.v * f};
}

}  // namespace

std::vector<ForecastCase> simulate_dataset(const GeneratorSpec& spec) {
  if (spec.n_stations < 1 || spec.n_days < 1 || spec.ensemble_size < 2) {
    throw Error(ErrorCode::InvalidParameter, "generator needs stations, days and m >= 2");
  }
  if (!(spec.spread_lo > 0.0) || spec.spread_hi < spec.spread_lo) {
    throw Error(ErrorCode::InvalidParameter, "bad spread range");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> spread(spec.spread_lo, spec.spread_hi);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // Per-station biases make stations distinguishable for Local fits.
  std::vector<WindVector> station_bias(spec.n_stations);
  for (auto& b : station_bias) b = {0.5 * gauss(rng), 0.5 * gauss(rng)};

  const std::int64_t day0 = utc_day(spec.start);
  std::vector<ForecastCase> out;
  out.reserve(static_cast<std::size_t>(spec.n_stations) * spec.n_days);
  for (int day = 0; day < spec.n_days; ++day) {
    for (int st = 0; st < spec.n_stations; ++st) {
      ForecastCase c;
      char name[16];
      std::snprintf(name, sizeof(name), "S%03d", st);
      c.station_id = name;
      c.valid_time = day_start(day0 + day);

      const WindVector latent{station_bias[st].u + spec.mean_sd * gauss(rng),
                              station_bias[st].v + spec.mean_sd * gauss(rng)};
      const double sd = spread(rng);
      // Member scatter carries the same direction-dependent correlation as
      // the observation errors, so the raw ensemble's rank structure is
      // informative the way a real flow-dependent ensemble's is.
      const double member_rho = correlation_for_mean(spec.corr, latent);
      const BivariateNormalParams scatter{0.0, 0.0, sd * sd, sd * sd, member_rho};
      for (int i = 0; i < spec.ensemble_size; ++i) {
        const WindVector d = sample_one(scatter, rng);
        c.ensemble.members.push_back({latent.u + d.u, latent.v + d.v});
        c.ensemble.member_ids.push_back("m" + std::to_string(i + 1));
      }

      const EnsembleStats s = ensemble_stats(c.ensemble);
      BivariateNormalParams p;
      p.mu_u = spec.a_u + spec.b_u * s.u_bar;
      p.mu_v = spec.a_v + spec.b_v * s.v_bar;
      p.var_u = std::max(spec.c_u + spec.d_u * s.s2_u, 1e-12);
      p.var_v = std::max(spec.c_v + spec.d_v * s.s2_v, 1e-12);
      p.rho = correlation_for_mean(spec.corr, s.mean());
      WindVector obs = sample_one(p, rng);
      if (spec.discretize_obs) obs = discretize_to_knots(obs);
      c.observation = obs;

      const bool drop = spec.missing_rate > 0.0 && unif(rng) < spec.missing_rate;
      if (!drop) out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace windemos
