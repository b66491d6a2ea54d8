#include "windemos/predict.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>

#include "optim.hpp"

namespace windemos {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kVarFloor = 1e-12;
constexpr double kScale2Floor = 1e-4;  // (m/s)^2

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

BivariateNormalParams emos_density(const EmosParameters& p, const EnsembleForecast& e,
                                   std::optional<double> sector1_empirical) {
  const EnsembleStats st = ensemble_stats(e);
  const WindVector mu = mean_forecast(p.means, e, st);
  BivariateNormalParams out;
  out.mu_u = mu.u;
  out.mu_v = mu.v;
  out.var_u = std::max(p.vars.c_u + p.vars.d_u * st.s2_u, kVarFloor);
  out.var_v = std::max(p.vars.c_v + p.vars.d_v * st.s2_v, kVarFloor);
  out.rho = correlation_for_mean(p.corr, st.mean(), sector1_empirical);
  return out;
}

DensityForecast make_forecast(const EmosParameters& p, const ForecastCase& c,
                              std::optional<double> sector1_empirical) {
  DensityForecast f;
  f.params = emos_density(p, c.ensemble, sector1_empirical);
  f.scope = p.scope;
  f.station_id = c.station_id;
  f.valid_time = c.valid_time;
  f.zero_mean_direction = speed(ensemble_stats(c.ensemble).mean()) == 0.0;
  return f;
}

std::vector<double> speed_ensemble(const BivariateNormalParams& p, std::size_t n,
                                   std::mt19937_64& rng) {
  validate(p);
  std::vector<double> speeds;
  speeds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) speeds.push_back(speed(sample_one(p, rng)));
  return speeds;
}

std::vector<double> speed_ensemble(const BivariateNormalParams& p, std::size_t n,
                                   std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return speed_ensemble(p, n, rng);
}

double truncnorm_cdf(const TruncatedNormal& tn, double x) {
  if (!(tn.scale > 0.0)) throw Error(ErrorCode::InvalidParameter, "truncnorm scale must be > 0");
  if (x <= 0.0) return 0.0;
  const double lambda = tn.location / tn.scale;
  const double c = norm_cdf(lambda);
  if (c < 1e-300) throw Error(ErrorCode::InvalidParameter, "truncation removes all mass");
  return (norm_cdf((x - tn.location) / tn.scale) - (1.0 - c)) / c;
}

double truncnorm_median(const TruncatedNormal& tn) {
  if (!(tn.scale > 0.0)) throw Error(ErrorCode::InvalidParameter, "truncnorm scale must be > 0");
  const double lambda = tn.location / tn.scale;
  const double c = norm_cdf(lambda);
  if (c < 1e-300) throw Error(ErrorCode::InvalidParameter, "truncation removes all mass");
  boost::math::normal_distribution<double> gauss;
  return tn.location + tn.scale * boost::math::quantile(gauss, 1.0 - 0.5 * c);
}

double truncnorm_crps(const TruncatedNormal& tn, double y) {
  if (!(tn.scale > 0.0)) throw Error(ErrorCode::InvalidParameter, "truncnorm scale must be > 0");
  const double lambda = tn.location / tn.scale;
  const double c = norm_cdf(lambda);
  if (c < 1e-12) throw Error(ErrorCode::InvalidParameter, "truncation removes nearly all mass");
  // Observations below the support contribute their distance to the cutoff.
  const double y_in = std::max(y, 0.0);
  const double z = (y_in - tn.location) / tn.scale;
  const double value =
      tn.scale * (z / c * (2.0 * norm_cdf(z) + c - 2.0) + 2.0 * norm_pdf(z) / c -
                  norm_cdf(std::sqrt(2.0) * lambda) / (c * c * std::sqrt(kPi)));
  return value + (y_in - y);
}

SpeedStats member_speed_stats(const EnsembleForecast& e) {
  const std::size_t m = e.members.size();
  if (m < 2) throw Error(ErrorCode::DegenerateEnsemble, "ensemble needs at least 2 members");
  SpeedStats st;
  for (const auto& w : e.members) st.mean += speed(w);
  st.mean /= static_cast<double>(m);
  for (const auto& w : e.members) {
    const double d = speed(w) - st.mean;
    st.var += d * d;
  }
  st.var /= static_cast<double>(m);
  return st;
}

TruncatedNormal speed_emos_forecast(const SpeedEmosCoeffs& sc, const EnsembleForecast& e) {
  const SpeedStats st = member_speed_stats(e);
  TruncatedNormal tn;
  tn.location = sc.a + sc.b * st.mean;
  tn.scale = std::sqrt(std::max(sc.c + sc.d * st.var, kScale2Floor));
  return tn;
}

SpeedEmosCoeffs fit_speed_emos(const TrainingWindow& w, const SpeedEmosCoeffs& init) {
  if (w.cases.empty()) throw Error(ErrorCode::InsufficientData, "empty training window");
  struct CaseSpeeds {
    double mean, var, obs;
  };
  std::vector<CaseSpeeds> cases;
  cases.reserve(w.cases.size());
  for (const auto& c : w.cases) {
    if (!c.observation) {
      throw Error(ErrorCode::InvalidParameter, "training case without observation");
    }
    const SpeedStats st = member_speed_stats(c.ensemble);
    cases.push_back({st.mean, st.var, speed(*c.observation)});
  }

  auto mean_crps = [&](double a, double b, double c, double d) {
    double total = 0.0;
    for (const auto& cs : cases) {
      TruncatedNormal tn;
      tn.location = a + b * cs.mean;
      tn.scale = std::sqrt(std::max(c + d * cs.var, kScale2Floor));
      try {
        total += truncnorm_crps(tn, cs.obs);
      } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
      }
    }
    return total / static_cast<double>(cases.size());
  };

  auto objective = [&](const std::vector<double>& x) {
    return mean_crps(x[0], x[1], x[2] * x[2], x[3] * x[3]);
  };
  SpeedEmosCoeffs start = init;
  if (start.c < 0 || start.d < 0) {
    throw Error(ErrorCode::InvalidParameter, "negative initial variance coefficients");
  }
  std::vector<double> x0 = {start.a, start.b, std::sqrt(start.c), std::sqrt(start.d)};
  if (!std::isfinite(objective(x0))) x0 = {0.0, 1.0, 1.0, 1.0};
  const detail::MinimizeResult res = detail::minimize_bfgs(objective, x0);

  SpeedEmosCoeffs out;
  out.a = res.x[0];
  out.b = res.x[1];
  out.c = res.x[2] * res.x[2];
  out.d = res.x[3] * res.x[3];
  out.converged = res.converged;
  if (!(objective(res.x) <= objective(x0))) {
    out = start;
    out.converged = false;
  }
  return out;
}

}  // namespace windemos
