#include "windemos/core.hpp"

#include <cmath>
#include <cstdio>

namespace windemos {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRhoGuard = 1.0 - 1e-9;

// Civil calendar <-> day count, valid across the proleptic Gregorian range.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

UtcTime parse_iso8601(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  int n = std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &mo, &d, &h, &mi, &s);
  if (n != 6) {
    n = std::sscanf(text.c_str(), "%d-%d-%d", &y, &mo, &d);
    if (n != 3) throw Error(ErrorCode::MalformedInput, "bad timestamp: " + text);
    h = mi = s = 0;
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
      s < 0 || s > 60) {
    throw Error(ErrorCode::MalformedInput, "bad timestamp: " + text);
  }
  const std::int64_t day = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return UtcTime{day * 86400 + h * 3600 + mi * 60 + s};
}

std::string format_iso8601(UtcTime t) {
  const std::int64_t day = utc_day(t);
  const std::int64_t sod = t.seconds - day * 86400;
  int y = 0;
  unsigned mo = 0, d = 0;
  civil_from_days(day, y, mo, d);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, mo, d,
                static_cast<long long>(sod / 3600), static_cast<long long>((sod / 60) % 60),
                static_cast<long long>(sod % 60));
  return buf;
}

std::int64_t utc_day(UtcTime t) {
  std::int64_t d = t.seconds / 86400;
  if (t.seconds < 0 && t.seconds % 86400 != 0) --d;
  return d;
}

UtcTime day_start(std::int64_t day) { return UtcTime{day * 86400}; }

void validate(const BivariateNormalParams& p) {
  if (!(std::isfinite(p.mu_u) && std::isfinite(p.mu_v) && std::isfinite(p.var_u) &&
        std::isfinite(p.var_v) && std::isfinite(p.rho))) {
    throw Error(ErrorCode::InvalidParameter, "non-finite density parameters");
  }
  if (!(p.var_u > 0.0) || !(p.var_v > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "nonpositive variance");
  }
  if (std::abs(p.rho) > kRhoGuard) {
    throw Error(ErrorCode::InvalidParameter, "correlation too close to +-1");
  }
}

EnsembleStats ensemble_stats(const EnsembleForecast& e) {
  const std::size_t m = e.members.size();
  if (m < 2) {
    throw Error(ErrorCode::DegenerateEnsemble, "ensemble needs at least 2 members");
  }
  EnsembleStats st;
  for (const WindVector& w : e.members) {
    st.u_bar += w.u;
    st.v_bar += w.v;
  }
  st.u_bar /= static_cast<double>(m);
  st.v_bar /= static_cast<double>(m);
  for (const WindVector& w : e.members) {
    st.s2_u += (w.u - st.u_bar) * (w.u - st.u_bar);
    st.s2_v += (w.v - st.v_bar) * (w.v - st.v_bar);
  }
  st.s2_u /= static_cast<double>(m);
  st.s2_v /= static_cast<double>(m);
  return st;
}

double wind_direction(WindVector w) {
  if (w.u == 0.0 && w.v == 0.0) {
    throw Error(ErrorCode::UndefinedDirection, "zero wind vector has no direction");
  }
  // "From" direction: the vector points where the wind blows to, so flip it.
  double deg = std::atan2(-w.u, -w.v) * 180.0 / kPi;
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg -= 360.0;
  return deg;
}

double log_density(const BivariateNormalParams& p, WindVector w) {
  validate(p);
  const double su = std::sqrt(p.var_u);
  const double sv = std::sqrt(p.var_v);
  const double zu = (w.u - p.mu_u) / su;
  const double zv = (w.v - p.mu_v) / sv;
  const double one_minus_r2 = 1.0 - p.rho * p.rho;
  const double quad = (zu * zu - 2.0 * p.rho * zu * zv + zv * zv) / one_minus_r2;
  return -std::log(2.0 * kPi * su * sv * std::sqrt(one_minus_r2)) - 0.5 * quad;
}

double density(const BivariateNormalParams& p, WindVector w) {
  return std::exp(log_density(p, w));
}

WindVector sample_one(const BivariateNormalParams& p, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double z1 = gauss(rng);
  const double z2 = gauss(rng);
  const double su = std::sqrt(p.var_u);
  const double sv = std::sqrt(p.var_v);
  return {p.mu_u + su * z1, p.mu_v + sv * (p.rho * z1 + std::sqrt(1.0 - p.rho * p.rho) * z2)};
}

std::vector<WindVector> sample(const BivariateNormalParams& p, std::size_t n,
                               std::uint64_t rng_seed) {
  validate(p);
  if (n < 1) throw Error(ErrorCode::InvalidParameter, "sample size must be >= 1");
  std::mt19937_64 rng(rng_seed);
  std::vector<WindVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(p, rng));
  return out;
}

double chi2_quantile_2dof(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "coverage must be in (0,1)");
  }
  return -2.0 * std::log1p(-p);
}

Ellipse prediction_ellipse(const BivariateNormalParams& p, double coverage) {
  validate(p);
  const double q = chi2_quantile_2dof(coverage);
  // Eigenvalues of the 2x2 covariance matrix, closed form.
  const double cov = p.rho * std::sqrt(p.var_u * p.var_v);
  const double tr = p.var_u + p.var_v;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - (p.var_u * p.var_v - cov * cov)));
  const double lam1 = 0.5 * tr + disc;
  const double lam2 = 0.5 * tr - disc;
  // Eigenvector for lam1; falls back to the axes when the matrix is diagonal.
  double ang;
  if (cov == 0.0) {
    ang = p.var_u >= p.var_v ? 0.0 : 90.0;
  } else {
    ang = std::atan2(lam1 - p.var_u, cov) * 180.0 / kPi;
  }
  if (ang > 90.0) ang -= 180.0;
  if (ang <= -90.0) ang += 180.0;
  Ellipse e;
  e.center = p.mean();
  e.semi_major = std::sqrt(q * lam1);
  e.semi_minor = std::sqrt(q * std::max(0.0, lam2));
  e.orientation_deg = ang;
  return e;
}

}  // namespace windemos
