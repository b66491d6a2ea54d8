#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace windemos {

enum class ErrorCode {
  DegenerateEnsemble,
  UndefinedDirection,
  InvalidParameter,
  InsufficientData,
  MalformedInput,
  DatasetShape,
  NonConvergence,
  IoFailure,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// UTC timestamp as seconds since the Unix epoch.
struct UtcTime {
  std::int64_t seconds = 0;
  friend auto operator<=>(const UtcTime&, const UtcTime&) = default;
};

/// Parses "YYYY-MM-DDTHH:MM:SSZ" or a bare "YYYY-MM-DD" (taken as 00 UTC).
UtcTime parse_iso8601(const std::string& text);
std::string format_iso8601(UtcTime t);

/// Calendar day index (days since 1970-01-01, floor division).
std::int64_t utc_day(UtcTime t);
UtcTime day_start(std::int64_t day);

/// Surface wind vector: zonal (west-east) u and meridional (south-north) v,
/// in meters per second.
struct WindVector {
  double u = 0.0;
  double v = 0.0;
};

inline WindVector operator+(WindVector a, WindVector b) { return {a.u + b.u, a.v + b.v}; }
inline WindVector operator-(WindVector a, WindVector b) { return {a.u - b.u, a.v - b.v}; }
inline WindVector operator*(double s, WindVector w) { return {s * w.u, s * w.v}; }

inline double speed(WindVector w) { return std::hypot(w.u, w.v); }
inline double distance(WindVector a, WindVector b) { return std::hypot(a.u - b.u, a.v - b.v); }

/// One ensemble forecast: m member wind vectors with stable member labels
/// (members are not exchangeable).
struct EnsembleForecast {
  std::vector<WindVector> members;
  std::vector<std::string> member_ids;  // empty or same length as members

  std::size_t size() const { return members.size(); }
};

/// Componentwise ensemble mean and variance. Variances use divisor m.
struct EnsembleStats {
  double u_bar = 0.0;
  double v_bar = 0.0;
  double s2_u = 0.0;
  double s2_v = 0.0;

  WindVector mean() const { return {u_bar, v_bar}; }
};

/// Parameters of the bivariate normal density forecast.
/// Valid iff var_u > 0, var_v > 0 and |rho| < 1 (strict).
struct BivariateNormalParams {
  double mu_u = 0.0;
  double mu_v = 0.0;
  double var_u = 1.0;
  double var_v = 1.0;
  double rho = 0.0;

  WindVector mean() const { return {mu_u, mu_v}; }
};

/// Joined forecast/observation record; the unit of training and verification.
struct ForecastCase {
  std::string station_id;
  UtcTime valid_time;
  EnsembleForecast ensemble;
  std::optional<WindVector> observation;
};

/// Throws Error(InvalidParameter) unless p satisfies its invariants.
/// |rho| is rejected already above 1 - 1e-9 to keep 1/(1 - rho^2) bounded.
void validate(const BivariateNormalParams& p);

EnsembleStats ensemble_stats(const EnsembleForecast& e);

/// Meteorological wind direction in degrees: the direction the wind blows
/// from, clockwise from north. Throws for the zero vector.
double wind_direction(WindVector w);

double density(const BivariateNormalParams& p, WindVector w);
double log_density(const BivariateNormalParams& p, WindVector w);

WindVector sample_one(const BivariateNormalParams& p, std::mt19937_64& rng);
std::vector<WindVector> sample(const BivariateNormalParams& p, std::size_t n,
                               std::uint64_t rng_seed);

/// Level set of the density enclosing probability mass `coverage`.
/// orientation_deg is the angle of the major axis from the u axis,
/// counterclockwise, in (-90, 90].
struct Ellipse {
  WindVector center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation_deg = 0.0;
};

Ellipse prediction_ellipse(const BivariateNormalParams& p, double coverage);

/// Chi-square(2 dof) quantile, -2 log(1 - p).
double chi2_quantile_2dof(double p);

}  // namespace windemos
