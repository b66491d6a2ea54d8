#pragma once

#include <optional>
#include <string>
#include <vector>

#include "windemos/core.hpp"
#include "windemos/sectors.hpp"

namespace windemos {

enum class Scope { Regional, Local };

std::string to_string(Scope scope);
Scope scope_from_string(const std::string& text);

/// Mean bias-correction coefficients. The standard form maps the ensemble
/// mean through a + b * mean; when the per-member vectors are non-empty the
/// general form a + sum_i b_i x_i applies instead (non-exchangeable members).
struct MeanCoeffs {
  double a_u = 0.0, b_u = 1.0;
  double a_v = 0.0, b_v = 1.0;
  std::vector<double> b_u_members;
  std::vector<double> b_v_members;
  bool degenerate_u = false;  // constant regressor, intercept-only fallback
  bool degenerate_v = false;

  bool general() const { return !b_u_members.empty(); }
};

/// Mean vector implied by the coefficients for one ensemble.
WindVector mean_forecast(const MeanCoeffs& mc, const EnsembleForecast& e,
                         const EnsembleStats& st);

/// Variance model sigma^2 = c + d * s^2 per component; all coefficients
/// nonnegative.
struct VarCoeffs {
  double c_u = 1.0, d_u = 1.0;
  double c_v = 1.0, d_v = 1.0;
};

struct EmosParameters {
  MeanCoeffs means;
  VarCoeffs vars;
  CorrelationModel corr;
  Scope scope = Scope::Regional;
  std::string station_id;  // empty for Regional
  UtcTime fitted_at;
  bool var_converged = true;
};

/// Rolling training window. Regional windows take all stations' cases from
/// the n calendar days strictly before the issue time; Local windows walk
/// backward over the station's n most recent days with data.
struct TrainingWindow {
  std::vector<ForecastCase> cases;
  int length_days = 0;
  bool shortfall = false;  // Local window found fewer than n days
};

TrainingWindow build_window(const std::vector<ForecastCase>& dataset, UtcTime issue_time,
                            Scope scope, const std::string& station_id, int n_days);

/// Ordinary least squares per component; the general flag switches to the
/// member-wise regression. Falls back to intercept-only on a constant
/// regressor (flagged in the result).
MeanCoeffs fit_means(const TrainingWindow& w, bool general = false);

/// Log likelihood of the variance coefficients over the window, with the mean
/// and correlation models held fixed. Returns -infinity when any case yields
/// a nonpositive variance.
double log_likelihood(const VarCoeffs& vc, const TrainingWindow& w, const MeanCoeffs& means,
                      const CorrelationModel& corr);

struct VarFitResult {
  VarCoeffs coeffs;
  double log_lik = 0.0;
  bool converged = true;
  bool zero_spread_closed_form = false;
};

/// Maximum likelihood over (c_u, d_u, c_v, d_v) >= 0 via square-root
/// reparameterization and a BFGS-style quasi-Newton search with numerical
/// gradients. On optimizer failure, returns the best feasible iterate with
/// converged = false. A window with zero ensemble spread throughout pins
/// d = 0 and solves c in closed form.
VarFitResult fit_variances(const TrainingWindow& w, const MeanCoeffs& means,
                           const CorrelationModel& corr, const VarCoeffs& init);

/// Phases two and three for one issue time: window construction, mean
/// regression, constrained ML variance fit. `warm_start` carries the previous
/// issue date's variance estimates.
EmosParameters fit_emos(const std::vector<ForecastCase>& dataset, UtcTime issue_time,
                        Scope scope, const std::string& station_id, int n_days,
                        const CorrelationModel& corr,
                        const std::optional<VarCoeffs>& warm_start = {},
                        bool general_means = false);

}  // namespace windemos
