#include "windemos/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "optim.hpp"

namespace windemos {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-case quantities that stay fixed while the variance coefficients move.
struct LikCase {
  double u = 0, v = 0;
  double mu_u = 0, mu_v = 0;
  double s2_u = 0, s2_v = 0;
  double rho = 0;
};

std::vector<LikCase> build_lik_cases(const TrainingWindow& w, const MeanCoeffs& means,
                                     const CorrelationModel& corr) {
  std::vector<LikCase> out;
  out.reserve(w.cases.size());
  for (const auto& c : w.cases) {
    if (!c.observation) {
      throw Error(ErrorCode::InvalidParameter, "training case without observation");
    }
    const EnsembleStats st = ensemble_stats(c.ensemble);
    const WindVector mu = mean_forecast(means, c.ensemble, st);
    LikCase lc;
    lc.u = c.observation->u;
    lc.v = c.observation->v;
    lc.mu_u = mu.u;
    lc.mu_v = mu.v;
    lc.s2_u = st.s2_u;
    lc.s2_v = st.s2_v;
    lc.rho = correlation_for_mean(corr, st.mean());
    out.push_back(lc);
  }
  return out;
}

double log_likelihood_cases(const VarCoeffs& vc, const std::vector<LikCase>& cases) {
  double ll = 0.0;
  for (const auto& c : cases) {
    const double var_u = vc.c_u + vc.d_u * c.s2_u;
    const double var_v = vc.c_v + vc.d_v * c.s2_v;
    if (!(var_u > 0.0) || !(var_v > 0.0)) return kNegInf;
    if (std::abs(c.rho) >= 1.0) return kNegInf;
    const double su = std::sqrt(var_u);
    const double sv = std::sqrt(var_v);
    const double zu = (c.u - c.mu_u) / su;
    const double zv = (c.v - c.mu_v) / sv;
    const double omr2 = 1.0 - c.rho * c.rho;
    ll += -std::log(2.0 * kPi * su * sv * std::sqrt(omr2)) -
          0.5 * (zu * zu - 2.0 * c.rho * zu * zv + zv * zv) / omr2;
  }
  return ll;
}

struct SimpleOls {
  double a = 0, b = 0;
  bool degenerate = false;
};

SimpleOls ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double xm = 0, ym = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= n;
  ym /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  SimpleOls r;
  if (sxx <= n * 1e-14 * std::max(1.0, xm * xm)) {
    r.a = ym;
    r.b = 0.0;
    r.degenerate = true;
  } else {
    r.b = sxy / sxx;
    r.a = ym - r.b * xm;
  }
  return r;
}

}  // namespace

std::string to_string(Scope scope) {
  return scope == Scope::Regional ? "regional" : "local";
}

Scope scope_from_string(const std::string& text) {
  if (text == "regional") return Scope::Regional;
  if (text == "local") return Scope::Local;
  throw Error(ErrorCode::InvalidParameter, "unknown scope: " + text);
}

WindVector mean_forecast(const MeanCoeffs& mc, const EnsembleForecast& e,
                         const EnsembleStats& st) {
  if (!mc.general()) return {mc.a_u + mc.b_u * st.u_bar, mc.a_v + mc.b_v * st.v_bar};
  if (mc.b_u_members.size() != e.members.size() || mc.b_v_members.size() != e.members.size()) {
    throw Error(ErrorCode::DatasetShape, "member coefficient count does not match ensemble");
  }
  double mu = mc.a_u, mv = mc.a_v;
  for (std::size_t i = 0; i < e.members.size(); ++i) {
    mu += mc.b_u_members[i] * e.members[i].u;
    mv += mc.b_v_members[i] * e.members[i].v;
  }
  return {mu, mv};
}

TrainingWindow build_window(const std::vector<ForecastCase>& dataset, UtcTime issue_time,
                            Scope scope, const std::string& station_id, int n_days) {
  if (n_days < 1) throw Error(ErrorCode::InvalidParameter, "window length must be >= 1 day");
  const std::int64_t issue_day = utc_day(issue_time);

  TrainingWindow w;
  w.length_days = n_days;
  if (scope == Scope::Regional) {
    for (const auto& c : dataset) {
      if (!c.observation) continue;
      const std::int64_t d = utc_day(c.valid_time);
      if (d >= issue_day - n_days && d < issue_day) w.cases.push_back(c);
    }
  } else {
    // Collect the station's cases by day, then keep the n most recent days
    // that actually have data.
    std::map<std::int64_t, std::vector<const ForecastCase*>> by_day;
    for (const auto& c : dataset) {
      if (c.station_id != station_id || !c.observation) continue;
      const std::int64_t d = utc_day(c.valid_time);
      if (d < issue_day) by_day[d].push_back(&c);
    }
    int taken = 0;
    for (auto it = by_day.rbegin(); it != by_day.rend() && taken < n_days; ++it, ++taken) {
      for (const ForecastCase* c : it->second) w.cases.push_back(*c);
    }
    w.shortfall = taken < n_days;
    std::sort(w.cases.begin(), w.cases.end(),
              [](const ForecastCase& a, const ForecastCase& b) {
                return a.valid_time < b.valid_time;
              });
  }
  if (w.cases.empty()) {
    throw Error(ErrorCode::InsufficientData,
                "empty training window before " + format_iso8601(issue_time));
  }
  return w;
}

MeanCoeffs fit_means(const TrainingWindow& w, bool general) {
  if (w.cases.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "mean regression needs at least 2 cases");
  }
  MeanCoeffs mc;
  const std::size_t n = w.cases.size();

  if (general) {
    const std::size_t m = w.cases.front().ensemble.size();
    if (n > m + 1) {
      Eigen::MatrixXd design(n, m + 1);
      Eigen::VectorXd yu(n), yv(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = w.cases[i];
        if (c.ensemble.size() != m) {
          throw Error(ErrorCode::DatasetShape, "inconsistent ensemble size in window");
        }
        design(i, 0) = 1.0;
        for (std::size_t j = 0; j < m; ++j) design(i, j + 1) = c.ensemble.members[j].u;
        yu(i) = c.observation->u;
        yv(i) = c.observation->v;
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_u(design);
      if (qr_u.rank() == static_cast<Eigen::Index>(m + 1)) {
        const Eigen::VectorXd bu = qr_u.solve(yu);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            design(i, j + 1) = w.cases[i].ensemble.members[j].v;
          }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_v(design);
        if (qr_v.rank() == static_cast<Eigen::Index>(m + 1)) {
          const Eigen::VectorXd bv = qr_v.solve(yv);
          mc.a_u = bu(0);
          mc.a_v = bv(0);
          mc.b_u_members.assign(bu.data() + 1, bu.data() + 1 + m);
          mc.b_v_members.assign(bv.data() + 1, bv.data() + 1 + m);
          return mc;
        }
      }
    }
    // Rank-deficient or too-small design: drop to the standard form.
  }

  std::vector<double> ub(n), vb(n), ou(n), ov(n);
  for (std::size_t i = 0; i < n; ++i) {
    const EnsembleStats st = ensemble_stats(w.cases[i].ensemble);
    ub[i] = st.u_bar;
    vb[i] = st.v_bar;
    ou[i] = w.cases[i].observation->u;
    ov[i] = w.cases[i].observation->v;
  }
  const SimpleOls ru = ols(ub, ou);
  const SimpleOls rv = ols(vb, ov);
  mc.a_u = ru.a;
  mc.b_u = ru.b;
  mc.degenerate_u = ru.degenerate;
  mc.a_v = rv.a;
  mc.b_v = rv.b;
  mc.degenerate_v = rv.degenerate;
  return mc;
}

double log_likelihood(const VarCoeffs& vc, const TrainingWindow& w, const MeanCoeffs& means,
                      const CorrelationModel& corr) {
  return log_likelihood_cases(vc, build_lik_cases(w, means, corr));
}

VarFitResult fit_variances(const TrainingWindow& w, const MeanCoeffs& means,
                           const CorrelationModel& corr, const VarCoeffs& init) {
  const std::vector<LikCase> cases = build_lik_cases(w, means, corr);
  if (cases.empty()) throw Error(ErrorCode::InsufficientData, "empty training window");

  bool all_zero_spread = true;
  for (const auto& c : cases) {
    if (c.s2_u > 0.0 || c.s2_v > 0.0) {
      all_zero_spread = false;
      break;
    }
  }
  if (all_zero_spread) {
    // d is unidentifiable here; pin it and take the residual-variance MLE for c.
    double cu = 0, cv = 0;
    for (const auto& c : cases) {
      cu += (c.u - c.mu_u) * (c.u - c.mu_u);
      cv += (c.v - c.mu_v) * (c.v - c.mu_v);
    }
    VarFitResult r;
    r.coeffs = {cu / static_cast<double>(cases.size()), 0.0,
                cv / static_cast<double>(cases.size()), 0.0};
    r.log_lik = log_likelihood_cases(r.coeffs, cases);
    r.zero_spread_closed_form = true;
    return r;
  }

  VarCoeffs start = init;
  if (start.c_u < 0 || start.d_u < 0 || start.c_v < 0 || start.d_v < 0) {
    throw Error(ErrorCode::InvalidParameter, "negative initial variance coefficients");
  }
  if (!std::isfinite(log_likelihood_cases(start, cases))) {
    // A warm start can be infeasible on a new window (e.g. c ~ 0 meeting a
    // zero-spread case); nudge the additive terms before giving up on it.
    start.c_u = std::max(start.c_u, 1e-4);
    start.c_v = std::max(start.c_v, 1e-4);
    if (!std::isfinite(log_likelihood_cases(start, cases))) start = VarCoeffs{1, 1, 1, 1};
  }

  const double scale = 1.0 / static_cast<double>(cases.size());
  auto objective = [&](const std::vector<double>& z) {
    const VarCoeffs vc{z[0] * z[0], z[1] * z[1], z[2] * z[2], z[3] * z[3]};
    const double ll = log_likelihood_cases(vc, cases);
    return std::isfinite(ll) ? -ll * scale : std::numeric_limits<double>::infinity();
  };
  const std::vector<double> z0 = {std::sqrt(start.c_u), std::sqrt(start.d_u),
                                  std::sqrt(start.c_v), std::sqrt(start.d_v)};
  const detail::MinimizeResult res = detail::minimize_bfgs(objective, z0);

  VarFitResult r;
  r.coeffs = {res.x[0] * res.x[0], res.x[1] * res.x[1], res.x[2] * res.x[2],
              res.x[3] * res.x[3]};
  r.log_lik = log_likelihood_cases(r.coeffs, cases);
  r.converged = res.converged;
  if (r.log_lik < log_likelihood_cases(start, cases)) {
    r.coeffs = start;
    r.log_lik = log_likelihood_cases(start, cases);
    r.converged = false;
  }
  return r;
}

EmosParameters fit_emos(const std::vector<ForecastCase>& dataset, UtcTime issue_time,
                        Scope scope, const std::string& station_id, int n_days,
                        const CorrelationModel& corr,
                        const std::optional<VarCoeffs>& warm_start, bool general_means) {
  auto context = [&](const char* what) {
    return "fit_emos(" + to_string(scope) +
           (station_id.empty() ? std::string() : "," + station_id) + "@" +
           format_iso8601(issue_time) + "): " + what;
  };
  try {
    const TrainingWindow w = build_window(dataset, issue_time, scope, station_id, n_days);
    EmosParameters p;
    p.scope = scope;
    p.station_id = scope == Scope::Local ? station_id : "";
    p.fitted_at = issue_time;
    p.corr = corr;
    p.means = fit_means(w, general_means);
    const VarFitResult vr = fit_variances(w, p.means, corr, warm_start.value_or(VarCoeffs{}));
    p.vars = vr.coeffs;
    p.var_converged = vr.converged;
    return p;
  } catch (const Error& e) {
    throw Error(e.code(), context(e.what()));
  }
}

}  // namespace windemos
