#include "windemos/sectors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

namespace windemos {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = 2.0 * kPi / 360.0;

struct FitPoint {
  double theta = 0.0;  // sector center direction, degrees
  double corr = 0.0;
  double weight = 0.0;  // normalized
  int sector = 0;
};

double model_value(double r, double s, double phi, int k, double theta) {
  return r * std::cos(kDegToRad * (k * theta + phi)) + s;
}

double weighted_rss(const std::vector<FitPoint>& pts, double r, double s, double phi, int k) {
  double rss = 0.0;
  for (const auto& p : pts) {
    const double e = p.corr - model_value(r, s, phi, k, p.theta);
    rss += p.weight * e * e;
  }
  return rss;
}

struct LmResult {
  double r = 0.0, s = 0.0, phi = 0.0;
  double rss = 0.0;
  bool converged = false;
};

// Levenberg-Marquardt over (r, s, phi) at fixed k. `fit_phi_only` freezes
// (r, s) for the post-projection polish.
LmResult lm_fit(const std::vector<FitPoint>& pts, int k, double r0, double s0, double phi0,
                bool fit_phi_only = false) {
  double r = r0, s = s0, phi = phi0;
  double lambda = 1e-3;
  double rss = weighted_rss(pts, r, s, phi, k);
  bool converged = false;
  const int max_iters = 200;
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jte = Eigen::Vector3d::Zero();
    for (const auto& p : pts) {
      const double g = kDegToRad * (k * p.theta + phi);
      const double e = p.corr - (r * std::cos(g) + s);
      Eigen::Vector3d j(-std::cos(g), -1.0, r * std::sin(g) * kDegToRad);
      if (fit_phi_only) {
        j(0) = 0.0;
        j(1) = 0.0;
      }
      jtj += p.weight * j * j.transpose();
      jte += p.weight * j * e;
    }
    bool stepped = false;
    for (int inner = 0; inner < 40; ++inner) {
      Eigen::Matrix3d a = jtj;
      for (int i = 0; i < 3; ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      const Eigen::Vector3d delta = a.ldlt().solve(-jte);
      const double rn = r + delta(0), sn = s + delta(1), phin = phi + delta(2);
      const double rss_new = weighted_rss(pts, rn, sn, phin, k);
      if (rss_new <= rss) {
        const double step = delta.norm();
        const double drop = rss - rss_new;
        r = rn;
        s = sn;
        phi = phin;
        rss = rss_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (step < 1e-12 || drop < 1e-16) converged = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e12) break;
    }
    if (!stepped) {
      converged = true;  // no descent direction left at this scale
      break;
    }
    if (converged) break;
  }
  return {r, s, phi, rss, converged};
}

double normalize_phi(double phi) {
  phi = std::fmod(phi, 360.0);
  if (phi <= -180.0) phi += 360.0;
  if (phi > 180.0) phi -= 360.0;
  return phi;
}

}  // namespace

int assign_sector(WindVector w) {
  if (speed(w) <= kLowWindSpeed) return kLowWindSector;
  // Pointing azimuth, clockwise from north, mapped into (0, 360].
  double alpha = std::atan2(w.u, w.v) * 180.0 / kPi;
  if (alpha <= 0.0) alpha += 360.0;
  int idx = static_cast<int>(std::ceil(alpha / 45.0));
  idx = std::clamp(idx, 1, 8);
  return idx + 1;
}

double sector_center_direction(int sector) {
  if (sector < 2 || sector > 9) {
    throw Error(ErrorCode::InvalidParameter, "sector center defined for sectors 2..9 only");
  }
  const double pointing_mid = (sector - 2) * 45.0 + 22.5;
  return std::fmod(pointing_mid + 180.0, 360.0);
}

std::vector<SectorStats> sector_stats(const std::vector<ForecastCase>& cases) {
  struct Acc {
    std::vector<WindVector> obs;
  };
  std::array<Acc, 10> acc;
  for (const auto& c : cases) {
    if (!c.observation) {
      throw Error(ErrorCode::InvalidParameter,
                  "sector_stats requires an observation for every case");
    }
    const int sec = assign_sector(ensemble_stats(c.ensemble).mean());
    acc[sec].obs.push_back(*c.observation);
  }
  std::vector<SectorStats> out;
  out.reserve(9);
  for (int sec = 1; sec <= 9; ++sec) {
    SectorStats st;
    st.sector = sec;
    st.count = acc[sec].obs.size();
    if (sec != kLowWindSector) st.center_dir = sector_center_direction(sec);
    if (st.count >= 2) {
      double mu = 0, mv = 0;
      for (auto w : acc[sec].obs) {
        mu += w.u;
        mv += w.v;
      }
      mu /= static_cast<double>(st.count);
      mv /= static_cast<double>(st.count);
      double suu = 0, svv = 0, suv = 0;
      for (auto w : acc[sec].obs) {
        suu += (w.u - mu) * (w.u - mu);
        svv += (w.v - mv) * (w.v - mv);
        suv += (w.u - mu) * (w.v - mv);
      }
      const double denom = std::sqrt(suu * svv);
      if (denom > 0.0) st.corr = suv / denom;
    }
    out.push_back(std::move(st));
  }
  return out;
}

double eval_correlation(const CorrelationModel& m, double theta_deg) {
  return m.r * std::cos(kDegToRad * (m.k * theta_deg + m.phi)) + m.s;
}

double correlation_for_mean(const CorrelationModel& m, WindVector ensemble_mean,
                            std::optional<double> sector1_empirical) {
  constexpr double kGuard = 1.0 - 1e-9;
  double rho;
  if (sector1_empirical && assign_sector(ensemble_mean) == kLowWindSector) {
    rho = *sector1_empirical;
  } else {
    const double theta = speed(ensemble_mean) > 0.0 ? wind_direction(ensemble_mean) : 0.0;
    rho = eval_correlation(m, theta);
  }
  return std::clamp(rho, -kGuard, kGuard);
}

CorrelationFit fit_correlation(const std::vector<SectorStats>& stats, int k) {
  if (k < 1 || k > 3) throw Error(ErrorCode::InvalidParameter, "k must be 1, 2 or 3");

  std::vector<FitPoint> pts;
  double weight_sum = 0.0;
  for (const auto& st : stats) {
    if (st.sector == kLowWindSector || !st.corr || !st.center_dir) continue;
    FitPoint p;
    p.theta = *st.center_dir;
    p.corr = *st.corr;
    p.weight = static_cast<double>(st.count);
    p.sector = st.sector;
    pts.push_back(p);
    weight_sum += p.weight;
  }
  if (pts.size() < 3 || weight_sum <= 0.0) {
    throw Error(ErrorCode::InsufficientData,
                "correlation fit needs at least 3 sectors with defined correlation");
  }
  for (auto& p : pts) p.weight /= weight_sum;

  double cmin = pts[0].corr, cmax = pts[0].corr, cmean = 0.0;
  for (const auto& p : pts) {
    cmin = std::min(cmin, p.corr);
    cmax = std::max(cmax, p.corr);
    cmean += p.weight * p.corr;
  }
  const double r0 = 0.5 * (cmax - cmin);
  const double s0 = cmean;

  // The cosine phase creates local minima; multistart over the phase.
  LmResult best;
  bool have_best = false;
  for (double phi0 : {0.0, 90.0, 180.0, 270.0}) {
    LmResult res = lm_fit(pts, k, r0, s0, phi0);
    if (!have_best || res.rss < best.rss ||
        (res.rss == best.rss && res.converged && !best.converged)) {
      best = res;
      have_best = true;
    }
  }

  if (std::abs(best.r) + std::abs(best.s) > 1.0) {
    const double scale = 1.0 / (std::abs(best.r) + std::abs(best.s));
    best.r *= scale;
    best.s *= scale;
    LmResult polished = lm_fit(pts, k, best.r, best.s, best.phi, /*fit_phi_only=*/true);
    best.phi = polished.phi;
    best.rss = polished.rss;
    best.converged = best.converged && polished.converged;
  }

  CorrelationFit fit;
  fit.model.k = k;
  fit.model.r = best.r;
  fit.model.s = best.s;
  fit.model.phi = best.phi;
  fit.converged = best.converged;
  if (fit.model.r < 0.0) {
    fit.model.r = -fit.model.r;
    fit.model.phi += 180.0;
  }
  fit.model.phi = normalize_phi(fit.model.phi);
  if (std::abs(fit.model.r) < 1e-10) {
    fit.phi_identified = false;
    fit.model.phi = 0.0;
  }
  fit.weighted_rss = weighted_rss(pts, fit.model.r, fit.model.s, fit.model.phi, k);
  for (const auto& p : pts) {
    SectorResidual res;
    res.sector = p.sector;
    res.center_dir = p.theta;
    res.corr = p.corr;
    res.weight = p.weight;
    res.residual = p.corr - eval_correlation(fit.model, p.theta);
    fit.residuals.push_back(res);
  }
  if (!fit.converged) {
    throw CorrelationFitError("correlation fit did not converge", fit);
  }
  return fit;
}

}  // namespace windemos
