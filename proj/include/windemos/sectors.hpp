#pragma once

#include <optional>
#include <vector>

#include "windemos/core.hpp"

namespace windemos {

// Nine-sector geometry for ensemble-mean wind vectors. Sector 1 is the disk
// of speeds <= 2 m/s around the origin; sectors 2..9 split the remaining
// plane into 45-degree wedges, assigned clockwise from north over the
// pointing azimuth of the vector, with half-open boundaries (low, high].

constexpr int kLowWindSector = 1;
constexpr double kLowWindSpeed = 2.0;  // m/s

int assign_sector(WindVector w);

/// Meteorological direction of the angular midpoint of sectors 2..9.
double sector_center_direction(int sector);

/// Per-sector conditional statistics of verifying observations.
struct SectorStats {
  int sector = 0;
  std::size_t count = 0;
  std::optional<double> corr;        // undefined when count < 2 or degenerate
  std::optional<double> center_dir;  // sectors 2..9 only
};

/// Groups cases by the sector of the ensemble mean vector and computes the
/// empirical Pearson correlation of observed (u, v) within each sector.
/// Returns exactly nine entries, sectors 1..9 in order.
std::vector<SectorStats> sector_stats(const std::vector<ForecastCase>& cases);

/// rho(theta) = r cos((2 pi / 360)(k theta + phi)) + s.
/// |r| + |s| <= 1 keeps rho in [-1, 1] for every direction.
struct CorrelationModel {
  double r = 0.0;
  double s = 0.0;
  int k = 1;
  double phi = 0.0;  // degrees
};

double eval_correlation(const CorrelationModel& m, double theta_deg);

/// Correlation used for a forecast, given the ensemble mean vector: the model
/// evaluated at the meteorological mean direction, for low-wind (sector 1)
/// means included. theta = 0 by convention for an exactly zero mean vector.
/// When `sector1_empirical` is supplied and the mean falls into sector 1, that
/// empirical value is used instead. The result is clamped into the strict
/// validity range of the density, (-1, 1).
double correlation_for_mean(const CorrelationModel& m, WindVector ensemble_mean,
                            std::optional<double> sector1_empirical = {});

struct SectorResidual {
  int sector = 0;
  double center_dir = 0.0;
  double corr = 0.0;
  double weight = 0.0;
  double residual = 0.0;  // corr - rho(center_dir)
};

struct CorrelationFit {
  CorrelationModel model;
  double weighted_rss = 0.0;
  bool converged = false;
  bool phi_identified = true;  // false when r ~ 0 makes the phase meaningless
  std::vector<SectorResidual> residuals;
};

/// Thrown when the fit exhausts its iteration budget; carries the best
/// iterate so callers can still inspect or reuse it.
class CorrelationFitError : public Error {
 public:
  CorrelationFitError(const std::string& message, CorrelationFit best)
      : Error(ErrorCode::NonConvergence, message), best_(std::move(best)) {}
  const CorrelationFit& best_iterate() const noexcept { return best_; }

 private:
  CorrelationFit best_;
};

/// Weighted nonlinear least squares fit of (r, s, phi) at fixed k, weights
/// proportional to sector counts. Sector 1 and sectors with undefined
/// correlation are skipped. Multistarts the phase to escape cosine local
/// minima; projects onto |r| + |s| <= 1 if the unconstrained optimum violates
/// it. Output is canonical: r >= 0 and phi in (-180, 180].
CorrelationFit fit_correlation(const std::vector<SectorStats>& stats, int k);

}  // namespace windemos
