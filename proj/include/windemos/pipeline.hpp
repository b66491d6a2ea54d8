#pragma once

#include <optional>
#include <string>
#include <vector>

#include "windemos/core.hpp"
#include "windemos/dataset.hpp"
#include "windemos/estimation.hpp"
#include "windemos/params_io.hpp"
#include "windemos/predict.hpp"
#include "windemos/references.hpp"
#include "windemos/sectors.hpp"
#include "windemos/verify.hpp"

// End-to-end drivers behind the CLI subcommands: phase-one correlation
// fitting, rolling-window training with warm starts and the Local fallback
// policy, forecast generation for every method, and score aggregation.

namespace windemos {

struct CorrelationPhase {
  std::vector<SectorStats> stats;
  std::vector<CorrelationFit> fits;  // k = 1, 2, 3 in order
  int chosen_k = 1;                  // lowest weighted RSS
  std::optional<double> sector1_corr;
};

CorrelationPhase fit_correlation_phase(const std::vector<ForecastCase>& cases);

struct TrainConfig {
  Scope scope = Scope::Regional;
  int n_train = 30;
  int regional_fallback_n = 30;  // window length for the Regional fallback fits
  std::size_t min_local_cases = 10;
  bool general_means = false;
};

struct TrainResult {
  std::vector<ParameterRecord> records;
  std::size_t fallbacks = 0;  // Local records substituted by Regional fits
  std::size_t skipped = 0;    // fits abandoned for lack of data
};

/// Fits one parameter set per issue date (Regional) or per date and station
/// (Local), warm starting each chain from the previous date's estimates.
/// Local windows that come up short with fewer than `min_local_cases` cases
/// fall back to that date's Regional parameters.
TrainResult train_parameters(const std::vector<ForecastCase>& dataset,
                             const CorrelationModel& corr, const TrainConfig& cfg);

struct DensityRow {
  std::string method;
  std::string station_id;
  UtcTime valid_time;
  BivariateNormalParams params;
};

struct EnsembleRow {
  std::string method;
  std::string station_id;
  UtcTime valid_time;
  std::vector<WindVector> members;
};

struct SpeedRow {
  std::string method;
  std::string station_id;
  UtcTime valid_time;
  TruncatedNormal tn;
};

struct ForecastSet {
  std::vector<DensityRow> densities;
  std::vector<EnsembleRow> ensembles;
  std::vector<SpeedRow> speeds;
  std::size_t skipped_no_params = 0;
  std::size_t zero_mean_directions = 0;  // cases handled by the theta = 0 convention
};

struct ForecastConfig {
  std::string method = "emos";  // emos | independent | ecc | error-dress | speed-emos
  Scope scope = Scope::Regional;
  int n_train = 30;  // rolling window for error-dress and speed-emos
  std::uint64_t seed = 0;
  std::size_t dress_count = 35;
  bool dress_most_recent = false;
  bool ecc_equidistant = false;
  std::optional<double> sector1_empirical;
};

ForecastSet run_forecast(const std::vector<ForecastCase>& dataset,
                         const std::vector<ParameterRecord>& params, const ForecastConfig& cfg);

void write_forecast_csv(const std::string& path, const ForecastSet& fs);
ForecastSet load_forecast_csv(const std::string& path);
void merge_forecasts(ForecastSet& into, ForecastSet more);

struct VerifyConfig {
  std::uint64_t seed = 0;
  std::size_t es_samples = 10000;        // density energy-score sample size
  std::size_t speed_ensemble_size = 100;  // density-derived speed ensembles
  std::size_t rank_sample_m = 8;          // density rank-histogram sample
  bool include_raw = true;
};

struct MethodVerification {
  ScoreSummary summary;
  RankHistogram histogram;
};

/// Scores every method present in `forecasts` against the dataset
/// observations (plus the raw ensemble itself). Wind-speed scores use
/// zero-randomized observed speeds shared across methods.
std::vector<MethodVerification> run_verify(const std::vector<ForecastCase>& dataset,
                                           const ForecastSet& forecasts,
                                           const VerifyConfig& cfg);

std::string format_score_table(const std::vector<MethodVerification>& rows);
void write_scores_csv(const std::string& path, const std::vector<MethodVerification>& rows);
void write_rank_histogram_csv(const std::string& path,
                              const std::vector<MethodVerification>& rows);
void write_marginal_csv(const std::string& path,
                        const std::vector<MarginalCalibrationRow>& rows);

/// Marginal calibration rows for one density method in the forecast set.
std::vector<MarginalCalibrationRow> run_marginal(const std::vector<ForecastCase>& dataset,
                                                 const ForecastSet& forecasts,
                                                 const std::string& method, std::uint64_t seed);

// Figure-ready plot data.
void write_sector_scatter_csv(const std::string& path, const std::vector<ForecastCase>& cases);
void write_correlation_curve_csv(const std::string& path, const std::vector<SectorStats>& stats,
                                 const CorrelationModel& model, double step_deg = 1.0);
std::vector<WindVector> ellipse_polyline(const BivariateNormalParams& p, double coverage,
                                         int points = 361);
void write_ellipse_csv(const std::string& path, const ForecastSet& forecasts,
                       const std::vector<double>& coverages, int points = 361);

}  // namespace windemos
