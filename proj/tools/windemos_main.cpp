// windemos: bivariate EMOS postprocessing of ensemble wind-vector forecasts.
//
// Subcommands: simulate, fit-correlation, train, forecast, verify, plot-data.
// Relative input paths are resolved against $WINDEMOS_DATA_DIR when the file
// is not found in the working directory.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "windemos/pipeline.hpp"
#include "windemos/simulate.hpp"

namespace {

using namespace windemos;

std::string resolve_input(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* base = std::getenv("WINDEMOS_DATA_DIR")) {
    const fs::path candidate = fs::path(base) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

std::vector<ForecastCase> load_data(const std::string& path, bool knots, bool require_obs,
                                    bool print_report = false) {
  LoadOptions opts;
  opts.knots_to_ms = knots;
  opts.require_observations = require_obs;
  LoadReport report;
  auto cases = load_dataset(resolve_input(path), opts, &report);
  if (print_report) {
    std::cerr << "loaded " << report.cases_kept << " cases (" << report.rows << " rows; "
              << report.dropped_incomplete << " incomplete, " << report.dropped_missing_obs
              << " without observations dropped)\n";
  }
  return cases;
}

int run(int argc, char** argv) {
  CLI::App app{"Bivariate EMOS postprocessing and verification for ensemble wind vectors"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic forecast/observation dataset");
  GeneratorSpec spec;
  std::string sim_out;
  std::string sim_corr_out;
  std::string sim_start = "2007-01-01";
  sim->add_option("--out", sim_out, "Output dataset CSV")->required();
  sim->add_option("--stations", spec.n_stations, "Number of stations");
  sim->add_option("--days", spec.n_days, "Number of days");
  sim->add_option("--members", spec.ensemble_size, "Ensemble size");
  sim->add_option("--start", sim_start, "First valid date (ISO-8601)");
  sim->add_option("--a-u", spec.a_u, "Mean model intercept, u");
  sim->add_option("--b-u", spec.b_u, "Mean model slope, u");
  sim->add_option("--a-v", spec.a_v, "Mean model intercept, v");
  sim->add_option("--b-v", spec.b_v, "Mean model slope, v");
  sim->add_option("--c-u", spec.c_u, "Variance model intercept, u");
  sim->add_option("--d-u", spec.d_u, "Variance model slope, u");
  sim->add_option("--c-v", spec.c_v, "Variance model intercept, v");
  sim->add_option("--d-v", spec.d_v, "Variance model slope, v");
  sim->add_option("--r", spec.corr.r, "Correlation amplitude");
  sim->add_option("--s", spec.corr.s, "Correlation offset");
  sim->add_option("--k", spec.corr.k, "Correlation periods (1..3)");
  sim->add_option("--phi", spec.corr.phi, "Correlation phase, degrees");
  sim->add_option("--mean-sd", spec.mean_sd, "Latent ensemble-mean scatter");
  sim->add_option("--spread-lo", spec.spread_lo, "Smallest member spread");
  sim->add_option("--spread-hi", spec.spread_hi, "Largest member spread");
  sim->add_option("--missing-rate", spec.missing_rate, "Fraction of cases dropped");
  sim->add_flag("--discretize", spec.discretize_obs,
                "Round observed speeds to whole knots, zero below two");
  sim->add_option("--seed", spec.seed, "RNG seed");
  sim->add_option("--emit-correlation", sim_corr_out,
                  "Also write the generator's correlation model to this file");

  // ---- fit-correlation ----
  auto* fitc = app.add_subcommand("fit-correlation",
                                  "Fit the sector correlation model (phase one)");
  std::string fitc_data, fitc_out;
  bool fitc_knots = false;
  int fitc_force_k = 0;
  fitc->add_option("--data", fitc_data, "Training dataset CSV")->required();
  fitc->add_option("--out", fitc_out, "Output correlation file")->required();
  fitc->add_option("--k", fitc_force_k, "Force the period count instead of selecting by RSS");
  fitc->add_flag("--knots", fitc_knots, "Input wind components are in knots");

  // ---- train ----
  auto* train = app.add_subcommand("train", "Fit EMOS parameters on rolling windows");
  std::string train_data, train_corr, train_out, train_scope = "regional";
  int train_n = -1, train_fallback_n = 30;
  std::size_t train_min_local = 10;
  bool train_general = false, train_knots = false;
  train->add_option("--data", train_data, "Training dataset CSV")->required();
  train->add_option("--correlation", train_corr, "Correlation file from fit-correlation")
      ->required();
  train->add_option("--out", train_out, "Output parameters file")->required();
  train->add_option("--scope", train_scope, "regional or local")
      ->check(CLI::IsMember({"regional", "local"}));
  train->add_option("--n-train", train_n, "Rolling window length in days (30 regional, 40 local)");
  train->add_option("--regional-fallback-n", train_fallback_n,
                    "Window length for the Regional fallback fits");
  train->add_option("--min-local-cases", train_min_local,
                    "Smallest Local window fitted without falling back");
  train->add_flag("--general-means", train_general, "Member-wise mean regression");
  train->add_flag("--knots", train_knots, "Input wind components are in knots");

  // ---- forecast ----
  auto* fc = app.add_subcommand("forecast", "Produce forecasts from trained parameters");
  std::string fc_data, fc_params, fc_corr, fc_out, fc_method = "emos", fc_scope = "regional";
  int fc_n = -1;
  std::uint64_t fc_seed = 0;
  std::size_t fc_dress = 35;
  bool fc_dress_recent = false, fc_equidistant = false, fc_sector1 = false, fc_knots = false;
  fc->add_option("--data", fc_data, "Dataset CSV with the ensembles to postprocess")->required();
  fc->add_option("--out", fc_out, "Output forecast CSV")->required();
  fc->add_option("--method", fc_method, "emos, independent, ecc, error-dress or speed-emos")
      ->check(CLI::IsMember({"emos", "independent", "ecc", "error-dress", "speed-emos"}));
  fc->add_option("--params", fc_params, "Parameters file (emos, independent, ecc)");
  fc->add_option("--scope", fc_scope, "regional or local")
      ->check(CLI::IsMember({"regional", "local"}));
  fc->add_option("--n-train", fc_n,
                 "Rolling window for error-dress/speed-emos (30 regional, 40 local)");
  fc->add_option("--seed", fc_seed, "RNG seed");
  fc->add_option("--dress-count", fc_dress, "Error vectors per dressed forecast");
  fc->add_flag("--dress-most-recent", fc_dress_recent,
               "Take the most recent errors instead of a random subsample");
  fc->add_flag("--ecc-equidistant", fc_equidistant, "Equidistant quantiles instead of draws");
  fc->add_flag("--sector1-empirical", fc_sector1,
               "Use the empirical low-wind correlation from --correlation in sector 1");
  fc->add_option("--correlation", fc_corr, "Correlation file (for --sector1-empirical)");
  fc->add_flag("--knots", fc_knots, "Input wind components are in knots");

  // ---- verify ----
  auto* ver = app.add_subcommand("verify", "Score forecasts against observations");
  std::string ver_data, ver_scores, ver_ranks, ver_marginal, ver_marginal_method = "emos";
  std::vector<std::string> ver_forecasts;
  std::uint64_t ver_seed = 0;
  std::size_t ver_es = 10000, ver_speed_n = 100, ver_rank_m = 8;
  bool ver_no_raw = false, ver_knots = false;
  ver->add_option("--data", ver_data, "Dataset CSV with observations")->required();
  ver->add_option("--forecasts", ver_forecasts, "Forecast CSV files")
      ->required()
      ->expected(-1);
  ver->add_option("--seed", ver_seed, "RNG seed");
  ver->add_option("--es-samples", ver_es, "Monte-Carlo sample size for density energy scores");
  ver->add_option("--speed-ensemble-size", ver_speed_n, "Speed ensemble drawn per density");
  ver->add_option("--rank-sample-m", ver_rank_m, "Members sampled per density for ranks");
  ver->add_flag("--no-raw", ver_no_raw, "Skip the raw-ensemble reference row");
  ver->add_option("--out-scores", ver_scores, "Write the score table as CSV");
  ver->add_option("--out-ranks", ver_ranks, "Write rank histograms as CSV");
  ver->add_option("--out-marginal", ver_marginal, "Write marginal calibration rows as CSV");
  ver->add_option("--marginal-method", ver_marginal_method,
                  "Density method feeding --out-marginal");
  ver->add_flag("--knots", ver_knots, "Input wind components are in knots");

  // ---- plot-data ----
  auto* plot = app.add_subcommand("plot-data", "Emit figure-ready CSV files");
  plot->require_subcommand(1);

  auto* psc = plot->add_subcommand("sector-scatter", "Observations grouped by forecast sector");
  std::string psc_data, psc_out;
  bool psc_knots = false;
  psc->add_option("--data", psc_data, "Dataset CSV")->required();
  psc->add_option("--out", psc_out, "Output CSV")->required();
  psc->add_flag("--knots", psc_knots, "Input wind components are in knots");

  auto* pcc = plot->add_subcommand("corr-curve",
                                   "Sector correlations with the fitted model overlay");
  std::string pcc_data, pcc_corr, pcc_out;
  double pcc_step = 1.0;
  bool pcc_knots = false;
  pcc->add_option("--data", pcc_data, "Dataset CSV")->required();
  pcc->add_option("--correlation", pcc_corr, "Correlation file")->required();
  pcc->add_option("--out", pcc_out, "Output CSV")->required();
  pcc->add_option("--step", pcc_step, "Model curve step in degrees");
  pcc->add_flag("--knots", pcc_knots, "Input wind components are in knots");

  auto* pel = plot->add_subcommand("ellipse", "Prediction ellipse polylines");
  std::string pel_forecasts, pel_out, pel_station, pel_time;
  std::vector<double> pel_coverages = {0.25, 0.5, 0.75, 0.9};
  int pel_points = 361;
  pel->add_option("--forecasts", pel_forecasts, "Density forecast CSV")->required();
  pel->add_option("--out", pel_out, "Output CSV")->required();
  pel->add_option("--coverages", pel_coverages, "Coverage levels")->expected(-1);
  pel->add_option("--points", pel_points, "Points per polyline");
  pel->add_option("--station", pel_station, "Only this station");
  pel->add_option("--time", pel_time, "Only this valid time (ISO-8601)");

  auto* prh = plot->add_subcommand("rank-hist", "Rank histograms for forecast files");
  std::string prh_data, prh_out;
  std::vector<std::string> prh_forecasts;
  std::uint64_t prh_seed = 0;
  bool prh_knots = false, prh_no_raw = false;
  prh->add_option("--data", prh_data, "Dataset CSV with observations")->required();
  prh->add_option("--forecasts", prh_forecasts, "Forecast CSV files")->required()->expected(-1);
  prh->add_option("--out", prh_out, "Output CSV")->required();
  prh->add_option("--seed", prh_seed, "RNG seed");
  prh->add_flag("--no-raw", prh_no_raw, "Skip the raw-ensemble row");
  prh->add_flag("--knots", prh_knots, "Input wind components are in knots");

  auto* pmc = plot->add_subcommand("marg-cal", "Marginal calibration diagram rows");
  std::string pmc_data, pmc_forecasts, pmc_out, pmc_method = "emos";
  std::uint64_t pmc_seed = 0;
  bool pmc_knots = false;
  pmc->add_option("--data", pmc_data, "Dataset CSV with observations")->required();
  pmc->add_option("--forecasts", pmc_forecasts, "Density forecast CSV")->required();
  pmc->add_option("--out", pmc_out, "Output CSV")->required();
  pmc->add_option("--method", pmc_method, "Density method to sample");
  pmc->add_option("--seed", pmc_seed, "RNG seed");
  pmc->add_flag("--knots", pmc_knots, "Input wind components are in knots");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    spec.start = parse_iso8601(sim_start);
    const auto cases = simulate_dataset(spec);
    write_dataset(sim_out, cases);
    if (!sim_corr_out.empty()) {
      CorrelationFile cf;
      cf.model = spec.corr;
      write_correlation_file(sim_corr_out, cf);
    }
    std::cerr << "wrote " << cases.size() << " cases to " << sim_out << "\n";
    return 0;
  }

  if (fitc->parsed()) {
    const auto cases = load_data(fitc_data, fitc_knots, /*require_obs=*/true, true);
    const CorrelationPhase phase = fit_correlation_phase(cases);
    for (const auto& fit : phase.fits) {
      std::cout << "k=" << fit.model.k << " r=" << format_double(fit.model.r)
                << " s=" << format_double(fit.model.s)
                << " phi=" << format_double(fit.model.phi)
                << " weighted_rss=" << format_double(fit.weighted_rss) << "\n";
    }
    const int k = fitc_force_k > 0 ? fitc_force_k : phase.chosen_k;
    std::cout << "chosen k=" << k << "\n";
    write_correlation_file(fitc_out, phase.fits.at(k - 1), phase.sector1_corr);
    return 0;
  }

  if (train->parsed()) {
    const auto cases = load_data(train_data, train_knots, /*require_obs=*/false, true);
    const CorrelationFile corr = load_correlation_file(resolve_input(train_corr));
    TrainConfig cfg;
    cfg.scope = scope_from_string(train_scope);
    cfg.n_train = train_n > 0 ? train_n : (cfg.scope == Scope::Regional ? 30 : 40);
    cfg.regional_fallback_n = train_fallback_n;
    cfg.min_local_cases = train_min_local;
    cfg.general_means = train_general;
    const TrainResult result = train_parameters(cases, corr.model, cfg);
    write_params_file(train_out, result.records);
    std::cerr << "trained " << result.records.size() << " parameter sets ("
              << result.fallbacks << " regional fallbacks, " << result.skipped
              << " skipped)\n";
    return 0;
  }

  if (fc->parsed()) {
    const auto cases = load_data(fc_data, fc_knots, /*require_obs=*/false, true);
    ForecastConfig cfg;
    cfg.method = fc_method;
    cfg.scope = scope_from_string(fc_scope);
    cfg.n_train = fc_n > 0 ? fc_n : (cfg.scope == Scope::Regional ? 30 : 40);
    cfg.seed = fc_seed;
    cfg.dress_count = fc_dress;
    cfg.dress_most_recent = fc_dress_recent;
    cfg.ecc_equidistant = fc_equidistant;
    if (fc_sector1) {
      if (fc_corr.empty()) {
        throw Error(ErrorCode::InvalidParameter, "--sector1-empirical needs --correlation");
      }
      const CorrelationFile corr = load_correlation_file(resolve_input(fc_corr));
      if (!corr.sector1_corr) {
        throw Error(ErrorCode::InvalidParameter,
                    "correlation file has no sector 1 empirical correlation");
      }
      cfg.sector1_empirical = corr.sector1_corr;
    }
    std::vector<ParameterRecord> params;
    const bool needs_params =
        cfg.method == "emos" || cfg.method == "independent" || cfg.method == "ecc";
    if (needs_params) {
      if (fc_params.empty()) {
        throw Error(ErrorCode::InvalidParameter, "--params is required for " + cfg.method);
      }
      params = load_params_file(resolve_input(fc_params));
    }
    const ForecastSet fs = run_forecast(cases, params, cfg);
    write_forecast_csv(fc_out, fs);
    const std::size_t made =
        fs.densities.size() + fs.ensembles.size() + fs.speeds.size();
    std::cerr << "wrote " << made << " forecasts (" << fs.skipped_no_params
              << " cases skipped)\n";
    if (fs.zero_mean_directions > 0) {
      std::cerr << "note: " << fs.zero_mean_directions
                << " zero ensemble-mean vectors used the theta = 0 convention\n";
    }
    return 0;
  }

  if (ver->parsed()) {
    const auto cases = load_data(ver_data, ver_knots, /*require_obs=*/false, true);
    ForecastSet fs;
    for (const auto& path : ver_forecasts) {
      merge_forecasts(fs, load_forecast_csv(resolve_input(path)));
    }
    VerifyConfig cfg;
    cfg.seed = ver_seed;
    cfg.es_samples = ver_es;
    cfg.speed_ensemble_size = ver_speed_n;
    cfg.rank_sample_m = ver_rank_m;
    cfg.include_raw = !ver_no_raw;
    const auto rows = run_verify(cases, fs, cfg);
    std::cout << format_score_table(rows);
    if (!ver_scores.empty()) write_scores_csv(ver_scores, rows);
    if (!ver_ranks.empty()) write_rank_histogram_csv(ver_ranks, rows);
    if (!ver_marginal.empty()) {
      write_marginal_csv(ver_marginal,
                         run_marginal(cases, fs, ver_marginal_method, ver_seed ^ 0x6d617267ull));
    }
    return 0;
  }

  if (psc->parsed()) {
    write_sector_scatter_csv(psc_out, load_data(psc_data, psc_knots, true, false));
    return 0;
  }
  if (pcc->parsed()) {
    const auto cases = load_data(pcc_data, pcc_knots, true, false);
    const CorrelationFile corr = load_correlation_file(resolve_input(pcc_corr));
    write_correlation_curve_csv(pcc_out, sector_stats(cases), corr.model, pcc_step);
    return 0;
  }
  if (pel->parsed()) {
    ForecastSet fs = load_forecast_csv(resolve_input(pel_forecasts));
    if (!pel_station.empty() || !pel_time.empty()) {
      ForecastSet filtered;
      const std::optional<UtcTime> t =
          pel_time.empty() ? std::nullopt : std::optional<UtcTime>(parse_iso8601(pel_time));
      for (const auto& row : fs.densities) {
        if (!pel_station.empty() && row.station_id != pel_station) continue;
        if (t && row.valid_time != *t) continue;
        filtered.densities.push_back(row);
      }
      fs = std::move(filtered);
    }
    write_ellipse_csv(pel_out, fs, pel_coverages, pel_points);
    return 0;
  }
  if (prh->parsed()) {
    const auto cases = load_data(prh_data, prh_knots, false, false);
    ForecastSet fs;
    for (const auto& path : prh_forecasts) {
      merge_forecasts(fs, load_forecast_csv(resolve_input(path)));
    }
    VerifyConfig cfg;
    cfg.seed = prh_seed;
    cfg.include_raw = !prh_no_raw;
    write_rank_histogram_csv(prh_out, run_verify(cases, fs, cfg));
    return 0;
  }
  if (pmc->parsed()) {
    const auto cases = load_data(pmc_data, pmc_knots, false, false);
    const ForecastSet fs = load_forecast_csv(resolve_input(pmc_forecasts));
    write_marginal_csv(pmc_out, run_marginal(cases, fs, pmc_method, pmc_seed));
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const windemos::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
