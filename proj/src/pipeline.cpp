#include "windemos/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace windemos {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<const ForecastCase*> sorted_cases(const std::vector<ForecastCase>& dataset,
                                              bool require_obs) {
  std::vector<const ForecastCase*> out;
  out.reserve(dataset.size());
  for (const auto& c : dataset) {
    if (require_obs && !c.observation) continue;
    out.push_back(&c);
  }
  std::stable_sort(out.begin(), out.end(), [](const ForecastCase* a, const ForecastCase* b) {
    if (a->valid_time != b->valid_time) return a->valid_time < b->valid_time;
    return a->station_id < b->station_id;
  });
  return out;
}

std::vector<std::int64_t> distinct_days(const std::vector<ForecastCase>& dataset) {
  std::set<std::int64_t> days;
  for (const auto& c : dataset) days.insert(utc_day(c.valid_time));
  return {days.begin(), days.end()};
}

using ParamKey = std::pair<std::int64_t, std::string>;  // (day, station or "")

std::map<ParamKey, const ParameterRecord*> index_params(
    const std::vector<ParameterRecord>& params) {
  std::map<ParamKey, const ParameterRecord*> idx;
  for (const auto& rec : params) {
    idx[{utc_day(rec.params.fitted_at), rec.params.station_id}] = &rec;
  }
  return idx;
}

}  // namespace

CorrelationPhase fit_correlation_phase(const std::vector<ForecastCase>& cases) {
  CorrelationPhase phase;
  phase.stats = sector_stats(cases);
  phase.sector1_corr = phase.stats.front().corr;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 3; ++k) {
    CorrelationFit fit = fit_correlation(phase.stats, k);
    if (fit.weighted_rss < best_rss) {
      best_rss = fit.weighted_rss;
      phase.chosen_k = k;
    }
    phase.fits.push_back(std::move(fit));
  }
  return phase;
}

TrainResult train_parameters(const std::vector<ForecastCase>& dataset,
                             const CorrelationModel& corr, const TrainConfig& cfg) {
  TrainResult result;
  const std::vector<std::int64_t> days = distinct_days(dataset);

  auto fit_one = [&](std::int64_t day, Scope scope, const std::string& station, int n,
                     std::optional<VarCoeffs>& warm) -> std::optional<ParameterRecord> {
    TrainingWindow w;
    try {
      w = build_window(dataset, day_start(day), scope, station, n);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (scope == Scope::Local && w.shortfall && w.cases.size() < cfg.min_local_cases) {
      return std::nullopt;
    }
    if (w.cases.size() < 2) return std::nullopt;
    ParameterRecord rec;
    rec.params.scope = scope;
    rec.params.station_id = scope == Scope::Local ? station : "";
    rec.params.fitted_at = day_start(day);
    rec.params.corr = corr;
    rec.params.means = fit_means(w, cfg.general_means);
    const VarFitResult vr =
        fit_variances(w, rec.params.means, corr, warm.value_or(VarCoeffs{1, 1, 1, 1}));
    rec.params.vars = vr.coeffs;
    rec.params.var_converged = vr.converged;
    warm = vr.coeffs;
    return rec;
  };

  if (cfg.scope == Scope::Regional) {
    std::optional<VarCoeffs> warm;
    for (std::int64_t day : days) {
      auto rec = fit_one(day, Scope::Regional, "", cfg.n_train, warm);
      if (rec) {
        result.records.push_back(std::move(*rec));
      } else {
        ++result.skipped;
      }
    }
    return result;
  }

  // Local: Regional fits first, they double as the shortfall fallback.
  std::map<std::int64_t, ParameterRecord> regional;
  {
    std::optional<VarCoeffs> warm;
    for (std::int64_t day : days) {
      auto rec = fit_one(day, Scope::Regional, "", cfg.regional_fallback_n, warm);
      if (rec) regional.emplace(day, std::move(*rec));
    }
  }
  std::set<std::string> stations;
  for (const auto& c : dataset) stations.insert(c.station_id);
  for (const auto& station : stations) {
    std::optional<VarCoeffs> warm;
    for (std::int64_t day : days) {
      auto rec = fit_one(day, Scope::Local, station, cfg.n_train, warm);
      if (rec) {
        result.records.push_back(std::move(*rec));
        continue;
      }
      const auto fb = regional.find(day);
      if (fb != regional.end()) {
        ParameterRecord fallback = fb->second;
        fallback.params.scope = Scope::Local;
        fallback.params.station_id = station;
        fallback.fallback_regional = true;
        result.records.push_back(std::move(fallback));
        ++result.fallbacks;
      } else {
        ++result.skipped;
      }
    }
  }
  return result;
}

ForecastSet run_forecast(const std::vector<ForecastCase>& dataset,
                         const std::vector<ParameterRecord>& params,
                         const ForecastConfig& cfg) {
  const bool needs_params =
      cfg.method == "emos" || cfg.method == "independent" || cfg.method == "ecc";
  const bool needs_window = cfg.method == "error-dress" || cfg.method == "speed-emos";
  if (!needs_params && !needs_window) {
    throw Error(ErrorCode::InvalidParameter, "unknown method: " + cfg.method);
  }

  const auto idx = index_params(params);
  const auto cases = sorted_cases(dataset, /*require_obs=*/false);
  std::mt19937_64 rng(cfg.seed);

  ForecastSet out;
  std::map<ParamKey, TrainingWindow> window_cache;
  std::map<std::string, SpeedEmosCoeffs> speed_warm;
  std::map<ParamKey, SpeedEmosCoeffs> speed_fits;

  auto window_for = [&](const ForecastCase& c) -> const TrainingWindow* {
    const std::string key = cfg.scope == Scope::Local ? c.station_id : "";
    const ParamKey wk{utc_day(c.valid_time), key};
    auto it = window_cache.find(wk);
    if (it == window_cache.end()) {
      try {
        it = window_cache
                 .emplace(wk, build_window(dataset, c.valid_time, cfg.scope, key, cfg.n_train))
                 .first;
      } catch (const Error&) {
        return nullptr;
      }
    }
    return &it->second;
  };

  for (const ForecastCase* c : cases) {
    if (needs_params) {
      const ParamKey key{utc_day(c->valid_time),
                         cfg.scope == Scope::Local ? c->station_id : ""};
      const auto it = idx.find(key);
      if (it == idx.end()) {
        ++out.skipped_no_params;
        continue;
      }
      const EmosParameters& p = it->second->params;
      if (cfg.method == "emos") {
        const DensityForecast f = make_forecast(p, *c, cfg.sector1_empirical);
        if (f.zero_mean_direction) ++out.zero_mean_directions;
        out.densities.push_back({cfg.method, c->station_id, c->valid_time, f.params});
      } else if (cfg.method == "independent") {
        out.densities.push_back(
            {cfg.method, c->station_id, c->valid_time, independent_emos(p, c->ensemble)});
      } else {  // ecc
        const BivariateNormalParams indep = independent_emos(p, c->ensemble);
        out.ensembles.push_back({cfg.method, c->station_id, c->valid_time,
                                 ecc(c->ensemble, indep, rng, cfg.ecc_equidistant)});
      }
      continue;
    }

    const TrainingWindow* w = window_for(*c);
    if (w == nullptr) {
      ++out.skipped_no_params;
      continue;
    }
    if (cfg.method == "error-dress") {
      out.ensembles.push_back(
          {cfg.method, c->station_id, c->valid_time,
           error_dress(*w, c->ensemble, cfg.dress_count, rng, cfg.dress_most_recent)});
    } else {  // speed-emos: one fit per (day, key), warm started along the chain
      const std::string key = cfg.scope == Scope::Local ? c->station_id : "";
      const ParamKey fk{utc_day(c->valid_time), key};
      auto it = speed_fits.find(fk);
      if (it == speed_fits.end()) {
        const auto warm_it = speed_warm.find(key);
        const SpeedEmosCoeffs init =
            warm_it != speed_warm.end() ? warm_it->second : SpeedEmosCoeffs{};
        const SpeedEmosCoeffs fit = fit_speed_emos(*w, init);
        it = speed_fits.emplace(fk, fit).first;
        speed_warm[key] = fit;
      }
      out.speeds.push_back(
          {cfg.method, c->station_id, c->valid_time, speed_emos_forecast(it->second, c->ensemble)});
    }
  }
  return out;
}

namespace {

const char* kDensityHeader = "method,station_id,valid_time,mu_u,mu_v,var_u,var_v,rho";
const char* kEnsembleHeader = "method,station_id,valid_time,member_index,u,v";
const char* kSpeedHeader = "method,station_id,valid_time,location,scale";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  out.push_back(field);
  return out;
}

}  // namespace

void write_forecast_csv(const std::string& path, const ForecastSet& fs) {
  const int kinds = (fs.densities.empty() ? 0 : 1) + (fs.ensembles.empty() ? 0 : 1) +
                    (fs.speeds.empty() ? 0 : 1);
  if (kinds > 1) {
    throw Error(ErrorCode::InvalidParameter,
                "a forecast file holds one representation; write methods separately");
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  if (!fs.ensembles.empty()) {
    out << kEnsembleHeader << "\n";
    for (const auto& row : fs.ensembles) {
      for (std::size_t i = 0; i < row.members.size(); ++i) {
        out << row.method << ',' << row.station_id << ',' << format_iso8601(row.valid_time)
            << ',' << i + 1 << ',' << format_double(row.members[i].u) << ','
            << format_double(row.members[i].v) << "\n";
      }
    }
  } else if (!fs.speeds.empty()) {
    out << kSpeedHeader << "\n";
    for (const auto& row : fs.speeds) {
      out << row.method << ',' << row.station_id << ',' << format_iso8601(row.valid_time) << ','
          << format_double(row.tn.location) << ',' << format_double(row.tn.scale) << "\n";
    }
  } else {
    out << kDensityHeader << "\n";
    for (const auto& row : fs.densities) {
      out << row.method << ',' << row.station_id << ',' << format_iso8601(row.valid_time) << ','
          << format_double(row.params.mu_u) << ',' << format_double(row.params.mu_v) << ','
          << format_double(row.params.var_u) << ',' << format_double(row.params.var_v) << ','
          << format_double(row.params.rho) << "\n";
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

ForecastSet load_forecast_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::MalformedInput, "empty file: " + path);
  if (!header.empty() && header.back() == '\r') header.pop_back();

  ForecastSet fs;
  std::string line;
  std::size_t line_no = 1;
  auto fail = [&](const std::string& what) -> Error {
    return Error(ErrorCode::MalformedInput, path + ":" + std::to_string(line_no) + ": " + what);
  };
  if (header == kDensityHeader) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split(line);
      if (f.size() != 8) throw fail("expected 8 fields");
      DensityRow row;
      row.method = f[0];
      row.station_id = f[1];
      row.valid_time = parse_iso8601(f[2]);
      row.params = {parse_double(f[3]), parse_double(f[4]), parse_double(f[5]),
                    parse_double(f[6]), parse_double(f[7])};
      fs.densities.push_back(std::move(row));
    }
  } else if (header == kEnsembleHeader) {
    std::map<std::tuple<std::string, std::string, std::int64_t>, std::size_t> index;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split(line);
      if (f.size() != 6) throw fail("expected 6 fields");
      const auto key = std::make_tuple(f[0], f[1], parse_iso8601(f[2]).seconds);
      auto it = index.find(key);
      if (it == index.end()) {
        EnsembleRow row;
        row.method = f[0];
        row.station_id = f[1];
        row.valid_time = UtcTime{std::get<2>(key)};
        fs.ensembles.push_back(std::move(row));
        it = index.emplace(key, fs.ensembles.size() - 1).first;
      }
      auto& members = fs.ensembles[it->second].members;
      if (parse_double(f[3]) != static_cast<double>(members.size() + 1)) {
        throw fail("member_index out of order");
      }
      members.push_back({parse_double(f[4]), parse_double(f[5])});
    }
  } else if (header == kSpeedHeader) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split(line);
      if (f.size() != 5) throw fail("expected 5 fields");
      SpeedRow row;
      row.method = f[0];
      row.station_id = f[1];
      row.valid_time = parse_iso8601(f[2]);
      row.tn = {parse_double(f[3]), parse_double(f[4])};
      fs.speeds.push_back(std::move(row));
    }
  } else {
    throw Error(ErrorCode::MalformedInput, path + ": unrecognized forecast header");
  }
  return fs;
}

void merge_forecasts(ForecastSet& into, ForecastSet more) {
  into.densities.insert(into.densities.end(), more.densities.begin(), more.densities.end());
  into.ensembles.insert(into.ensembles.end(), more.ensembles.begin(), more.ensembles.end());
  into.speeds.insert(into.speeds.end(), more.speeds.begin(), more.speeds.end());
  into.skipped_no_params += more.skipped_no_params;
  into.zero_mean_directions += more.zero_mean_directions;
}

namespace {

struct ObsIndex {
  std::map<ParamKey, const ForecastCase*> by_key;

  explicit ObsIndex(const std::vector<ForecastCase>& dataset) {
    for (const auto& c : dataset) {
      if (c.observation) by_key[{c.valid_time.seconds, c.station_id}] = &c;
    }
  }
  const ForecastCase* find(const std::string& station, UtcTime t) const {
    const auto it = by_key.find({t.seconds, station});
    return it == by_key.end() ? nullptr : it->second;
  }
};

template <typename Row>
std::vector<const Row*> method_rows(const std::vector<Row>& rows, const std::string& method) {
  std::vector<const Row*> out;
  for (const auto& r : rows) {
    if (r.method == method) out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(), [](const Row* a, const Row* b) {
    if (a->valid_time != b->valid_time) return a->valid_time < b->valid_time;
    return a->station_id < b->station_id;
  });
  return out;
}

}  // namespace

std::vector<MethodVerification> run_verify(const std::vector<ForecastCase>& dataset,
                                           const ForecastSet& forecasts,
                                           const VerifyConfig& cfg) {
  const ObsIndex obs_index(dataset);

  // One zero-speed randomization per observation, shared by every method.
  std::map<ParamKey, double> eval_speed;
  {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> unif(0.0, kZeroSpeedUpper);
    for (const ForecastCase* c : sorted_cases(dataset, /*require_obs=*/true)) {
      double s = speed(*c->observation);
      if (s == 0.0) s = kZeroSpeedUpper - unif(rng);
      eval_speed[{c->valid_time.seconds, c->station_id}] = s;
    }
  }
  auto obs_speed = [&](const ForecastCase& c) {
    return eval_speed.at({c.valid_time.seconds, c.station_id});
  };

  std::vector<std::string> methods;
  for (const auto& r : forecasts.densities) methods.push_back(r.method);
  for (const auto& r : forecasts.ensembles) methods.push_back(r.method);
  for (const auto& r : forecasts.speeds) methods.push_back(r.method);
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  if (cfg.include_raw && !dataset.empty()) methods.insert(methods.begin(), "raw");

  std::vector<MethodVerification> out;
  for (const std::string& method : methods) {
    std::mt19937_64 rng(cfg.seed ^ fnv1a(method));
    MethodVerification mv;
    mv.summary.method = method;
    MeanAccumulator es, bmae, crps, mae;
    std::vector<std::pair<std::vector<WindVector>, WindVector>> discrete_cases;
    std::vector<WindVector> density_sample(cfg.rank_sample_m);
    RankHistogram density_hist;
    density_hist.counts.assign(cfg.rank_sample_m + 1, 0);
    bool any_density = false;

    if (method == "raw") {
      for (const ForecastCase* c : sorted_cases(dataset, /*require_obs=*/true)) {
        const WindVector y = *c->observation;
        es.add(energy_score_ensemble(c->ensemble.members, y));
        bmae.add(bivariate_abs_error(c->ensemble.members, y));
        std::vector<double> speeds;
        speeds.reserve(c->ensemble.members.size());
        for (const auto& w : c->ensemble.members) speeds.push_back(speed(w));
        crps.add(crps_ensemble(speeds, obs_speed(*c)));
        mae.add(std::abs(sample_median(speeds) - obs_speed(*c)));
        discrete_cases.push_back({c->ensemble.members, y});
      }
    } else {
      for (const DensityRow* row : method_rows(forecasts.densities, method)) {
        const ForecastCase* c = obs_index.find(row->station_id, row->valid_time);
        if (!c) continue;
        const WindVector y = *c->observation;
        any_density = true;
        es.add(energy_score_density(row->params, y, cfg.es_samples, rng));
        bmae.add(bivariate_abs_error(row->params, y));
        for (std::size_t i = 0; i < cfg.rank_sample_m; ++i) {
          density_sample[i] = sample_one(row->params, rng);
        }
        ++density_hist.counts[static_cast<std::size_t>(
            multivariate_rank(density_sample, y, rng) - 1)];
        const std::vector<double> speeds =
            speed_ensemble(row->params, cfg.speed_ensemble_size, rng);
        crps.add(crps_ensemble(speeds, obs_speed(*c)));
        mae.add(std::abs(sample_median(speeds) - obs_speed(*c)));
      }
      for (const EnsembleRow* row : method_rows(forecasts.ensembles, method)) {
        const ForecastCase* c = obs_index.find(row->station_id, row->valid_time);
        if (!c) continue;
        const WindVector y = *c->observation;
        es.add(energy_score_ensemble(row->members, y));
        bmae.add(bivariate_abs_error(row->members, y));
        std::vector<double> speeds;
        speeds.reserve(row->members.size());
        for (const auto& w : row->members) speeds.push_back(speed(w));
        crps.add(crps_ensemble(speeds, obs_speed(*c)));
        mae.add(std::abs(sample_median(speeds) - obs_speed(*c)));
        discrete_cases.push_back({row->members, y});
      }
      for (const SpeedRow* row : method_rows(forecasts.speeds, method)) {
        const ForecastCase* c = obs_index.find(row->station_id, row->valid_time);
        if (!c) continue;
        crps.add(truncnorm_crps(row->tn, obs_speed(*c)));
        mae.add(std::abs(truncnorm_median(row->tn) - obs_speed(*c)));
      }
    }

    if (!discrete_cases.empty()) {
      // Short training windows can leave a few dressed forecasts with fewer
      // members; rank the dominant ensemble size only.
      std::map<std::size_t, std::size_t> size_counts;
      for (const auto& [members, y] : discrete_cases) ++size_counts[members.size()];
      std::size_t modal = 0, modal_count = 0;
      for (const auto& [size, count] : size_counts) {
        if (count > modal_count) {
          modal = size;
          modal_count = count;
        }
      }
      std::vector<std::pair<std::vector<WindVector>, WindVector>> modal_cases;
      for (auto& dc : discrete_cases) {
        if (dc.first.size() == modal) modal_cases.push_back(std::move(dc));
      }
      mv.histogram = rank_histogram_discrete(modal_cases, cfg.seed ^ fnv1a(method + "#rank"));
    } else if (any_density) {
      mv.histogram = density_hist;
    }

    mv.summary.n_cases = std::max(es.n, crps.n);
    mv.summary.has_vector_scores = es.n > 0;
    mv.summary.has_speed_scores = crps.n > 0;
    mv.summary.mean_es = es.n ? es.mean() : std::numeric_limits<double>::quiet_NaN();
    mv.summary.bmae = bmae.n ? bmae.mean() : std::numeric_limits<double>::quiet_NaN();
    mv.summary.crps = crps.n ? crps.mean() : std::numeric_limits<double>::quiet_NaN();
    mv.summary.mae = mae.n ? mae.mean() : std::numeric_limits<double>::quiet_NaN();
    if (!mv.histogram.counts.empty() && mv.histogram.total() > 0) {
      mv.summary.delta = reliability_index(mv.histogram);
      mv.summary.uniformity_p = chi_square_uniformity_pvalue(mv.histogram);
    } else {
      mv.summary.delta = std::numeric_limits<double>::quiet_NaN();
      mv.summary.uniformity_p = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(mv));
  }
  return out;
}

namespace {

std::string fixed2(double x) {
  if (std::isnan(x)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

std::string fixed3(double x) {
  if (std::isnan(x)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

std::string csv_or_empty(double x) { return std::isnan(x) ? "" : format_double(x); }

}  // namespace

std::string format_score_table(const std::vector<MethodVerification>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %8s %8s %8s %8s %8s %8s %8s\n", "method", "n", "ES",
                "bMAE", "Delta", "p-unif", "CRPS", "MAE");
  out << line;
  for (const auto& mv : rows) {
    const auto& s = mv.summary;
    std::snprintf(line, sizeof(line), "%-16s %8zu %8s %8s %8s %8s %8s %8s\n", s.method.c_str(),
                  s.n_cases, fixed2(s.mean_es).c_str(), fixed2(s.bmae).c_str(),
                  fixed2(s.delta).c_str(), fixed3(s.uniformity_p).c_str(),
                  fixed2(s.crps).c_str(), fixed2(s.mae).c_str());
    out << line;
  }
  return out.str();
}

void write_scores_csv(const std::string& path, const std::vector<MethodVerification>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << "method,n_cases,mean_es,bmae,delta,uniformity_p,crps,mae\n";
  for (const auto& mv : rows) {
    const auto& s = mv.summary;
    out << s.method << ',' << s.n_cases << ',' << csv_or_empty(s.mean_es) << ','
        << csv_or_empty(s.bmae) << ',' << csv_or_empty(s.delta) << ','
        << csv_or_empty(s.uniformity_p) << ',' << csv_or_empty(s.crps) << ','
        << csv_or_empty(s.mae) << "\n";
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

void write_rank_histogram_csv(const std::string& path,
                              const std::vector<MethodVerification>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << "method,rank,count,frequency\n";
  for (const auto& mv : rows) {
    if (mv.histogram.counts.empty()) continue;
    const auto freqs = mv.histogram.frequencies();
    for (std::size_t i = 0; i < mv.histogram.counts.size(); ++i) {
      out << mv.summary.method << ',' << i + 1 << ',' << mv.histogram.counts[i] << ','
          << format_double(freqs[i]) << "\n";
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

void write_marginal_csv(const std::string& path,
                        const std::vector<MarginalCalibrationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << "station_id,valid_time,obs_u,obs_v,raw_u,raw_v,sample_u,sample_v\n";
  for (const auto& r : rows) {
    out << r.station_id << ',' << format_iso8601(r.valid_time) << ','
        << format_double(r.obs_perturbed.u) << ',' << format_double(r.obs_perturbed.v) << ','
        << format_double(r.raw_member.u) << ',' << format_double(r.raw_member.v) << ','
        << format_double(r.density_sample.u) << ',' << format_double(r.density_sample.v) << "\n";
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

std::vector<MarginalCalibrationRow> run_marginal(const std::vector<ForecastCase>& dataset,
                                                 const ForecastSet& forecasts,
                                                 const std::string& method, std::uint64_t seed) {
  const ObsIndex obs_index(dataset);
  std::vector<ForecastCase> cases;
  std::vector<BivariateNormalParams> densities;
  for (const DensityRow* row : method_rows(forecasts.densities, method)) {
    const ForecastCase* c = obs_index.find(row->station_id, row->valid_time);
    if (!c) continue;
    cases.push_back(*c);
    densities.push_back(row->params);
  }
  if (cases.empty()) {
    throw Error(ErrorCode::InsufficientData, "no density forecasts for method " + method);
  }
  return marginal_calibration_data(cases, densities, seed);
}

void write_sector_scatter_csv(const std::string& path, const std::vector<ForecastCase>& cases) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << "sector,obs_u,obs_v\n";
  for (const ForecastCase* c : sorted_cases(cases, /*require_obs=*/true)) {
    const int sec = assign_sector(ensemble_stats(c->ensemble).mean());
    out << sec << ',' << format_double(c->observation->u) << ','
        << format_double(c->observation->v) << "\n";
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

void write_correlation_curve_csv(const std::string& path, const std::vector<SectorStats>& stats,
                                 const CorrelationModel& model, double step_deg) {
  if (!(step_deg > 0.0)) throw Error(ErrorCode::InvalidParameter, "step must be positive");
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << "kind,sector,theta,rho,count\n";
  for (const auto& st : stats) {
    if (!st.corr || !st.center_dir) continue;
    out << "sector," << st.sector << ',' << format_double(*st.center_dir) << ','
        << format_double(*st.corr) << ',' << st.count << "\n";
  }
  for (double theta = 0.0; theta <= 360.0 + 1e-9; theta += step_deg) {
    out << "model,," << format_double(theta) << ','
        << format_double(eval_correlation(model, theta)) << ",\n";
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

std::vector<WindVector> ellipse_polyline(const BivariateNormalParams& p, double coverage,
                                         int points) {
  if (points < 2) throw Error(ErrorCode::InvalidParameter, "polyline needs >= 2 points");
  const Ellipse e = prediction_ellipse(p, coverage);
  const double ang = e.orientation_deg * kPi / 180.0;
  std::vector<WindVector> out;
  out.reserve(points);
  for (int i = 0; i < points; ++i) {
    const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(points - 1);
    const double x = e.semi_major * std::cos(t);
    const double y = e.semi_minor * std::sin(t);
    out.push_back({e.center.u + x * std::cos(ang) - y * std::sin(ang),
                   e.center.v + x * std::sin(ang) + y * std::cos(ang)});
  }
  return out;
}

void write_ellipse_csv(const std::string& path, const ForecastSet& forecasts,
                       const std::vector<double>& coverages, int points) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << "method,station_id,valid_time,coverage,point_index,u,v\n";
  for (const auto& row : forecasts.densities) {
    for (double cov : coverages) {
      const auto poly = ellipse_polyline(row.params, cov, points);
      for (std::size_t i = 0; i < poly.size(); ++i) {
        out << row.method << ',' << row.station_id << ',' << format_iso8601(row.valid_time)
            << ',' << format_double(cov) << ',' << i + 1 << ',' << format_double(poly[i].u)
            << ',' << format_double(poly[i].v) << "\n";
      }
    }
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path);
}

}  // namespace windemos
