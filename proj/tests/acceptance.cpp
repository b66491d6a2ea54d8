// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] is the CLI binary, used by the end-to-end criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "windemos/pipeline.hpp"
#include "windemos/simulate.hpp"

using namespace windemos;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::string g_cli;
fs::path g_workdir;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool run_cli(const std::string& args) {
  const std::string log = (g_workdir / "cli.log").string();
  const std::string cmd = g_cli + " " + args + " > " + log + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc != 0) {
    std::ifstream in(log);
    std::string line;
    while (std::getline(in, line)) std::printf("    cli: %s\n", line.c_str());
  }
  return rc == 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- criterion 1

std::vector<SectorStats> stats_from_model(const CorrelationModel& truth,
                                          const std::vector<std::size_t>& counts,
                                          double noise_sd, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, noise_sd);
  std::vector<SectorStats> stats;
  for (int sec = 2; sec <= 9; ++sec) {
    SectorStats st;
    st.sector = sec;
    st.center_dir = sector_center_direction(sec);
    st.count = counts[sec - 2];
    st.corr = eval_correlation(truth, *st.center_dir) + (noise_sd > 0 ? gauss(rng) : 0.0);
    stats.push_back(st);
  }
  return stats;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::ostringstream detail;

  const CorrelationModel truth{0.3, 0.1, 1, 40.0};
  std::mt19937_64 rng(4242);
  const auto clean = stats_from_model(truth, std::vector<std::size_t>(8, 100), 0.0, rng);
  const CorrelationFit fit = fit_correlation(clean, 1);
  const double err = std::max({std::abs(fit.model.r - truth.r), std::abs(fit.model.s - truth.s),
                               std::abs(fit.model.phi - truth.phi)});
  pass = pass && err <= 1e-6 && fit.weighted_rss < 1e-10;
  detail << "noiseless max err " << err << ", rss " << fit.weighted_rss;

  const CorrelationModel noisy_truth{0.24, 0.07, 1, 70.5};
  const std::vector<std::size_t> counts = {220, 1400, 800, 300, 950, 1800, 400, 600};
  int ok = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto stats = stats_from_model(noisy_truth, counts, 0.05, rng);
    const CorrelationFit f = fit_correlation(stats, 1);
    if (std::abs(f.model.r - noisy_truth.r) <= 0.1 &&
        std::abs(f.model.s - noisy_truth.s) <= 0.1) {
      ++ok;
    }
  }
  pass = pass && ok >= 90;
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 10.0;
  detail << "; noisy recovery " << ok << "/100; " << elapsed << " s";
  report(1, "correlation-model recovery", pass, detail.str());
}

// ---------------------------------------------------------------- criterion 2

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  GeneratorSpec spec;
  spec.n_stations = 25;
  spec.n_days = 200;  // 5000 cases
  spec.a_u = 0.5;
  spec.b_u = 0.8;
  spec.a_v = -0.2;
  spec.b_v = 1.1;
  spec.c_u = 1.0;
  spec.d_u = 0.5;
  spec.c_v = 1.0;
  spec.d_v = 0.5;
  spec.spread_lo = 0.4;  // wide spread range identifies c and d separately
  spec.spread_hi = 3.0;
  spec.seed = 90210;
  const auto dataset = simulate_dataset(spec);

  TrainingWindow w;
  w.cases = dataset;
  w.length_days = spec.n_days;
  const MeanCoeffs mc = fit_means(w);
  const bool means_ok = std::abs(mc.a_u - spec.a_u) <= 0.05 &&
                        std::abs(mc.b_u - spec.b_u) <= 0.05 &&
                        std::abs(mc.a_v - spec.a_v) <= 0.05 &&
                        std::abs(mc.b_v - spec.b_v) <= 0.05;
  const VarFitResult vr = fit_variances(w, mc, spec.corr, VarCoeffs{1, 1, 1, 1});
  auto within10 = [](double got, double want) { return std::abs(got - want) <= 0.1 * want; };
  const bool vars_ok = within10(vr.coeffs.c_u, spec.c_u) && within10(vr.coeffs.d_u, spec.d_u) &&
                       within10(vr.coeffs.c_v, spec.c_v) && within10(vr.coeffs.d_v, spec.d_v);
  const double elapsed = seconds_since(t0);
  std::ostringstream detail;
  detail << "a_u " << mc.a_u << " b_u " << mc.b_u << " c_u " << vr.coeffs.c_u << " d_u "
         << vr.coeffs.d_u << "; " << elapsed << " s";
  report(2, "estimation consistency at 5000 cases", means_ok && vars_ok && elapsed < 60.0,
         detail.str());
}

// ---------------------------------------------------------------- criterion 3

std::map<std::string, std::vector<std::string>> read_csv_by_first_field(const fs::path& p) {
  std::map<std::string, std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string f;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(f);
        f.clear();
      } else if (ch != '\r') {
        f += ch;
      }
    }
    fields.push_back(f);
    if (!fields.empty()) rows[fields[0]] = fields;
  }
  return rows;
}

void criterion3() {
  const fs::path dir = g_workdir / "c3";
  fs::create_directories(dir);
  const std::string data = (dir / "data.csv").string();
  const std::string corr = (dir / "corr.txt").string();
  const std::string params = (dir / "params.txt").string();
  const std::string fc = (dir / "fc_emos.csv").string();
  const std::string scores = (dir / "scores.csv").string();
  const std::string ranks = (dir / "ranks.csv").string();

  bool pass = run_cli("simulate --out " + data +
                      " --stations 25 --days 231 --members 8 --r 0.3 --s 0.05 --k 2 --phi 40"
                      " --c-u 0.3 --c-v 0.3 --seed 7 --emit-correlation " + corr);
  pass = pass && run_cli("train --data " + data + " --correlation " + corr +
                         " --scope regional --out " + params);
  pass = pass && run_cli("forecast --data " + data + " --params " + params +
                         " --method emos --out " + fc);
  pass = pass && run_cli("verify --data " + data + " --forecasts " + fc +
                         " --seed 5 --out-scores " + scores + " --out-ranks " + ranks);

  std::ostringstream detail;
  if (pass) {
    const auto rows = read_csv_by_first_field(scores);
    const auto it = rows.find("emos");
    if (it == rows.end() || it->second.size() < 8) {
      pass = false;
      detail << "no emos row in scores";
    } else {
      const std::size_t n = std::stoull(it->second[1]);
      const double delta = std::stod(it->second[4]);
      const double p = std::stod(it->second[5]);
      pass = n >= 5000 && delta < 0.1 && p > 0.01;
      detail << "n " << n << ", delta " << delta << ", uniformity p " << p;
    }
  } else {
    detail << "pipeline command failed";
  }
  report(3, "calibration closure (simulate→train→forecast→verify)", pass, detail.str());
}

// ---------------------------------------------------------------- criterion 4

void criterion4() {
  // Direction-dependent correlation with the required r = 0.3; the offset and
  // a 100-member synthetic ensemble keep the dependence signal above the
  // discrete ensemble's finite-size energy-score penalty, which would
  // otherwise drown it (the energy score discriminates dependence weakly).
  GeneratorSpec spec;
  spec.n_stations = 25;
  spec.n_days = 231;
  spec.ensemble_size = 100;
  spec.corr = {0.3, -0.65, 2, 40.0};
  spec.c_u = 0.3;
  spec.c_v = 0.3;
  spec.seed = 424242;
  const auto dataset = simulate_dataset(spec);

  TrainConfig tc;
  tc.scope = Scope::Regional;
  tc.n_train = 30;
  const TrainResult trained = train_parameters(dataset, spec.corr, tc);
  std::map<std::int64_t, const ParameterRecord*> by_day;
  for (const auto& rec : trained.records) by_day[utc_day(rec.params.fitted_at)] = &rec;

  std::mt19937_64 rng(99);
  std::vector<double> d_emos, d_ecc;
  std::size_t n = 0;
  double es_emos_sum = 0, es_indep_sum = 0, es_ecc_sum = 0;
  for (const auto& c : dataset) {
    if (!c.observation) continue;
    const auto it = by_day.find(utc_day(c.valid_time));
    if (it == by_day.end()) continue;
    const EmosParameters& p = it->second->params;
    const BivariateNormalParams emos_d = emos_density(p, c.ensemble);
    BivariateNormalParams indep_d = emos_d;
    indep_d.rho = 0.0;
    const WindVector y = *c.observation;
    const double es_emos = energy_score_density(emos_d, y, 4000, rng);
    const double es_indep = energy_score_density(indep_d, y, 4000, rng);
    const double es_ecc = energy_score_ensemble(ecc(c.ensemble, indep_d, rng), y);
    d_emos.push_back(es_emos - es_indep);
    d_ecc.push_back(es_ecc - es_indep);
    es_emos_sum += es_emos;
    es_indep_sum += es_indep;
    es_ecc_sum += es_ecc;
    ++n;
  }
  auto margin_over_se = [](const std::vector<double>& d) {
    double mean = 0;
    for (double x : d) mean += x;
    mean /= static_cast<double>(d.size());
    double var = 0;
    for (double x : d) var += (x - mean) * (x - mean);
    var /= static_cast<double>(d.size() - 1);
    return -mean / std::sqrt(var / static_cast<double>(d.size()));
  };
  const double emos_sig = margin_over_se(d_emos);
  const double ecc_sig = margin_over_se(d_ecc);
  std::ostringstream detail;
  detail.precision(4);
  detail << "n " << n << "; ES emos " << es_emos_sum / n << " ecc " << es_ecc_sum / n
         << " indep " << es_indep_sum / n << "; margins " << emos_sig << " and " << ecc_sig
         << " MC standard errors";
  report(4, "qualitative ordering EMOS < ECC < Independent",
         n >= 5000 && emos_sig > 3.0 && ecc_sig > 3.0, detail.str());
}

// ---------------------------------------------------------------- criterion 5

void criterion5() {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  std::uniform_int_distribution<int> msize(1, 25);
  bool es_ok = true;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<WindVector> xs;
    const int m = msize(rng);
    for (int i = 0; i < m; ++i) xs.push_back({unif(rng), unif(rng)});
    const WindVector y{unif(rng), unif(rng)};
    double t2 = 0.0;
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) t2 += std::hypot(xs[i].u - xs[j].u, xs[i].v - xs[j].v);
    }
    double t1 = 0.0;
    for (int i = m; i-- > 0;) t1 += std::hypot(xs[i].u - y.u, xs[i].v - y.v);
    const double oracle = t1 / m - t2 / (2.0 * m * m);
    if (std::abs(energy_score_ensemble(xs, y) - oracle) >
        1e-12 * std::max(1.0, std::abs(oracle))) {
      es_ok = false;
    }
  }

  // Monte-Carlo estimator vs the exact score of the same empirical law.
  std::vector<WindVector> members;
  const BivariateNormalParams p{1.0, -0.5, 2.0, 1.0, 0.4};
  for (int i = 0; i < 2000; ++i) members.push_back(sample_one(p, rng));
  const WindVector y{0.7, 0.2};
  const double exact = energy_score_ensemble(members, y);
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  const double approx = energy_score_sampled([&] { return members[pick(rng)]; }, y, 100000);
  const double rel = std::abs(approx - exact) / exact;
  const bool mc_ok = rel < 0.01;

  bool median_ok = true;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<WindVector> pts;
    for (int i = 0; i < 60; ++i) pts.push_back({unif(rng), unif(rng)});
    const WindVector med = spatial_median(pts).point;
    auto objective = [&](WindVector x) {
      double total = 0;
      for (const auto& q : pts) total += distance(q, x);
      return total;
    };
    double lo_u = pts[0].u, hi_u = pts[0].u, lo_v = pts[0].v, hi_v = pts[0].v;
    for (const auto& q : pts) {
      lo_u = std::min(lo_u, q.u);
      hi_u = std::max(hi_u, q.u);
      lo_v = std::min(lo_v, q.v);
      hi_v = std::max(hi_v, q.v);
    }
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200; ++i) {
      for (int j = 0; j < 200; ++j) {
        best = std::min(best, objective({lo_u + (hi_u - lo_u) * i / 199.0,
                                         lo_v + (hi_v - lo_v) * j / 199.0}));
      }
    }
    if (objective(med) > best + 1e-12) median_ok = false;
  }

  std::ostringstream detail;
  detail << "double-sum oracle " << (es_ok ? "exact" : "MISMATCH") << "; estimator rel err "
         << rel << "; median beats grid " << (median_ok ? "100/100" : "NO");
  report(5, "scoring-oracle agreement", es_ok && mc_ok && median_ok, detail.str());
}

// ---------------------------------------------------------------- criterion 6

void criterion6() {
  RankHistogram spike;
  spike.counts.assign(9, 0);
  spike.counts[0] = 57;
  const double delta = reliability_index(spike);
  const bool delta_ok = std::abs(delta - 16.0 / 9.0) <= 8e-16;

  const bool crps_ok = crps_ensemble({0.0, 2.0}, 1.0) == 0.5;
  const bool single_ok = energy_score_ensemble({{3.0, 4.0}}, {0.0, 0.0}) == 5.0;

  std::ostringstream detail;
  detail.precision(17);
  detail << "delta " << delta << ", crps({0,2},1) " << crps_ensemble({0.0, 2.0}, 1.0)
         << ", single-member ES " << energy_score_ensemble({{3.0, 4.0}}, {0.0, 0.0});
  report(6, "appendix formula fidelity", delta_ok && crps_ok && single_ok, detail.str());
}

// ---------------------------------------------------------------- criterion 7

void criterion7() {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> unif(-8.0, 8.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  bool ranks_ok = true, multiset_ok = true;
  for (int rep = 0; rep < 1000; ++rep) {
    EnsembleForecast raw;
    for (int i = 0; i < 8; ++i) raw.members.push_back({unif(rng), unif(rng)});

    // Rank matrices, via the public sampler.
    const BivariateNormalParams indep{unif(rng), unif(rng), 1.5, 2.5, 0.0};
    const auto out = ecc(raw, indep, 1000 + rep);
    auto ranks = [](const std::vector<WindVector>& ws, bool u) {
      std::vector<int> r(ws.size(), 0);
      for (std::size_t i = 0; i < ws.size(); ++i) {
        for (std::size_t j = 0; j < ws.size(); ++j) {
          const double a = u ? ws[i].u : ws[i].v;
          const double b = u ? ws[j].u : ws[j].v;
          if (b < a) ++r[i];
        }
      }
      return r;
    };
    if (ranks(out, true) != ranks(raw.members, true) ||
        ranks(out, false) != ranks(raw.members, false)) {
      ranks_ok = false;
    }

    // Value multisets, via the recombination step with explicit samples.
    std::vector<double> us(8), vs(8);
    for (double& x : us) x = gauss(rng);
    for (double& x : vs) x = gauss(rng);
    std::sort(us.begin(), us.end());
    std::sort(vs.begin(), vs.end());
    const auto rec = ecc_recombine(raw, us, vs, rng);
    std::vector<double> got_u, got_v;
    for (const auto& w : rec) {
      got_u.push_back(w.u);
      got_v.push_back(w.v);
    }
    std::sort(got_u.begin(), got_u.end());
    std::sort(got_v.begin(), got_v.end());
    if (got_u != us || got_v != vs) multiset_ok = false;
  }
  std::ostringstream detail;
  detail << "rank matrices " << (ranks_ok ? "preserved" : "BROKEN") << "; value multisets "
         << (multiset_ok ? "exact" : "BROKEN") << " over 1000 cases";
  report(7, "ECC structural invariant", ranks_ok && multiset_ok, detail.str());
}

// ---------------------------------------------------------------- criterion 8

void criterion8() {
  bool pass = true;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = g_workdir / "c8" / run;
    fs::create_directories(dir);
    const auto at = [&](const std::string& name) { return (dir / name).string(); };
    pass = pass && run_cli("simulate --out " + at("data.csv") +
                           " --stations 10 --days 71 --r 0.25 --s 0.05 --k 2 --phi 15"
                           " --c-u 0.4 --c-v 0.4 --discretize --seed 99 --emit-correlation " +
                           at("corr.txt"));
    pass = pass && run_cli("train --data " + at("data.csv") + " --correlation " +
                           at("corr.txt") + " --scope regional --out " + at("params.txt"));
    for (const std::string method :
         {"emos", "independent", "ecc", "error-dress", "speed-emos"}) {
      pass = pass && run_cli("forecast --data " + at("data.csv") + " --params " +
                             at("params.txt") + " --method " + method + " --seed 21 --out " +
                             at("fc_" + method + ".csv"));
    }
    pass = pass &&
           run_cli("verify --data " + at("data.csv") + " --forecasts " + at("fc_emos.csv") +
                   " " + at("fc_independent.csv") + " " + at("fc_ecc.csv") + " " +
                   at("fc_error-dress.csv") + " " + at("fc_speed-emos.csv") +
                   " --seed 3 --es-samples 500 --out-scores " + at("scores.csv") +
                   " --out-ranks " + at("ranks.csv") + " --out-marginal " + at("marginal.csv"));
    pass = pass && run_cli("plot-data sector-scatter --data " + at("data.csv") + " --out " +
                           at("scatter.csv"));
    pass = pass && run_cli("plot-data corr-curve --data " + at("data.csv") + " --correlation " +
                           at("corr.txt") + " --out " + at("curve.csv"));
    pass = pass && run_cli("plot-data ellipse --forecasts " + at("fc_emos.csv") +
                           " --station S000 --time 2007-02-15T00:00:00Z --out " +
                           at("ellipse.csv"));
    if (!pass) break;
  }
  std::size_t compared = 0;
  std::string first_diff;
  if (pass) {
    for (const char* name :
         {"data.csv", "corr.txt", "params.txt", "fc_emos.csv", "fc_independent.csv",
          "fc_ecc.csv", "fc_error-dress.csv", "fc_speed-emos.csv", "scores.csv", "ranks.csv",
          "marginal.csv", "scatter.csv", "curve.csv", "ellipse.csv"}) {
      const std::string a = slurp(g_workdir / "c8" / "a" / name);
      const std::string b = slurp(g_workdir / "c8" / "b" / name);
      if (a.empty() || a != b) {
        pass = false;
        if (first_diff.empty()) first_diff = name;
      }
      ++compared;
    }
  }
  std::ostringstream detail;
  detail << compared << " output files byte-compared";
  if (!first_diff.empty()) detail << "; first difference: " << first_diff;
  report(8, "seeded pipeline reruns are byte-identical", pass, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-cli>\n");
    return 2;
  }
  g_cli = argv[1];
  g_workdir = fs::temp_directory_path() / "windemos_acceptance";
  std::error_code ec;
  fs::remove_all(g_workdir, ec);
  fs::create_directories(g_workdir);

  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
