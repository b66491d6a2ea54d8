#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "windemos/core.hpp"
#include "windemos/sectors.hpp"

using namespace windemos;

namespace {

ForecastCase make_case(WindVector ens_mean, WindVector obs) {
  ForecastCase c;
  c.station_id = "S";
  c.valid_time = parse_iso8601("2007-06-01T00:00:00Z");
  // Two members symmetric about the requested mean.
  c.ensemble.members = {{ens_mean.u - 0.1, ens_mean.v}, {ens_mean.u + 0.1, ens_mean.v}};
  c.observation = obs;
  return c;
}

std::vector<SectorStats> synthetic_stats(const CorrelationModel& truth,
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

}  // namespace

TEST_CASE("assign_sector geometry") {
  CHECK(assign_sector({0.5, 0.5}) == 1);  // speed ~0.707 <= 2
  CHECK(assign_sector({0.0, 0.0}) == 1);
  CHECK(assign_sector({3, 3}) == 2);    // alpha = 45, upper edge inclusive
  CHECK(assign_sector({-3, -3}) == 6);  // alpha = 225
  CHECK(assign_sector({0, 3}) == 9);    // alpha = 0 treated as 360
  CHECK(assign_sector({3, 0}) == 3);    // alpha = 90
  CHECK(assign_sector({0, -3}) == 5);   // alpha = 180
  CHECK(assign_sector({-3, 0}) == 7);   // alpha = 270
  CHECK(assign_sector({2.0, 0.0}) == 1);     // boundary speed exactly 2
  CHECK(assign_sector({2.0001, 0.0}) == 3);  // just outside the disk
}

TEST_CASE("sectors 2..9 each subtend exactly 45 degrees") {
  // Walk the circle in 0.5-degree steps of pointing azimuth at speed 5.
  std::array<int, 10> hits{};
  for (int i = 0; i < 720; ++i) {
    const double alpha = (i + 0.5) * 0.5 * 3.14159265358979323846 / 180.0;
    WindVector w{5.0 * std::sin(alpha), 5.0 * std::cos(alpha)};
    const int sec = assign_sector(w);
    REQUIRE(sec >= 2);
    REQUIRE(sec <= 9);
    ++hits[sec];
  }
  for (int sec = 2; sec <= 9; ++sec) CHECK(hits[sec] == 90);
}

TEST_CASE("sector center directions are meteorological midpoints") {
  CHECK(sector_center_direction(2) == doctest::Approx(202.5));
  CHECK(sector_center_direction(3) == doctest::Approx(247.5));
  CHECK(sector_center_direction(6) == doctest::Approx(22.5));
  CHECK(sector_center_direction(9) == doctest::Approx(157.5));
  CHECK_THROWS_AS(sector_center_direction(1), Error);
  CHECK_THROWS_AS(sector_center_direction(10), Error);
}

TEST_CASE("sector_stats groups by ensemble mean sector") {
  std::vector<ForecastCase> cases;
  for (int i = 0; i < 5; ++i) cases.push_back(make_case({0, 0}, {1.0 * i, -1.0 * i}));
  auto stats = sector_stats(cases);
  REQUIRE(stats.size() == 9);
  CHECK(stats[0].sector == 1);
  CHECK(stats[0].count == 5);
  for (int sec = 2; sec <= 9; ++sec) {
    CHECK(stats[sec - 1].count == 0);
    CHECK_FALSE(stats[sec - 1].corr.has_value());
  }
}

TEST_CASE("sector_stats correlation is consistent") {
  // Observations from a rho = 0.5 bivariate normal, ensemble means in sector 2.
  const std::size_t n = 10000;
  auto obs = sample({1.0, -0.5, 1.0, 1.0, 0.5}, n, 2024);
  std::vector<ForecastCase> cases;
  cases.reserve(n);
  for (auto w : obs) cases.push_back(make_case({3, 3}, w));
  auto stats = sector_stats(cases);
  REQUIRE(stats[1].sector == 2);
  REQUIRE(stats[1].count == n);
  REQUIRE(stats[1].corr.has_value());
  CHECK(*stats[1].corr == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::abs(*stats[1].corr - 0.5) < 0.05);
}

TEST_CASE("sector_stats marks tiny or degenerate groups undefined") {
  std::vector<ForecastCase> one = {make_case({3, 3}, {1, 1})};
  auto stats = sector_stats(one);
  CHECK(stats[1].count == 1);
  CHECK_FALSE(stats[1].corr.has_value());

  std::vector<ForecastCase> collinear = {make_case({3, 3}, {0, 0}), make_case({3, 3}, {1, 1})};
  auto st2 = sector_stats(collinear);
  REQUIRE(st2[1].corr.has_value());
  CHECK(*st2[1].corr == doctest::Approx(1.0));

  // Zero variance in one component: correlation undefined, not zero.
  std::vector<ForecastCase> flat = {make_case({3, 3}, {2, 0}), make_case({3, 3}, {2, 1})};
  auto st3 = sector_stats(flat);
  CHECK_FALSE(st3[1].corr.has_value());
}

TEST_CASE("eval_correlation reproduces the fitted regional model") {
  CorrelationModel regional{0.20, -0.15, 2, -61.9};
  CHECK(eval_correlation(regional, 30.95) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(eval_correlation(regional, 120.95) == doctest::Approx(-0.35).epsilon(1e-12));

  CorrelationModel flat{0.0, 0.42, 3, 123.0};
  for (double theta : {0.0, 55.0, 180.0, 359.0}) {
    CHECK(eval_correlation(flat, theta) == doctest::Approx(0.42));
  }
}

TEST_CASE("eval_correlation stays in [-1, 1] and is periodic") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    CorrelationModel m;
    m.r = unif(rng);
    m.s = (unif(rng) * 2.0 - 1.0) * (1.0 - m.r);  // |r| + |s| <= 1
    m.k = 1 + static_cast<int>(unif(rng) * 3.0) % 3;
    m.phi = unif(rng) * 360.0 - 180.0;
    for (double theta = 0.0; theta < 360.0; theta += 0.1) {
      const double rho = eval_correlation(m, theta);
      REQUIRE(rho >= -1.0 - 1e-12);
      REQUIRE(rho <= 1.0 + 1e-12);
    }
    for (double theta : {12.3, 200.0, 301.7}) {
      CHECK(eval_correlation(m, theta + 360.0 / m.k) ==
            doctest::Approx(eval_correlation(m, theta)).epsilon(1e-12));
    }
  }
}

TEST_CASE("fit_correlation recovers noiseless parameters exactly") {
  CorrelationModel truth{0.3, 0.1, 1, 40.0};
  std::mt19937_64 rng(0);
  auto stats = synthetic_stats(truth, std::vector<std::size_t>(8, 100), 0.0, rng);
  auto fit = fit_correlation(stats, 1);
  CHECK(fit.converged);
  CHECK(fit.phi_identified);
  CHECK(fit.model.r == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(fit.model.s == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(fit.model.phi == doctest::Approx(40.0).epsilon(1e-5));
  CHECK(fit.weighted_rss < 1e-10);
}

TEST_CASE("fit_correlation on constant data gives r = 0 with flat offset") {
  std::vector<SectorStats> stats;
  for (int sec = 2; sec <= 9; ++sec) {
    SectorStats st;
    st.sector = sec;
    st.center_dir = sector_center_direction(sec);
    st.count = 50;
    st.corr = 0.27;
    stats.push_back(st);
  }
  auto fit = fit_correlation(stats, 2);
  CHECK(fit.model.r == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(fit.model.s == doctest::Approx(0.27).epsilon(1e-9));
  CHECK(fit.weighted_rss < 1e-18);
  CHECK_FALSE(fit.phi_identified);
}

TEST_CASE("fit_correlation noisy Monte-Carlo recovery") {
  CorrelationModel truth{0.24, 0.07, 1, 70.5};
  std::mt19937_64 rng(77);
  std::vector<std::size_t> counts = {220, 1400, 800, 300, 950, 1800, 400, 600};
  int ok = 0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    auto stats = synthetic_stats(truth, counts, 0.05, rng);
    auto fit = fit_correlation(stats, 1);
    if (std::abs(fit.model.r - truth.r) <= 0.1 && std::abs(fit.model.s - truth.s) <= 0.1) ++ok;
  }
  CHECK(ok >= reps - 2);
}

TEST_CASE("fit_correlation is invariant under uniform weight scaling") {
  CorrelationModel truth{0.2, -0.1, 2, -61.9};
  std::mt19937_64 rng(13);
  std::vector<std::size_t> counts = {100, 250, 75, 400, 120, 333, 90, 180};
  auto stats = synthetic_stats(truth, counts, 0.03, rng);
  auto scaled = stats;
  for (auto& st : scaled) st.count *= 7;
  auto f1 = fit_correlation(stats, 2);
  auto f2 = fit_correlation(scaled, 2);
  CHECK(f1.model.r == doctest::Approx(f2.model.r).epsilon(1e-9));
  CHECK(f1.model.s == doctest::Approx(f2.model.s).epsilon(1e-9));
  CHECK(f1.model.phi == doctest::Approx(f2.model.phi).epsilon(1e-9));
  CHECK(f1.weighted_rss == doctest::Approx(f2.weighted_rss).epsilon(1e-9));
}

TEST_CASE("fit_correlation enforces |r| + |s| <= 1") {
  // Hand-built sector correlations that an unconstrained fit would overshoot.
  std::vector<SectorStats> stats;
  for (int sec = 2; sec <= 9; ++sec) {
    SectorStats st;
    st.sector = sec;
    st.center_dir = sector_center_direction(sec);
    st.count = 100;
    const double g = (2.0 * 3.14159265358979323846 / 360.0) * (*st.center_dir + 10.0);
    st.corr = std::clamp(0.9 * std::cos(g) + 0.4, -1.0, 1.0);
    stats.push_back(st);
  }
  auto fit = fit_correlation(stats, 1);
  CHECK(std::abs(fit.model.r) + std::abs(fit.model.s) <= 1.0 + 1e-9);
}

TEST_CASE("fit_correlation needs at least three usable sectors") {
  std::vector<SectorStats> stats;
  SectorStats a;
  a.sector = 2;
  a.center_dir = sector_center_direction(2);
  a.count = 10;
  a.corr = 0.1;
  SectorStats b = a;
  b.sector = 3;
  b.center_dir = sector_center_direction(3);
  stats = {a, b};
  CHECK_THROWS_AS(fit_correlation(stats, 1), Error);
}

TEST_CASE("noiseless fit on four distinct directions reaches tiny RSS") {
  CorrelationModel truth{0.15, -0.05, 3, 100.0};
  std::vector<SectorStats> stats;
  for (int sec : {2, 4, 6, 8}) {
    SectorStats st;
    st.sector = sec;
    st.center_dir = sector_center_direction(sec);
    st.count = 1;
    st.corr = eval_correlation(truth, *st.center_dir);
    stats.push_back(st);
  }
  auto fit = fit_correlation(stats, 3);
  CHECK(fit.weighted_rss < 1e-10);
}
