#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "nhmm/emission.hpp"
#include "nhmm/generative.hpp"
#include "nhmm/ppc_forecast.hpp"
#include "nhmm/state_model.hpp"
#include "test_support.hpp"

using namespace nhmm;
using namespace nhmm::test;

namespace {

constexpr int kHarmonics = 2;

struct Series {
  HolidayCalendar cal;
  CovariateSeries cov;
};

// Covariates for `total` days after day 0, with a sprinkling of holidays.
Series series(int total, const std::vector<int>& holidays, std::uint64_t seed) {
  Series s;
  s.cal = tiny_calendar(total, holidays, HolidayType::Christmas);
  s.cov = tiny_data(s.cal, total, seed, kHarmonics).cov;
  return s;
}

CovariateSeries slice(const CovariateSeries& cov, std::size_t from, std::size_t to) {
  CovariateSeries out;
  out.initial = cov.initial;
  out.days.assign(cov.days.begin() + static_cast<long>(from), cov.days.begin() + static_cast<long>(to));
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("replicates have the observed shape and ignore the thread count") {
  const Series s = series(90, {30, 31}, 1);
  const std::vector<ModelParams> draws(50, moderate_params(3));
  const Replicates a = posterior_predictive_replicates(draws, s.cov, ModelMode::FourState, 7, 1);
  const Replicates b = posterior_predictive_replicates(draws, s.cov, ModelMode::FourState, 7, 3);
  REQUIRE(a.size() == draws.size());
  for (const auto& r : a) CHECK(r.size() == s.cov.size());
  CHECK(a == b);
}

TEST_CASE("coverage is calibrated when data and replicates share parameters") {
  const std::vector<int> hol = {40, 41, 120, 200, 201, 202, 330, 331, 480, 560, 561};
  const int T = 600;
  const Series s = series(T, hol, 2);
  const ModelParams p = moderate_params(5);
  const std::vector<ModelParams> draws(400, p);
  const Replicates reps = posterior_predictive_replicates(draws, s.cov, ModelMode::FourState, 11);

  // Several independent observed series against the same replicate set.
  std::array<int, 2> days{}, outside{};
  std::array<std::array<int, 2>, kGapBuckets> bdays{}, bout{};
  for (std::uint64_t k = 0; k < 8; ++k) {
    const SimulationOutput obs = simulate(p, s.cov, 1000 + k);
    const PpcSummary sum = coverage_by_gap(reps, obs.log_demand, s.cov);
    for (std::size_t j = 0; j < 2; ++j) {
      days[j] += sum.overall[j].days;
      outside[j] += sum.overall[j].outside;
      for (std::size_t b = 0; b < static_cast<std::size_t>(kGapBuckets); ++b) {
        bdays[b][j] += sum.by_gap[b][j].days;
        bout[b][j] += sum.by_gap[b][j].outside;
      }
    }
  }
  auto within = [](int out, int n) {
    const double q = 0.05;
    const double se = std::sqrt(q * (1 - q) / n);
    return std::abs(static_cast<double>(out) / n - q) <= 3.0 * se;
  };
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK_MESSAGE(within(outside[j], days[j]), "region ", j + 1, ": ", outside[j], " of ", days[j]);
    for (std::size_t b = 0; b < static_cast<std::size_t>(kGapBuckets); ++b) {
      if (bdays[b][j] < 100) continue;
      CHECK_MESSAGE(within(bout[b][j], bdays[b][j]), "bucket ", gap_label(static_cast<int>(b)), " region ", j + 1);
    }
  }
}

TEST_CASE("a gross shift puts every observation outside") {
  const Series s = series(120, {50}, 3);
  const ModelParams p = moderate_params(6);
  const std::vector<ModelParams> draws(60, p);
  const Replicates reps = posterior_predictive_replicates(draws, s.cov, ModelMode::FourState, 4);
  std::vector<Vec2> y = simulate(p, s.cov, 9ull).log_demand;
  for (auto& v : y) v = v + Vec2{10.0, 10.0};
  const PpcSummary sum = coverage_by_gap(reps, y, s.cov);
  CHECK(sum.overall[0].fraction() == 1.0);
  CHECK(sum.overall[1].fraction() == 1.0);
  for (const auto& row : sum.by_gap)
    for (const auto& g : row) CHECK(g.outside == g.days);
}

TEST_CASE("coverage does not depend on replicate order") {
  const Series s = series(150, {20, 90, 91}, 4);
  const ModelParams p = moderate_params(7);
  const std::vector<ModelParams> draws(80, p);
  Replicates reps = posterior_predictive_replicates(draws, s.cov, ModelMode::FourState, 5);
  const std::vector<Vec2> y = simulate(p, s.cov, 10ull).log_demand;
  const PpcSummary a = coverage_by_gap(reps, y, s.cov);
  std::mt19937 g(3);
  std::shuffle(reps.begin(), reps.end(), g);
  const PpcSummary b = coverage_by_gap(reps, y, s.cov);
  for (std::size_t t = 0; t < a.days.size(); ++t) {
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(a.days[t][j].q025 == b.days[t][j].q025);
      CHECK(a.days[t][j].q975 == b.days[t][j].q975);
      CHECK(a.outside[t][j] == b.outside[t][j]);
    }
  }
  for (std::size_t k = 0; k < a.by_gap.size(); ++k)
    for (std::size_t j = 0; j < 2; ++j) CHECK(a.by_gap[k][j].outside == b.by_gap[k][j].outside);
}

TEST_CASE("coverage needs at least 40 replicates and aligned inputs") {
  const Series s = series(40, {10}, 5);
  const ModelParams p = moderate_params(8);
  const std::vector<Vec2> y = simulate(p, s.cov, 1ull).log_demand;
  const Replicates few = posterior_predictive_replicates(std::vector<ModelParams>(39, p), s.cov, ModelMode::FourState, 1);
  CHECK_THROWS_AS(coverage_by_gap(few, y, s.cov), std::invalid_argument);
  const Replicates ok = posterior_predictive_replicates(std::vector<ModelParams>(40, p), s.cov, ModelMode::FourState, 1);
  CHECK_NOTHROW(coverage_by_gap(ok, y, s.cov));
  const std::vector<Vec2> short_y(y.begin(), y.end() - 1);
  CHECK_THROWS_AS(coverage_by_gap(ok, short_y, s.cov), std::invalid_argument);
}

TEST_CASE("empirical quantiles interpolate between order statistics") {
  CHECK(empirical_quantile({4.0, 1.0, 3.0, 2.0}, 0.5) == doctest::Approx(2.5));
  CHECK(empirical_quantile({0.0, 10.0}, 0.025) == doctest::Approx(0.25));
  CHECK(empirical_quantile({5.0}, 0.975) == 5.0);
  CHECK(gap_bucket(0, 0) == 0);
  CHECK(gap_bucket(3, 17) == 3);
  CHECK(gap_bucket(40, 12) == 10);
  CHECK(gap_label(10) == "10+");
}

TEST_CASE("replicate mean on a holiday is the draw average of the holiday mean") {
  const Series s = series(80, {41}, 6);
  const std::size_t hday = 40;  // day 41 after day 0
  REQUIRE(s.cov.days[hday].holiday());
  std::vector<ModelParams> distinct;
  for (std::uint64_t k = 0; k < 8; ++k) distinct.push_back(moderate_params(20 + k));
  std::vector<ModelParams> draws;
  for (int r = 0; r < 600; ++r)
    for (const auto& p : distinct) draws.push_back(p);
  const Replicates reps = posterior_predictive_replicates(draws, s.cov, ModelMode::FourState, 8);
  const SeasonalBasis b = seasonal_basis(s.cov.days[hday].t_index, kHarmonics);
  for (int j = 0; j < 2; ++j) {
    double oracle = 0.0;
    for (const auto& p : distinct) oracle += mean_vector(p.emission, s.cov.days[hday], b, 2)[j];
    oracle /= static_cast<double>(distinct.size());
    double m = 0.0, m2 = 0.0;
    for (const auto& r : reps) {
      m += r[hday][j];
      m2 += r[hday][j] * r[hday][j];
    }
    const double n = static_cast<double>(reps.size());
    m /= n;
    const double se = std::sqrt((m2 / n - m * m) / n);
    CHECK_MESSAGE(std::abs(m - oracle) <= 4.0 * se, "region ", j + 1, " mean ", m, " oracle ", oracle);
  }
}

TEST_CASE("one-step forecast matches the filtered mixture") {
  const int T = 60;
  const Series s = series(T + 5, {T + 2}, 7);  // the forecast day sits just before a holiday
  const ModelParams p = moderate_params(30);
  const SimulationOutput sim = simulate(p, slice(s.cov, 0, T), 3ull);
  const ModelData hist = ModelData::make(sim.log_demand, slice(s.cov, 0, T), kHarmonics);
  const CovariateSeries future = slice(s.cov, T, T + 1);
  const DayCovariates& day = future.days[0];
  REQUIRE(day.n == 1);

  const std::vector<ModelParams> draws(40000, p);
  const ForecastPaths paths = forecast(draws, hist, future, ModelMode::FourState, 12);

  // Oracle: Pr(S_T = a) from the filter, then the two-state mixture for day T+1.
  const FilterResult fr = forward_filter(hist, p);
  std::array<double, 4> sT{};
  for (int k = 0; k < kNumPairs; ++k) sT[static_cast<std::size_t>(kAugmentedPairs[static_cast<std::size_t>(k)].curr - 1)] += std::exp(fr.messages.log_filtered.back()[static_cast<std::size_t>(k)]);
  const auto P = transition_matrix(p.transition, day.n, day.p);
  const Mat2 psi = psi_from_xi(p.emission.xi[0], p.emission.xi[1]);
  const DayCovariates& last = hist.cov.days.back();
  const SeasonalBasis bT = seasonal_basis(last.t_index, kHarmonics);
  const SeasonalBasis b1 = seasonal_basis(day.t_index, kHarmonics);
  struct Component {
    double w;
    Vec2 mean;
    Mat2 cov;
  };
  std::vector<Component> mix;
  std::array<double, 4> p_next{};
  for (int a = 1; a <= 4; ++a) {
    for (int b = 1; b <= 4; ++b) {
      const double w = sT[static_cast<std::size_t>(a - 1)] * P[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)];
      if (w <= 0.0) continue;
      p_next[static_cast<std::size_t>(b - 1)] += w;
      const Vec2 m = mean_vector(p.emission, day, b1, b) + psi * (hist.y.back() - mean_vector(p.emission, last, bT, a));
      const Mat2 c = precision_inverse(precision_from_predictors(precision_predictors(p.emission, day, b1, b)));
      mix.push_back({w, m, c});
    }
  }
  REQUIRE(mix.size() >= 2);

  const double n = static_cast<double>(draws.size());
  std::array<double, 4> freq{};
  for (const auto& st : paths.states) freq[static_cast<std::size_t>(st[0] - 1)] += 1.0 / n;
  for (std::size_t k = 0; k < 4; ++k) {
    const double se = std::sqrt(std::max(p_next[k] * (1 - p_next[k]), 1e-12) / n);
    CHECK(std::abs(freq[k] - p_next[k]) <= 4.0 * se + 1e-12);
  }
  for (int j = 0; j < 2; ++j) {
    std::vector<double> ys;
    for (const auto& path : paths.log_demand) ys.push_back(path[0][j]);
    std::sort(ys.begin(), ys.end());
    for (double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double x = ys[static_cast<std::size_t>(q * n)];
      double F = 0.0;
      for (const auto& c : mix) {
        const double sd = std::sqrt(j == 0 ? c.cov.a11 : c.cov.a22);
        F += c.w * normal_cdf((x - c.mean[j]) / sd);
      }
      const double se = std::sqrt(q * (1 - q) / n);
      CHECK_MESSAGE(std::abs(F - q) <= 4.0 * se, "region ", j + 1, " quantile ", q, " oracle cdf ", F);
    }
  }
}

TEST_CASE("long forecasts drift to the seasonal mean path") {
  const int T = 80, H = 60;
  const Series s = series(T + H + 5, {0}, 8);
  ModelParams p = moderate_params(31);
  p.transition.nu41_1 = -30.0;
  p.transition.nu41_2 = 0.0;
  p.transition.nu23_1 = -30.0;
  p.transition.nu23_2 = 0.0;
  SimulationOutput sim = simulate(p, slice(s.cov, 0, T), 4ull);
  sim.log_demand.back() = sim.log_demand.back() + Vec2{0.8, -0.8};  // start well off the mean
  const ModelData hist = ModelData::make(sim.log_demand, slice(s.cov, 0, T), kHarmonics);
  const CovariateSeries future = slice(s.cov, T, T + H);
  const std::vector<ModelParams> draws(4000, p);
  const ForecastPaths paths = forecast(draws, hist, future, ModelMode::FourState, 13);
  const ForecastSummary sum = summarise_forecast(paths);
  const DayCovariates& far = future.days.back();
  const Vec2 mu = mean_vector(p.emission, far, seasonal_basis(far.t_index, kHarmonics), 4);
  const Vec2 mu1 = mean_vector(p.emission, future.days[0], seasonal_basis(future.days[0].t_index, kHarmonics), 4);
  for (int j = 0; j < 2; ++j) {
    const auto& d = sum.days.back()[static_cast<std::size_t>(j)];
    const double sd = (d.q975 - d.q025) / (2 * 1.96);
    CHECK(std::abs(d.mean - mu[j]) <= 4.0 * sd / std::sqrt(4000.0));
    // The first day still carries the offset.
    CHECK(std::abs(sum.days.front()[static_cast<std::size_t>(j)].mean - mu1[j]) > 0.05);
  }
  CHECK(sum.state_probs.back()[3] == 1.0);
}

TEST_CASE("forecasts are reproducible and reject a broken day index") {
  const int T = 50;
  const Series s = series(T + 10, {20, T + 3}, 9);
  const ModelParams p = moderate_params(32);
  const ModelData hist = ModelData::make(simulate(p, slice(s.cov, 0, T), 5ull).log_demand, slice(s.cov, 0, T), kHarmonics);
  const CovariateSeries future = slice(s.cov, T, T + 10);
  const std::vector<ModelParams> draws(30, p);
  const ForecastPaths a = forecast(draws, hist, future, ModelMode::FourState, 1, 1);
  const ForecastPaths b = forecast(draws, hist, future, ModelMode::FourState, 1, 4);
  CHECK(a.log_demand == b.log_demand);
  CHECK(a.states == b.states);
  for (const auto& st : a.states) CHECK(st[2] == 2);  // offset T+3 is the third future day
  CHECK_THROWS_AS(forecast(draws, hist, slice(s.cov, T + 1, T + 10), ModelMode::FourState, 1), std::invalid_argument);

  std::ostringstream csv;
  write_forecast_csv(csv, summarise_forecast(a), future);
  const std::string text = csv.str();
  CHECK(text.rfind("date,region,pred_mean,pred_q025,pred_q975,p_state1,p_state2,p_state3,p_state4\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 10);
}

TEST_CASE("ppc writers") {
  const Series s = series(60, {30}, 10);
  const ModelParams p = moderate_params(33);
  const Replicates reps = posterior_predictive_replicates(std::vector<ModelParams>(50, p), s.cov, ModelMode::TwoState, 2);
  const std::vector<Vec2> y = simulate(p, s.cov, 5ull, ModelMode::TwoState).log_demand;
  const PpcSummary sum = coverage_by_gap(reps, y, s.cov);
  for (const auto& d : sum.days)
    for (const auto& r : d) CHECK(r.q025 <= r.q975);
  std::ostringstream csv;
  write_ppc_csv(csv, sum, y, s.cov);
  CHECK(csv.str().rfind("date,region,observed,pred_mean,pred_q025,pred_q975,outside95\n", 0) == 0);
  const std::string json = ppc_report_json(sum, ModelMode::TwoState);
  CHECK(json.find("\"two_state\"") != std::string::npos);
  CHECK(json.find("\"by_gap\"") != std::string::npos);
}
