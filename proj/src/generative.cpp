#include "nhmm/generative.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nhmm {

using namespace std::chrono;

Vec2 draw_innovation(const PrecisionComponents& pc, Rng& rng) {
  // e1 = u1, e2 = phi e1 + u2 with u_i ~ N(0, 1/tau_i) independent.
  const double e1 = standard_normal(rng) / std::sqrt(pc.tau1);
  const double e2 = pc.phi * e1 + standard_normal(rng) / std::sqrt(pc.tau2);
  return {e1, e2};
}

namespace {

int draw_next_state(const TransitionMatrix& m, int prev, Rng& rng) {
  return categorical_draw(rng, m[static_cast<std::size_t>(prev - 1)]) + 1;
}

Vec2 draw_mvn(const Mat2& cov, Rng& rng) {
  const double l11 = std::sqrt(cov.a11);
  const double l21 = cov.a21 / l11;
  const double l22 = std::sqrt(std::max(cov.a22 - l21 * l21, 0.0));
  const double z1 = standard_normal(rng), z2 = standard_normal(rng);
  return {l11 * z1, l21 * z1 + l22 * z2};
}

}  // namespace

void simulate_forward(const ModelParams& params, std::span<const DayCovariates> days,
                      std::span<const SeasonalBasis> basis, const SimulationAnchor& anchor, Rng& rng, ModelMode mode,
                      std::vector<int>& states, std::vector<Vec2>& log_demand) {
  const EmissionParams& em = params.emission;
  const Mat2 psi = psi_from_xi(em.xi[0], em.xi[1]);
  int prev = anchor.state;
  Vec2 dev = anchor.y - mean_vector(em, anchor.day, anchor.basis, anchor.state);
  for (std::size_t t = 0; t < days.size(); ++t) {
    const DayCovariates& day = days[t];
    const int s = draw_next_state(transition_matrix(params.transition, day.n, day.p, mode), prev, rng);
    const Vec2 mu = mean_vector(em, day, basis[t], s);
    const PrecisionComponents pc = precision_from_predictors(precision_predictors(em, day, basis[t], s));
    const Vec2 y = mu + psi * dev + draw_innovation(pc, rng);
    states.push_back(s);
    log_demand.push_back(y);
    dev = y - mu;
    prev = s;
  }
}

SimulationOutput simulate(const ModelParams& params, const CovariateSeries& cov, std::span<const SeasonalBasis> basis,
                          Rng& rng, ModelMode mode) {
  if (cov.size() == 0) throw std::invalid_argument("nothing to simulate");
  if (basis.size() != cov.size()) throw std::invalid_argument("basis and covariates differ in length");
  const EmissionParams& em = params.emission;
  SimulationOutput out;
  out.cov = cov;
  const StateDistribution init = initial_distribution(cov.initial.n, cov.initial.p, mode);
  const int s0 = categorical_draw(rng, init.probs) + 1;
  out.states.push_back(s0);

  const DayCovariates& d1 = cov.days[0];
  const int s1 = draw_next_state(transition_matrix(params.transition, d1.n, d1.p, mode), s0, rng);
  const Vec2 mu1 = mean_vector(em, d1, basis[0], s1);
  const PrecisionComponents pc1 = precision_from_predictors(precision_predictors(em, d1, basis[0], s1));
  const Mat2 v = stationary_variance(psi_from_xi(em.xi[0], em.xi[1]), precision_matrix(pc1));
  const Vec2 y1 = mu1 + draw_mvn(v, rng);
  out.states.push_back(s1);
  out.log_demand.push_back(y1);

  const SimulationAnchor anchor{y1, d1, basis[0], s1};
  simulate_forward(params, std::span(cov.days).subspan(1), basis.subspan(1), anchor, rng, mode, out.states,
                   out.log_demand);
  return out;
}

SimulationOutput simulate(const ModelParams& params, const CovariateSeries& cov, Rng& rng, ModelMode mode) {
  const int k = std::max({params.k_gamma(), params.k_kappa(), 1});
  std::vector<SeasonalBasis> basis;
  basis.reserve(cov.size());
  for (const auto& d : cov.days) basis.push_back(seasonal_basis(d.t_index, k));
  return simulate(params, cov, basis, rng, mode);
}

SimulationOutput simulate(const ModelParams& params, const CovariateSeries& cov, std::uint64_t seed, ModelMode mode) {
  Rng rng = make_rng(seed);
  return simulate(params, cov, rng, mode);
}

Date easter_sunday(int y) {
  // Anonymous Gregorian algorithm.
  const int a = y % 19, b = y / 100, c = y % 100, d = b / 4, e = b % 4;
  const int f = (b + 8) / 25, g = (b - f + 1) / 3;
  const int h = (19 * a + b - d - g + 15) % 30;
  const int i = c / 4, k = c % 4;
  const int l = (32 + 2 * e + 2 * i - h - k) % 7;
  const int m = (a + 11 * h + 22 * l) / 451;
  const int month = (h + l - 7 * m + 114) / 31;
  const int day = ((h + l - 7 * m + 114) % 31) + 1;
  return sys_days{year{y} / static_cast<unsigned>(month) / static_cast<unsigned>(day)};
}

std::vector<Holiday> uk_bank_holidays(int first_year, int last_year) {
  std::vector<Holiday> out;
  auto wd = [](Date d) { return weekday{d}; };
  auto first_monday = [](int y, unsigned m) { return sys_days{year{y} / month{m} / Monday[1]}; };
  auto last_monday = [](int y, unsigned m) { return sys_days{year{y} / month{m} / Monday[last]}; };
  for (int y = first_year; y <= last_year; ++y) {
    Date ny = sys_days{year{y} / January / 1};
    if (wd(ny) == Saturday) ny += days{2};
    else if (wd(ny) == Sunday) ny += days{1};
    out.push_back({ny, HolidayType::Christmas});
    const Date easter = easter_sunday(y);
    out.push_back({easter - days{2}, HolidayType::Easter});
    out.push_back({easter + days{1}, HolidayType::Easter});
    out.push_back({first_monday(y, 5), HolidayType::Other});
    out.push_back({last_monday(y, 5), HolidayType::Other});
    out.push_back({last_monday(y, 8), HolidayType::Other});
    const Date xmas = sys_days{year{y} / December / 25};
    Date c = xmas, b = xmas + days{1};
    if (wd(xmas) == Saturday) {
      c = xmas + days{2};
      b = xmas + days{3};
    } else if (wd(xmas) == Sunday) {
      b = xmas + days{1};
      c = xmas + days{2};
    } else if (wd(xmas) == Friday) {
      b = xmas + days{3};
    }
    out.push_back({std::min(c, b), HolidayType::Christmas});
    out.push_back({std::max(c, b), HolidayType::Christmas});
  }
  std::sort(out.begin(), out.end(), [](const Holiday& a, const Holiday& b) { return a.date < b.date; });
  return out;
}

std::vector<Vec2> sinusoidal_cwv(Date first_day, int n_days, const CwvScenario& sc, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x57);
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(std::max(n_days, 0)));
  const double innov = sc.noise_sd * std::sqrt(1.0 - sc.noise_ar * sc.noise_ar);
  const double c = sc.region_corr, s = std::sqrt(1.0 - c * c);
  double z1 = sc.noise_sd * standard_normal(rng);
  double z2 = c * z1 + s * sc.noise_sd * standard_normal(rng);
  for (int t = 0; t < n_days; ++t) {
    const Date d = first_day + days{t};
    const double phase = 2.0 * std::numbers::pi * (day_of_year_slot(d) - sc.coldest_day_of_year) / 365.25;
    out.push_back({sc.level[0] + sc.amplitude[0] * std::cos(phase) + z1,
                   sc.level[1] + sc.amplitude[1] * std::cos(phase) + z2});
    const double e1 = standard_normal(rng), e2 = c * e1 + s * standard_normal(rng);
    z1 = sc.noise_ar * z1 + innov * e1;
    z2 = sc.noise_ar * z2 + innov * e2;
  }
  return out;
}

SyntheticInputs synthetic_inputs(Date first_day, int n_days, std::uint64_t seed, const CwvScenario& scenario) {
  if (n_days < 365) throw std::invalid_argument("synthetic runs need at least a year to build the CWV baseline");
  SyntheticInputs in;
  const int y0 = static_cast<int>(year_month_day{first_day}.year()) - 1;
  const int y1 = static_cast<int>(year_month_day{first_day + days{n_days}}.year()) + 1;
  in.calendar = HolidayCalendar(uk_bank_holidays(y0, y1));
  for (int t = 0; t < n_days; ++t) in.dates.push_back(first_day + days{t});
  in.cwv = sinusoidal_cwv(first_day, n_days, scenario, seed);
  in.baseline = smooth_cwv_baseline(in.dates, in.cwv);
  in.cov = build_covariates(first_day, in.cwv, in.calendar, in.baseline);
  return in;
}

ModelParams reference_truth(int k_gamma, int k_kappa) {
  ModelParams p(k_gamma, k_kappa);
  auto& tr = p.transition;
  tr.nu41_1 = -0.2;
  tr.nu41_2 = -20.5;
  tr.nu34_1 = 0.2;
  tr.nu34_2 = 20.5;
  tr.nu34_3 = 0.4;
  tr.nu23_1 = 0.6;
  tr.nu23_2 = -0.4;
  auto& em = p.emission;
  em.xi = {0.8, 0.7};
  em.alpha = {6.0, 5.5};
  em.beta = {{{-0.45, -0.6, -0.7}, {-0.4, -0.55, -0.65}}};
  if (k_gamma >= 1) {
    em.gamma.at(0, 0, 0) = 0.30;
    em.gamma.at(0, 1, 0) = 0.10;
    em.gamma.at(1, 0, 0) = 0.28;
    em.gamma.at(1, 1, 0) = 0.08;
  }
  if (k_gamma >= 2) {
    em.gamma.at(0, 0, 1) = 0.05;
    em.gamma.at(1, 0, 1) = 0.04;
  }
  em.delta.at(0, 0, 0) = 0.06;
  em.delta.at(0, 1, 0) = -0.08;
  em.delta.at(0, 0, 1) = 0.02;
  em.delta.at(1, 0, 0) = 0.05;
  em.delta.at(1, 1, 0) = -0.07;
  em.delta.at(1, 1, 1) = 0.015;
  em.zeta = {{{0.030, 0.0010}, {0.025, 0.0008}}};
  em.rho_beta = {0.7, 0.65};
  em.rho_theta = 0.5;
  em.eta = {0.5, 6.4, 6.2};
  em.theta = {0.2, -1.2, -1.0};
  if (k_kappa >= 1) {
    em.kappa.at(1, 0, 0) = 0.3;
    em.kappa.at(2, 0, 0) = 0.25;
  }
  auto& la = p.latents;
  la.mu_alpha = 5.75;
  la.mu_zeta = {0.027, 0.0009};
  la.mu_beta = {-0.42, -0.57, -0.67};
  if (k_gamma >= 1) la.mu_gamma.at(0, 0, 0) = 0.29;
  la.mu_delta.at(0, 0, 0) = 0.055;
  la.mu_delta.at(0, 1, 0) = -0.075;
  la.rho_tilde_beta = 0.75;
  la.mu_rho_tilde = 0.5;
  return p;
}

}  // namespace nhmm
