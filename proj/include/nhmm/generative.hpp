#pragma once

// Forward simulation of states and log demand, plus synthetic calendars and weather for tests.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nhmm/calendar.hpp"
#include "nhmm/emission.hpp"
#include "nhmm/parameters.hpp"
#include "nhmm/random.hpp"
#include "nhmm/state_model.hpp"

namespace nhmm {

struct SimulationOutput {
  std::vector<int> states;        // s_0..s_T, 1-based
  std::vector<Vec2> log_demand;   // days 1..T
  CovariateSeries cov;
};

/// s_0 ~ l(n_0, p_0), then the chain forward; y_1 from the stationary law, later days from the VAR(1).
SimulationOutput simulate(const ModelParams& params, const CovariateSeries& cov, std::uint64_t seed,
                          ModelMode mode = ModelMode::FourState);
SimulationOutput simulate(const ModelParams& params, const CovariateSeries& cov, Rng& rng,
                          ModelMode mode = ModelMode::FourState);
/// As above with a precomputed seasonal basis per day.
SimulationOutput simulate(const ModelParams& params, const CovariateSeries& cov, std::span<const SeasonalBasis> basis,
                          Rng& rng, ModelMode mode);

/// Where a forward simulation continues from: the last observed day and its state.
struct SimulationAnchor {
  Vec2 y;
  DayCovariates day;
  SeasonalBasis basis;
  int state;
};

/// Rolls the chain and demand over `days` starting from `anchor`. Returns states and demand for those days.
void simulate_forward(const ModelParams& params, std::span<const DayCovariates> days,
                      std::span<const SeasonalBasis> basis, const SimulationAnchor& anchor, Rng& rng, ModelMode mode,
                      std::vector<int>& states, std::vector<Vec2>& log_demand);

/// One draw of the innovation N(0, Omega^{-1}).
Vec2 draw_innovation(const PrecisionComponents& pc, Rng& rng);

/// Gregorian Easter Sunday.
Date easter_sunday(int year);

/// England and Wales bank holidays with weekend substitution, typed Easter (Good Friday, Easter
/// Monday), Christmas (Christmas, Boxing Day, New Year) or Other (May and August).
std::vector<Holiday> uk_bank_holidays(int first_year, int last_year);

/// Annual sinusoid plus AR(1) noise, larger in winter.
struct CwvScenario {
  std::array<double, 2> level{10.0, 9.5};
  std::array<double, 2> amplitude{6.0, 5.5};
  int coldest_day_of_year = 20;
  double noise_sd = 1.5;
  double noise_ar = 0.7;
  double region_corr = 0.8;
};

std::vector<Vec2> sinusoidal_cwv(Date first_day, int n_days, const CwvScenario& scenario, std::uint64_t seed);

/// Calendar, weather, baseline and covariates for a synthetic run of `n_days` starting at `first_day`.
/// The baseline is smoothed from the weather itself.
struct SyntheticInputs {
  HolidayCalendar calendar;
  std::vector<Date> dates;
  std::vector<Vec2> cwv;
  SeasonalCwvBaseline baseline;
  CovariateSeries cov;
};

SyntheticInputs synthetic_inputs(Date first_day, int n_days, std::uint64_t seed, const CwvScenario& scenario = {});

/// Documented parameter set with clear proximity effects, used by the recovery checks and `simulate`.
ModelParams reference_truth(int k_gamma = kDefaultKGamma, int k_kappa = kDefaultKKappa);

}  // namespace nhmm
