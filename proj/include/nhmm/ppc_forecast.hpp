#pragma once

// Posterior predictive replication, coverage by distance to the nearest holiday, and forecasting.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nhmm/generative.hpp"
#include "nhmm/inference.hpp"

namespace nhmm {

using Replicates = std::vector<std::vector<Vec2>>;  // [draw][day]

/// One unconditional replicate of the whole series per draw. Draw i uses RNG stream i of `seed`,
/// so the result does not depend on `threads`.
Replicates posterior_predictive_replicates(std::span<const ModelParams> draws, const CovariateSeries& cov,
                                           ModelMode mode, std::uint64_t seed, unsigned threads = 1);

/// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(std::vector<double> values, double q);

struct DayPrediction {
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

/// Gap buckets 0..9 individually, then 10 and above together.
inline constexpr int kGapBuckets = 11;
int gap_bucket(int n, int p);
std::string gap_label(int bucket);

struct GapCoverage {
  int days = 0;
  int outside = 0;
  double mean_error = 0.0;  // observed - predictive mean, averaged over the bucket

  double fraction() const { return days > 0 ? static_cast<double>(outside) / days : 0.0; }
};

struct PpcSummary {
  std::vector<std::array<DayPrediction, 2>> days;  // per day and region
  std::vector<std::array<bool, 2>> outside;
  std::array<std::array<GapCoverage, 2>, kGapBuckets> by_gap{};  // [bucket][region]
  std::array<GapCoverage, 2> overall{};
  int replicates = 0;
};

/// Throws std::invalid_argument with fewer than 40 replicates or misaligned inputs.
PpcSummary coverage_by_gap(const Replicates& replicates, std::span<const Vec2> observed, const CovariateSeries& cov);

/// Log-scale per-day table: date, region, observed, pred_mean, pred_q025, pred_q975, outside95.
void write_ppc_csv(std::ostream& out, const PpcSummary& s, std::span<const Vec2> observed, const CovariateSeries& cov);
std::string ppc_report_json(const PpcSummary& s, ModelMode mode);

struct ForecastPaths {
  std::vector<std::vector<Vec2>> log_demand;  // [draw][h]
  std::vector<std::vector<int>> states;       // [draw][h]
};

/// For each draw: s_T from that draw's smoothed (= filtered) distribution at T, then the chain and
/// demand rolled forward over `future` (covariates for T+1..T+h, t_index continuing the history).
ForecastPaths forecast(std::span<const ModelParams> draws, const ModelData& history, const CovariateSeries& future,
                       ModelMode mode, std::uint64_t seed, unsigned threads = 1);

/// Per-day predictive summary of forecast paths, plus Pr(S = k) per day.
struct ForecastSummary {
  std::vector<std::array<DayPrediction, 2>> days;
  std::vector<std::array<double, 4>> state_probs;
};
ForecastSummary summarise_forecast(const ForecastPaths& paths);

/// date, region, pred_mean, pred_q025, pred_q975 on the log scale, then p_state1..p_state4.
void write_forecast_csv(std::ostream& out, const ForecastSummary& s, const CovariateSeries& future);

}  // namespace nhmm
