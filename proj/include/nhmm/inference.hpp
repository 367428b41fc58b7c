#pragma once

// Forward filtering and backward smoothing on the augmented pair chain (S_{t-1}, S_t),
// plus the exact score of the observed-data log-likelihood.

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "nhmm/calendar.hpp"
#include "nhmm/emission.hpp"
#include "nhmm/parameters.hpp"
#include "nhmm/state_model.hpp"

namespace nhmm {

/// Log demand aligned with its covariates, with the seasonal basis cached per day.
struct ModelData {
  std::vector<Vec2> y;  // ln demand, days 1..T
  CovariateSeries cov;
  std::vector<SeasonalBasis> basis;
  int annual_harmonics = 0;

  /// Throws InputError when lengths differ, T = 0, or y contains non-finite values.
  static ModelData make(std::vector<Vec2> log_demand, CovariateSeries cov,
                        int annual_harmonics = std::max(kDefaultKGamma, kDefaultKKappa));

  std::size_t size() const { return y.size(); }
};

using PairVector = std::array<double, kNumPairs>;

struct ForwardMessages {
  ModelMode mode = ModelMode::FourState;
  std::vector<PairVector> log_filtered;  // ln Pr(pair_t = k | y_{1:t})
  std::vector<double> log_increment;     // ln p(y_t | y_{1:t-1})
  std::vector<PairVector> log_local;     // ln lambda + ln emission for pair k on day t

  std::size_t size() const { return log_filtered.size(); }
  /// ln Pr(pair_t = k, y_{1:t}), t is 0-based over days 1..T.
  PairVector log_joint(std::size_t t) const;
};

struct FilterResult {
  double log_likelihood = 0.0;
  ForwardMessages messages;
};

FilterResult forward_filter(const ModelData& data, const ModelParams& params,
                            ModelMode mode = ModelMode::FourState);
/// forward_filter(...).log_likelihood without keeping the messages.
double log_likelihood(const ModelData& data, const ModelParams& params, ModelMode mode = ModelMode::FourState);

/// Pr(S_t = k | y) for t = 0..T (entry 0 is day 0).
struct SmoothedStates {
  std::vector<std::array<double, kNumStates>> probs;

  std::size_t size() const { return probs.size(); }
};

/// Smoothed pair marginals Pr(pair_t = k | y), days 1..T.
std::vector<PairVector> smooth_pairs(const ForwardMessages& messages);

SmoothedStates backward_smooth(const ForwardMessages& messages);

/// Validating overload: `data` and `params` must be the ones the messages were built from.
SmoothedStates backward_smooth(const ForwardMessages& messages, const ModelData& data, const ModelParams& params);

/// Observed-data log-likelihood and its gradient with respect to the natural parameters
/// (xi and rho on (0,1)); the gradient is added into `grad`.
double log_likelihood_gradient(const ModelData& data, const ModelParams& params, ModelMode mode, ModelParams& grad);

/// Mean over draws of per-draw smoothed marginals. Draws are filtered on up to `threads` threads.
SmoothedStates rao_blackwell_states(std::span<const ModelParams> draws, const ModelData& data,
                                    ModelMode mode = ModelMode::FourState, unsigned threads = 1);

/// Pointwise most probable state per day (1-based), t = 0..T.
std::vector<int> pointwise_mode(const SmoothedStates& s);

}  // namespace nhmm
