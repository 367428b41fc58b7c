#pragma once

// Non-homogeneous four-state chain: 1 pre-holiday, 2 holiday, 3 post-holiday, 4 normal.

#include <array>
#include <cstddef>
#include <utility>

#include "nhmm/parameters.hpp"

namespace nhmm {

inline constexpr int kNumStates = 4;
inline constexpr int kNumPairs = 11;

/// four_state is the proximity model; two_state drops states 1 and 3 structurally.
enum class ModelMode { FourState, TwoState };

const char* mode_name(ModelMode m);
/// Accepts "four_state" / "two_state"; throws InputError otherwise.
ModelMode parse_mode(const char* text);

/// Rows are the state on day t-1, columns the state on day t; states 1..4 stored at 0..3.
using TransitionMatrix = std::array<std::array<double, kNumStates>, kNumStates>;

struct StateDistribution {
  std::array<double, kNumStates> probs{};
};

struct StatePair {
  int prev;  // 1-based
  int curr;  // 1-based
};

/// Admissible (s_{t-1}, s_t) pairs in their fixed order.
inline constexpr std::array<StatePair, kNumPairs> kAugmentedPairs{{
    {1, 1}, {1, 2}, {2, 2}, {2, 3}, {2, 4}, {3, 2}, {3, 3}, {3, 4}, {4, 1}, {4, 2}, {4, 4},
}};

/// Index into kAugmentedPairs, or -1 if the pair is never admissible.
constexpr int pair_index(int prev, int curr) {
  for (int k = 0; k < kNumPairs; ++k) {
    if (kAugmentedPairs[static_cast<std::size_t>(k)].prev == prev &&
        kAugmentedPairs[static_cast<std::size_t>(k)].curr == curr)
      return k;
  }
  return -1;
}

using AugmentedMatrix = std::array<std::array<double, kNumPairs>, kNumPairs>;

/// Logistic function with the logit clamped to +/-35 before exponentiation.
double clamped_sigmoid(double logit);

/// nu41_1 + nu41_2 sqrt(n-1)/10. Requires n >= 1.
double logit_lambda_41(const TransitionParams& nu, int n);
/// nu34_1 + nu34_2 sqrt(p-2)/10 + nu34_3 I(n=1). Requires p >= 2.
double logit_lambda_34(const TransitionParams& nu, int n, int p);
/// nu23_1 + nu23_2 I(n=2). Requires n >= 1.
double logit_lambda_23(const TransitionParams& nu, int n);

/// Transition matrix into a day with calendar position (n, p).
TransitionMatrix transition_matrix(const TransitionParams& nu, int n, int p,
                                   ModelMode mode = ModelMode::FourState);

/// Distribution of S_0 given the calendar position of day 0.
StateDistribution initial_distribution(int n0, int p0, ModelMode mode = ModelMode::FourState);

/// Transition matrix of the pair chain (S_{t-1}, S_t) into day t.
AugmentedMatrix augmented_transition_matrix(const TransitionParams& nu, int n, int p,
                                            ModelMode mode = ModelMode::FourState);

}  // namespace nhmm
