#include "nhmm/state_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "nhmm/error.hpp"
#include "nhmm/numeric.hpp"

namespace nhmm {

const char* mode_name(ModelMode m) { return m == ModelMode::FourState ? "four_state" : "two_state"; }

ModelMode parse_mode(const char* text) {
  if (std::strcmp(text, "four_state") == 0) return ModelMode::FourState;
  if (std::strcmp(text, "two_state") == 0) return ModelMode::TwoState;
  throw InputError(std::string("unknown model mode '") + text + "' (expected four_state or two_state)");
}

double clamped_sigmoid(double logit) { return inv_logit(std::clamp(logit, -kLogitClamp, kLogitClamp)); }

double logit_lambda_41(const TransitionParams& nu, int n) {
  if (n < 1) throw std::invalid_argument("lambda_41 is undefined on a holiday (n = 0)");
  return nu.nu41_1 + nu.nu41_2 * std::sqrt(static_cast<double>(n - 1)) / 10.0;
}

double logit_lambda_34(const TransitionParams& nu, int n, int p) {
  if (p < 2) throw std::invalid_argument("lambda_34 needs p >= 2");
  return nu.nu34_1 + nu.nu34_2 * std::sqrt(static_cast<double>(p - 2)) / 10.0 + (n == 1 ? nu.nu34_3 : 0.0);
}

double logit_lambda_23(const TransitionParams& nu, int n) {
  if (n < 1) throw std::invalid_argument("lambda_23 is undefined on a holiday (n = 0)");
  return nu.nu23_1 + (n == 2 ? nu.nu23_2 : 0.0);
}

TransitionMatrix transition_matrix(const TransitionParams& nu, int n, int p, ModelMode mode) {
  TransitionMatrix m{};
  if (n == 0 && p == 0) {
    for (auto& row : m) row[1] = 1.0;
    return m;
  }
  if (mode == ModelMode::TwoState) {
    for (auto& row : m) row[3] = 1.0;
    return m;
  }
  const double l41 = clamped_sigmoid(logit_lambda_41(nu, n));
  const double l23 = clamped_sigmoid(logit_lambda_23(nu, n));
  // Row 3 is unreachable at p = 1 (state 3 yesterday implies p >= 2 today); extend by sqrt(max(p-2,0)).
  const double a34 = p >= 2 ? logit_lambda_34(nu, n, p) : nu.nu34_1 + (n == 1 ? nu.nu34_3 : 0.0);
  const double l34 = clamped_sigmoid(a34);
  m[0] = {1.0, 0.0, 0.0, 0.0};
  m[1] = {0.0, 0.0, l23, 1.0 - l23};
  m[2] = {0.0, 0.0, 1.0 - l34, l34};
  m[3] = {l41, 0.0, 0.0, 1.0 - l41};
  return m;
}

StateDistribution initial_distribution(int n0, int p0, ModelMode mode) {
  StateDistribution d;
  if (n0 == 0 && p0 == 0) {
    d.probs = {0.0, 1.0, 0.0, 0.0};
  } else if (mode == ModelMode::TwoState) {
    d.probs = {0.0, 0.0, 0.0, 1.0};
  } else {
    d.probs = {1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0};
  }
  return d;
}

AugmentedMatrix augmented_transition_matrix(const TransitionParams& nu, int n, int p, ModelMode mode) {
  const TransitionMatrix base = transition_matrix(nu, n, p, mode);
  AugmentedMatrix out{};
  for (int from = 0; from < kNumPairs; ++from) {
    const int b = kAugmentedPairs[static_cast<std::size_t>(from)].curr;
    for (int to = 0; to < kNumPairs; ++to) {
      const auto& q = kAugmentedPairs[static_cast<std::size_t>(to)];
      if (q.prev == b) {
        out[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)] =
            base[static_cast<std::size_t>(b - 1)][static_cast<std::size_t>(q.curr - 1)];
      }
    }
  }
  return out;
}

}  // namespace nhmm
