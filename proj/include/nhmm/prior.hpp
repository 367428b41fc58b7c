#pragma once

// Hierarchical prior over transition logits, emission parameters and hyperprior means.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nhmm/parameters.hpp"
#include "nhmm/random.hpp"

namespace nhmm {

struct NormalPrior {
  double mean = 0.0;
  double var = 1.0;
};

/// Every prior constant. Correlations r_* are in (0,1); `beta_type_corr` is the off-diagonal
/// correlation of the compound symmetric V_beta.
struct Hyperparameters {
  int k_gamma = kDefaultKGamma;
  int k_kappa = kDefaultKKappa;

  std::array<NormalPrior, 7> nu{};  // order of TransitionParams
  std::array<double, 2> xi_a{2.0, 2.0};
  std::array<double, 2> xi_b{2.0, 2.0};

  NormalPrior alpha{0.0, 100.0};
  double alpha_corr = 0.5;
  std::array<NormalPrior, 2> zeta{};
  std::array<double, 2> zeta_corr{0.5, 0.5};
  double delta_var = 1.0;
  double delta_corr = 0.5;
  std::vector<double> gamma_var;  // non-increasing, size k_gamma
  double gamma_corr = 0.5;
  double beta_var = 1.0;
  double beta_type_corr = 0.5;
  double beta_corr = 0.5;
  NormalPrior rho_tilde{0.0, 1.0};
  double rho_corr1 = 0.8;
  double rho_corr2 = 0.5;
  std::array<NormalPrior, 3> eta{};
  std::array<double, 3> theta_var{1.0, 1.0, 1.0};
  std::array<std::vector<double>, 3> kappa_var;  // size k_kappa each

  /// Throws InputError describing the first violated invariant.
  void validate() const;
};

enum class PriorPreset { Weak, PaperLike };

/// Documented defaults. Weak: every nu ~ N(0, 1). Paper-like: nu means chosen so proximity
/// states concentrate within about two days of a holiday.
Hyperparameters default_hyperparameters(PriorPreset preset, int k_gamma = kDefaultKGamma,
                                        int k_kappa = kDefaultKKappa);

/// Flat `key = value` configuration; '#' starts a comment. Keys keep file order.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap parse_config_text(const std::string& text);

/// Builds hyperparameters from the prior keys of `config`, erasing each key it consumes.
/// `preset`, `k_gamma` and `k_kappa` are read first; the rest override preset values.
Hyperparameters hyperparameters_from_config(ConfigMap& config);

/// ln pi(Pi, Lambda, latents). -inf outside the support. When `grad` is non-null, the gradient
/// with respect to the natural parameters (rho and xi on (0,1)) is added into it.
double log_prior(const ModelParams& params, const Hyperparameters& hyper, ModelParams* grad = nullptr);

/// Exact draw from the prior.
ModelParams sample_prior(const Hyperparameters& hyper, Rng& rng);
ModelParams sample_prior(const Hyperparameters& hyper, std::uint64_t seed);

}  // namespace nhmm
