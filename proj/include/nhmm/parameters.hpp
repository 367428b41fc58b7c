#pragma once

// Model parameter containers (transition logits, emission parameters, hierarchical latents)
// and the single visitor that fixes their flat ordering, names and constraining transforms.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace nhmm {

/// Logit-scale coefficients of the three free transition probabilities.
struct TransitionParams {
  double nu41_1 = 0.0;  // into pre-holiday, intercept (tomorrow is a holiday)
  double nu41_2 = 0.0;  // into pre-holiday, slope in sqrt(n-1)/10
  double nu34_1 = 0.0;  // out of post-holiday after a one-day stay
  double nu34_2 = 0.0;  // slope in sqrt(p-2)/10
  double nu34_3 = 0.0;  // tomorrow-is-a-holiday indicator
  double nu23_1 = 0.0;  // into post-holiday, intercept
  double nu23_2 = 0.0;  // two-day bridge indicator (n = 2)
};

/// Cosine/sine coefficients for `groups` independent Fourier series of `harmonics` terms each.
class FourierCoeffs {
 public:
  FourierCoeffs() = default;
  FourierCoeffs(int groups, int harmonics)
      : groups_(groups), harmonics_(harmonics), v_(static_cast<std::size_t>(2 * groups * harmonics), 0.0) {}

  int groups() const { return groups_; }
  int harmonics() const { return harmonics_; }

  /// m = 0 for cosine, 1 for sine; k is 0-based.
  double& at(int g, int m, int k) { return v_[index(g, m, k)]; }
  double at(int g, int m, int k) const { return v_[index(g, m, k)]; }

  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

 private:
  std::size_t index(int g, int m, int k) const {
    return static_cast<std::size_t>((g * 2 + m) * harmonics_ + k);
  }
  int groups_ = 0;
  int harmonics_ = 0;
  std::vector<double> v_;
};

inline constexpr int kDefaultKGamma = 6;
inline constexpr int kDefaultKKappa = 12;

/// Parameters of the conditional demand model. Regions and holiday types are 0-based here.
struct EmissionParams {
  EmissionParams() : EmissionParams(kDefaultKGamma, kDefaultKKappa) {}
  EmissionParams(int k_gamma, int k_kappa) : gamma(2, k_gamma), delta(2, 3), kappa(3, k_kappa) {}

  int k_gamma() const { return gamma.harmonics(); }
  int k_kappa() const { return kappa.harmonics(); }

  std::array<double, 2> xi{0.5, 0.5};                // stationarity reparameterisation of Psi
  std::array<double, 2> alpha{};                     // intercepts
  std::array<std::array<double, 3>, 2> beta{};       // holiday effects [region][type]
  FourierCoeffs gamma;                               // annual mean harmonics, 2 regions
  FourierCoeffs delta;                               // weekly harmonics, 2 regions x 3
  std::array<std::array<double, 2>, 2> zeta{};       // [region][linear, interaction]
  std::array<double, 2> rho_beta{0.5, 0.5};          // proximity decay in the mean
  double rho_theta = 0.5;                            // proximity decay in the precision
  std::array<double, 3> eta{};                       // precision intercepts (phi, ln tau1, ln tau2)
  std::array<double, 3> theta{};                     // precision holiday effects
  FourierCoeffs kappa;                               // annual precision harmonics, 3 components
};

/// Hyperprior means carried as explicit latent parameters.
struct HyperLatents {
  HyperLatents() : HyperLatents(kDefaultKGamma) {}
  explicit HyperLatents(int k_gamma) : mu_delta(1, 3), mu_gamma(1, k_gamma) {}

  double mu_alpha = 0.0;
  std::array<double, 2> mu_zeta{};
  FourierCoeffs mu_delta;  // 1 group x 3 harmonics
  FourierCoeffs mu_gamma;  // 1 group x K_gamma harmonics
  std::array<double, 3> mu_beta{};
  double rho_tilde_beta = 0.0;
  double mu_rho_tilde = 0.0;
};

struct ModelParams {
  ModelParams() = default;
  ModelParams(int k_gamma, int k_kappa) : emission(k_gamma, k_kappa), latents(k_gamma) {}

  TransitionParams transition;
  EmissionParams emission;
  HyperLatents latents;

  int k_gamma() const { return emission.k_gamma(); }
  int k_kappa() const { return emission.k_kappa(); }
};

/// How a scalar maps to the unconstrained sampling space.
enum class Transform { Identity, Logit };

/// Parameter block, used for blockwise Metropolis updates and name prefixes.
enum class Block { Nu, Xi, Alpha, Beta, Gamma, Delta, Zeta, Rho, Eta, Theta, Kappa, Latent };

const char* block_name(Block b);

/// Descriptor of one scalar. Indices are 1-based in names; unused indices are 0.
struct ParamTag {
  Block block;
  const char* stem;
  int i = 0;
  int j = 0;
  int k = 0;
  Transform transform = Transform::Identity;
};

std::string param_name(const ParamTag& tag);

/// Calls f(const ParamTag&, double&) for every scalar in the fixed canonical order.
template <class Params, class F>
void for_each_param(Params& p, F&& f) {
  auto& tr = p.transition;
  f(ParamTag{Block::Nu, "nu_41_1"}, tr.nu41_1);
  f(ParamTag{Block::Nu, "nu_41_2"}, tr.nu41_2);
  f(ParamTag{Block::Nu, "nu_34_1"}, tr.nu34_1);
  f(ParamTag{Block::Nu, "nu_34_2"}, tr.nu34_2);
  f(ParamTag{Block::Nu, "nu_34_3"}, tr.nu34_3);
  f(ParamTag{Block::Nu, "nu_23_1"}, tr.nu23_1);
  f(ParamTag{Block::Nu, "nu_23_2"}, tr.nu23_2);

  auto& em = p.emission;
  for (int i = 0; i < 2; ++i) f(ParamTag{Block::Xi, "xi", i + 1, 0, 0, Transform::Logit}, em.xi[i]);
  for (int j = 0; j < 2; ++j) f(ParamTag{Block::Alpha, "alpha", j + 1}, em.alpha[j]);
  for (int j = 0; j < 2; ++j)
    for (int r = 0; r < 3; ++r) f(ParamTag{Block::Beta, "beta", j + 1, r + 1}, em.beta[j][r]);
  for (int j = 0; j < 2; ++j)
    for (int m = 0; m < 2; ++m)
      for (int k = 0; k < em.gamma.harmonics(); ++k)
        f(ParamTag{Block::Gamma, m == 0 ? "gamma_cos" : "gamma_sin", j + 1, k + 1}, em.gamma.at(j, m, k));
  for (int j = 0; j < 2; ++j)
    for (int m = 0; m < 2; ++m)
      for (int k = 0; k < 3; ++k)
        f(ParamTag{Block::Delta, m == 0 ? "delta_cos" : "delta_sin", j + 1, k + 1}, em.delta.at(j, m, k));
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) f(ParamTag{Block::Zeta, "zeta", j + 1, i + 1}, em.zeta[j][i]);
  for (int j = 0; j < 2; ++j) f(ParamTag{Block::Rho, "rho_beta", j + 1, 0, 0, Transform::Logit}, em.rho_beta[j]);
  f(ParamTag{Block::Rho, "rho_theta", 0, 0, 0, Transform::Logit}, em.rho_theta);
  for (int i = 0; i < 3; ++i) f(ParamTag{Block::Eta, "eta", i + 1}, em.eta[i]);
  for (int i = 0; i < 3; ++i) f(ParamTag{Block::Theta, "theta", i + 1}, em.theta[i]);
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 2; ++m)
      for (int k = 0; k < em.kappa.harmonics(); ++k)
        f(ParamTag{Block::Kappa, m == 0 ? "kappa_cos" : "kappa_sin", i + 1, k + 1}, em.kappa.at(i, m, k));

  auto& la = p.latents;
  f(ParamTag{Block::Latent, "mu_alpha"}, la.mu_alpha);
  for (int i = 0; i < 2; ++i) f(ParamTag{Block::Latent, "mu_zeta", i + 1}, la.mu_zeta[i]);
  for (int m = 0; m < 2; ++m)
    for (int k = 0; k < 3; ++k)
      f(ParamTag{Block::Latent, m == 0 ? "mu_delta_cos" : "mu_delta_sin", k + 1}, la.mu_delta.at(0, m, k));
  for (int m = 0; m < 2; ++m)
    for (int k = 0; k < la.mu_gamma.harmonics(); ++k)
      f(ParamTag{Block::Latent, m == 0 ? "mu_gamma_cos" : "mu_gamma_sin", k + 1}, la.mu_gamma.at(0, m, k));
  for (int r = 0; r < 3; ++r) f(ParamTag{Block::Latent, "mu_beta", r + 1}, la.mu_beta[r]);
  f(ParamTag{Block::Latent, "rho_tilde_beta"}, la.rho_tilde_beta);
  f(ParamTag{Block::Latent, "mu_rho_tilde"}, la.mu_rho_tilde);
}

/// Names, blocks and transforms of the flat parameter vector for given Fourier truncations.
struct ParamLayout {
  int k_gamma = kDefaultKGamma;
  int k_kappa = kDefaultKKappa;
  std::vector<ParamTag> tags;
  std::vector<std::string> names;

  static ParamLayout make(int k_gamma, int k_kappa);
  std::size_t size() const { return tags.size(); }
  /// Index of `name`, or size() if absent.
  std::size_t find(const std::string& name) const;
};

/// Natural-space values in canonical order.
std::vector<double> to_vector(const ModelParams& p);
ModelParams from_vector(const std::vector<double>& v, int k_gamma, int k_kappa);

/// Map to the unconstrained space (logit for xi and rho). Throws std::domain_error at the boundary.
std::vector<double> unconstrain(const ModelParams& p);

/// Inverse of unconstrain; `log_jacobian` receives ln |d constrained / d unconstrained|.
ModelParams constrain(const std::vector<double>& u, int k_gamma, int k_kappa, double* log_jacobian = nullptr);

/// True if xi and rho lie strictly inside (0,1) and all values are finite.
bool in_support(const ModelParams& p);

}  // namespace nhmm
