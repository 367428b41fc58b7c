#include "nhmm/prior.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <optional>
#include <sstream>

#include "nhmm/error.hpp"
#include "nhmm/numeric.hpp"

namespace nhmm {

namespace {

constexpr std::array<const char*, 7> kNuNames{"nu_41_1", "nu_41_2", "nu_34_1", "nu_34_2",
                                              "nu_34_3", "nu_23_1", "nu_23_2"};

std::array<double*, 7> nu_fields(TransitionParams& t) {
  return {&t.nu41_1, &t.nu41_2, &t.nu34_1, &t.nu34_2, &t.nu34_3, &t.nu23_1, &t.nu23_2};
}
std::array<const double*, 7> nu_fields(const TransitionParams& t) {
  return {&t.nu41_1, &t.nu41_2, &t.nu34_1, &t.nu34_2, &t.nu34_3, &t.nu23_1, &t.nu23_2};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw InputError("invalid hyperparameters: " + what);
}

bool unit_open(double r) { return r > 0.0 && r < 1.0; }

/// ln N(x; m, v); adds d/dx and d/dm when the pointers are set.
double normal_term(double x, double m, double v, double* gx, double* gm) {
  const double d = x - m;
  if (gx) *gx -= d / v;
  if (gm) *gm += d / v;
  return -0.5 * (kLog2Pi + std::log(v) + d * d / v);
}

/// Compound symmetric covariance s [(1-c) I + c J] in closed form.
struct CompoundSymmetric {
  double s;
  double c;

  double log_det() const { return std::log(s * s * s * (1.0 - c) * (1.0 - c) * (1.0 + 2.0 * c)); }

  std::array<double, 3> solve(const std::array<double, 3>& d) const {
    const double sum = d[0] + d[1] + d[2];
    const double f = c / (1.0 + 2.0 * c);
    const double scale = 1.0 / (s * (1.0 - c));
    return {scale * (d[0] - f * sum), scale * (d[1] - f * sum), scale * (d[2] - f * sum)};
  }

  /// Lower Cholesky factor.
  std::array<std::array<double, 3>, 3> cholesky() const {
    std::array<std::array<double, 3>, 3> a{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a[i][j] = s * (i == j ? 1.0 : c);
    std::array<std::array<double, 3>, 3> l{};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j <= i; ++j) {
        double sum = a[i][j];
        for (int k = 0; k < j; ++k) sum -= l[i][k] * l[j][k];
        l[i][j] = i == j ? std::sqrt(sum) : sum / l[j][j];
      }
    }
    return l;
  }
};

double mvn3_term(const std::array<double, 3>& x, const std::array<double, 3>& m, const CompoundSymmetric& cov,
                 std::array<double, 3>* gx, std::array<double, 3>* gm) {
  const std::array<double, 3> d{x[0] - m[0], x[1] - m[1], x[2] - m[2]};
  const auto sd = cov.solve(d);
  for (int i = 0; i < 3; ++i) {
    if (gx) (*gx)[i] -= sd[i];
    if (gm) (*gm)[i] += sd[i];
  }
  return -0.5 * (3.0 * kLog2Pi + cov.log_det() + d[0] * sd[0] + d[1] * sd[1] + d[2] * sd[2]);
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "': '" + value + "' is not a number");
  }
}

int parse_int_value(const std::string& key, const std::string& value) {
  const double v = parse_number(key, value);
  if (v != std::floor(v) || v < 1 || v > 100) throw InputError("config key '" + key + "' must be a positive integer");
  return static_cast<int>(v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Hyperparameters::validate() const {
  require(k_gamma >= 1 && k_kappa >= 1, "Fourier truncations must be >= 1");
  for (std::size_t i = 0; i < nu.size(); ++i) {
    require(nu[i].var > 0.0 && nu[i].var <= 1.0,
            std::string(kNuNames[i]) + ".var must lie in (0, 1] to keep the logit-normal unimodal");
  }
  for (int i = 0; i < 2; ++i) require(xi_a[i] > 0.0 && xi_b[i] > 0.0, "xi beta shapes must be positive");
  require(alpha.var > 0.0 && unit_open(alpha_corr), "alpha");
  for (int i = 0; i < 2; ++i) require(zeta[i].var > 0.0 && unit_open(zeta_corr[i]), "zeta");
  require(delta_var > 0.0 && unit_open(delta_corr), "delta");
  require(static_cast<int>(gamma_var.size()) == k_gamma, "gamma.var needs k_gamma entries");
  for (std::size_t k = 0; k < gamma_var.size(); ++k) {
    require(gamma_var[k] > 0.0, "gamma variances must be positive");
    require(k == 0 || gamma_var[k] <= gamma_var[k - 1], "gamma variances must be non-increasing in k");
  }
  require(unit_open(gamma_corr), "gamma.corr");
  require(beta_var > 0.0 && unit_open(beta_type_corr) && unit_open(beta_corr), "beta");
  require(rho_tilde.var > 0.0 && unit_open(rho_corr1) && unit_open(rho_corr2), "rho");
  for (int i = 0; i < 3; ++i) {
    require(eta[i].var > 0.0 && theta_var[i] > 0.0, "eta/theta variances must be positive");
    require(static_cast<int>(kappa_var[i].size()) == k_kappa, "kappa.var needs k_kappa entries");
    for (double v : kappa_var[i]) require(v > 0.0, "kappa variances must be positive");
  }
}

Hyperparameters default_hyperparameters(PriorPreset preset, int k_gamma, int k_kappa) {
  Hyperparameters h;
  h.k_gamma = k_gamma;
  h.k_kappa = k_kappa;
  for (auto& n : h.nu) n = {0.0, 1.0};
  if (preset == PriorPreset::PaperLike) {
    // Entry into state 1 likely only on the last day or two before a holiday; exit from
    // state 3 after one or two days.
    h.nu = {{{-0.5, 1.0}, {-20.0, 1.0}, {0.5, 1.0}, {20.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}};
  }
  h.zeta = {{{0.0, 1.0}, {0.0, 1.0}}};
  h.eta = {{{0.0, 10.0}, {0.0, 10.0}, {0.0, 10.0}}};
  h.gamma_var.resize(static_cast<std::size_t>(k_gamma));
  for (int k = 1; k <= k_gamma; ++k) h.gamma_var[static_cast<std::size_t>(k - 1)] = 1.0 / (k * k);
  for (auto& kv : h.kappa_var) {
    kv.resize(static_cast<std::size_t>(k_kappa));
    for (int k = 1; k <= k_kappa; ++k) kv[static_cast<std::size_t>(k - 1)] = 1.0 / k;
  }
  return h;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw InputError("config line " + std::to_string(lineno) + ": empty key or value", lineno);
    if (!out.emplace(key, value).second) throw InputError("config key '" + key + "' given twice", lineno);
  }
  return out;
}

Hyperparameters hyperparameters_from_config(ConfigMap& config) {
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = config.find(key);
    if (it == config.end()) return std::nullopt;
    std::string v = it->second;
    config.erase(it);
    return v;
  };

  PriorPreset preset = PriorPreset::PaperLike;
  if (auto v = take("preset")) {
    if (*v == "weak") preset = PriorPreset::Weak;
    else if (*v == "paper-like") preset = PriorPreset::PaperLike;
    else throw InputError("config key 'preset' must be weak or paper-like");
  }
  int k_gamma = kDefaultKGamma, k_kappa = kDefaultKKappa;
  if (auto v = take("k_gamma")) k_gamma = parse_int_value("k_gamma", *v);
  if (auto v = take("k_kappa")) k_kappa = parse_int_value("k_kappa", *v);
  Hyperparameters h = default_hyperparameters(preset, k_gamma, k_kappa);

  std::map<std::string, std::function<void(double)>> setters;
  auto add = [&](const std::string& key, double* field) { setters[key] = [field](double v) { *field = v; }; };
  for (std::size_t i = 0; i < 7; ++i) {
    add(std::string(kNuNames[i]) + ".mean", &h.nu[i].mean);
    add(std::string(kNuNames[i]) + ".var", &h.nu[i].var);
  }
  for (int i = 0; i < 2; ++i) {
    const std::string s = std::to_string(i + 1);
    add("xi_" + s + ".a", &h.xi_a[i]);
    add("xi_" + s + ".b", &h.xi_b[i]);
    add("zeta_" + s + ".mean", &h.zeta[i].mean);
    add("zeta_" + s + ".var", &h.zeta[i].var);
    add("zeta_" + s + ".corr", &h.zeta_corr[i]);
  }
  add("alpha.mean", &h.alpha.mean);
  add("alpha.var", &h.alpha.var);
  add("alpha.corr", &h.alpha_corr);
  add("delta.var", &h.delta_var);
  add("delta.corr", &h.delta_corr);
  add("gamma.corr", &h.gamma_corr);
  for (int k = 0; k < k_gamma; ++k) add("gamma.var_" + std::to_string(k + 1), &h.gamma_var[static_cast<std::size_t>(k)]);
  setters["gamma.var"] = [&h](double v) {
    for (std::size_t k = 0; k < h.gamma_var.size(); ++k) h.gamma_var[k] = v / static_cast<double>((k + 1) * (k + 1));
  };
  add("beta.var", &h.beta_var);
  add("beta.type_corr", &h.beta_type_corr);
  add("beta.corr", &h.beta_corr);
  add("rho.mean", &h.rho_tilde.mean);
  add("rho.var", &h.rho_tilde.var);
  add("rho.corr_1", &h.rho_corr1);
  add("rho.corr_2", &h.rho_corr2);
  for (int i = 0; i < 3; ++i) {
    const std::string s = std::to_string(i + 1);
    add("eta_" + s + ".mean", &h.eta[i].mean);
    add("eta_" + s + ".var", &h.eta[i].var);
    add("theta_" + s + ".var", &h.theta_var[i]);
    for (int k = 0; k < k_kappa; ++k) add("kappa_" + s + ".var_" + std::to_string(k + 1), &h.kappa_var[i][static_cast<std::size_t>(k)]);
    setters["kappa_" + s + ".var"] = [&h, i](double v) {
      for (std::size_t k = 0; k < h.kappa_var[i].size(); ++k) h.kappa_var[i][k] = v / static_cast<double>(k + 1);
    };
  }
  setters["kappa.var"] = [&h](double v) {
    for (auto& kv : h.kappa_var)
      for (std::size_t k = 0; k < kv.size(); ++k) kv[k] = v / static_cast<double>(k + 1);
  };

  // Shorthands first so that per-harmonic keys override them.
  for (const char* shorthand : {"gamma.var", "kappa.var", "kappa_1.var", "kappa_2.var", "kappa_3.var"}) {
    if (auto v = take(shorthand)) setters[shorthand](parse_number(shorthand, *v));
  }
  for (auto it = config.begin(); it != config.end();) {
    auto s = setters.find(it->first);
    if (s == setters.end()) {
      ++it;
      continue;
    }
    s->second(parse_number(it->first, it->second));
    it = config.erase(it);
  }
  h.validate();
  return h;
}

double log_prior(const ModelParams& params, const Hyperparameters& h, ModelParams* grad) {
  if (!in_support(params)) return kNegInf;
  const auto& em = params.emission;
  const auto& la = params.latents;
  ModelParams* g = grad;
  double lp = 0.0;

  // Transition logits.
  {
    const auto x = nu_fields(params.transition);
    std::array<double*, 7> gx{};
    if (g) gx = nu_fields(g->transition);
    for (std::size_t i = 0; i < 7; ++i) lp += normal_term(*x[i], h.nu[i].mean, h.nu[i].var, g ? gx[i] : nullptr, nullptr);
  }

  // xi ~ Beta(a, b).
  for (int i = 0; i < 2; ++i) {
    const double x = em.xi[i], a = h.xi_a[i], b = h.xi_b[i];
    lp += (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    if (g) g->emission.xi[i] += (a - 1.0) / x - (b - 1.0) / (1.0 - x);
  }

  // alpha.
  {
    const double r = h.alpha_corr, v = h.alpha.var;
    for (int j = 0; j < 2; ++j) {
      lp += normal_term(em.alpha[j], la.mu_alpha, (1.0 - r) * v, g ? &g->emission.alpha[j] : nullptr,
                        g ? &g->latents.mu_alpha : nullptr);
    }
    lp += normal_term(la.mu_alpha, h.alpha.mean, r * v, g ? &g->latents.mu_alpha : nullptr, nullptr);
  }

  // zeta.
  for (int i = 0; i < 2; ++i) {
    const double r = h.zeta_corr[i], v = h.zeta[i].var;
    for (int j = 0; j < 2; ++j) {
      lp += normal_term(em.zeta[j][i], la.mu_zeta[i], (1.0 - r) * v, g ? &g->emission.zeta[j][i] : nullptr,
                        g ? &g->latents.mu_zeta[i] : nullptr);
    }
    lp += normal_term(la.mu_zeta[i], h.zeta[i].mean, r * v, g ? &g->latents.mu_zeta[i] : nullptr, nullptr);
  }

  // delta.
  for (int m = 0; m < 2; ++m) {
    for (int k = 0; k < 3; ++k) {
      const double r = h.delta_corr, v = h.delta_var;
      const double mu = la.mu_delta.at(0, m, k);
      for (int j = 0; j < 2; ++j) {
        lp += normal_term(em.delta.at(j, m, k), mu, (1.0 - r) * v, g ? &g->emission.delta.at(j, m, k) : nullptr,
                          g ? &g->latents.mu_delta.at(0, m, k) : nullptr);
      }
      lp += normal_term(mu, 0.0, r * v, g ? &g->latents.mu_delta.at(0, m, k) : nullptr, nullptr);
    }
  }

  // gamma.
  for (int m = 0; m < 2; ++m) {
    for (int k = 0; k < em.k_gamma(); ++k) {
      const double r = h.gamma_corr, v = h.gamma_var[static_cast<std::size_t>(k)];
      const double mu = la.mu_gamma.at(0, m, k);
      for (int j = 0; j < 2; ++j) {
        lp += normal_term(em.gamma.at(j, m, k), mu, (1.0 - r) * v, g ? &g->emission.gamma.at(j, m, k) : nullptr,
                          g ? &g->latents.mu_gamma.at(0, m, k) : nullptr);
      }
      lp += normal_term(mu, 0.0, r * v, g ? &g->latents.mu_gamma.at(0, m, k) : nullptr, nullptr);
    }
  }

  // beta_j | mu_beta ~ N3(mu_beta, (1-r) V), mu_beta ~ N3(0, r V).
  {
    const CompoundSymmetric within{(1.0 - h.beta_corr) * h.beta_var, h.beta_type_corr};
    const CompoundSymmetric top{h.beta_corr * h.beta_var, h.beta_type_corr};
    for (int j = 0; j < 2; ++j) {
      lp += mvn3_term(em.beta[j], la.mu_beta, within, g ? &g->emission.beta[j] : nullptr,
                      g ? &g->latents.mu_beta : nullptr);
    }
    lp += mvn3_term(la.mu_beta, {0.0, 0.0, 0.0}, top, g ? &g->latents.mu_beta : nullptr, nullptr);
  }

  // Asymmetric hierarchy on logit(rho), expressed as a density over rho.
  {
    const double v = h.rho_tilde.var, r1 = h.rho_corr1, r2 = h.rho_corr2;
    double g_rt[3] = {0.0, 0.0, 0.0};  // d/d rho_tilde for rho_beta_1, rho_beta_2, rho_theta
    const double rt[3] = {logit(em.rho_beta[0]), logit(em.rho_beta[1]), logit(em.rho_theta)};
    double* g_rtb = g ? &g->latents.rho_tilde_beta : nullptr;
    double* g_mu = g ? &g->latents.mu_rho_tilde : nullptr;
    for (int j = 0; j < 2; ++j) lp += normal_term(rt[j], la.rho_tilde_beta, (1.0 - r1) * v, &g_rt[j], g_rtb);
    lp += normal_term(la.rho_tilde_beta, la.mu_rho_tilde, (1.0 - r2) * r1 * v, g_rtb, g_mu);
    lp += normal_term(rt[2], la.mu_rho_tilde, (1.0 - r2) * r1 * v, &g_rt[2], g_mu);
    lp += normal_term(la.mu_rho_tilde, h.rho_tilde.mean, r1 * r2 * v, g_mu, nullptr);
    const double rho[3] = {em.rho_beta[0], em.rho_beta[1], em.rho_theta};
    for (int i = 0; i < 3; ++i) {
      lp -= std::log(rho[i]) + std::log1p(-rho[i]);
      if (g) {
        const double d = g_rt[i] / (rho[i] * (1.0 - rho[i])) - 1.0 / rho[i] + 1.0 / (1.0 - rho[i]);
        if (i < 2) g->emission.rho_beta[i] += d;
        else g->emission.rho_theta += d;
      }
    }
  }

  // Precision model.
  for (int i = 0; i < 3; ++i) {
    lp += normal_term(em.eta[i], h.eta[i].mean, h.eta[i].var, g ? &g->emission.eta[i] : nullptr, nullptr);
    lp += normal_term(em.theta[i], 0.0, h.theta_var[i], g ? &g->emission.theta[i] : nullptr, nullptr);
    for (int m = 0; m < 2; ++m) {
      for (int k = 0; k < em.k_kappa(); ++k) {
        lp += normal_term(em.kappa.at(i, m, k), 0.0, h.kappa_var[i][static_cast<std::size_t>(k)],
                          g ? &g->emission.kappa.at(i, m, k) : nullptr, nullptr);
      }
    }
  }
  return lp;
}

ModelParams sample_prior(const Hyperparameters& h, Rng& rng) {
  ModelParams p(h.k_gamma, h.k_kappa);
  auto normal = [&](double mean, double var) { return mean + std::sqrt(var) * standard_normal(rng); };
  auto& em = p.emission;
  auto& la = p.latents;

  {
    auto x = nu_fields(p.transition);
    for (std::size_t i = 0; i < 7; ++i) *x[i] = normal(h.nu[i].mean, h.nu[i].var);
  }
  for (int i = 0; i < 2; ++i) {
    double x = beta_draw(rng, h.xi_a[i], h.xi_b[i]);
    // Keep the draw strictly inside the open interval.
    x = std::clamp(x, 1e-12, 1.0 - 1e-12);
    em.xi[i] = x;
  }

  la.mu_alpha = normal(h.alpha.mean, h.alpha_corr * h.alpha.var);
  for (int j = 0; j < 2; ++j) em.alpha[j] = normal(la.mu_alpha, (1.0 - h.alpha_corr) * h.alpha.var);

  for (int i = 0; i < 2; ++i) {
    la.mu_zeta[i] = normal(h.zeta[i].mean, h.zeta_corr[i] * h.zeta[i].var);
    for (int j = 0; j < 2; ++j) em.zeta[j][i] = normal(la.mu_zeta[i], (1.0 - h.zeta_corr[i]) * h.zeta[i].var);
  }
  for (int m = 0; m < 2; ++m) {
    for (int k = 0; k < 3; ++k) {
      const double mu = normal(0.0, h.delta_corr * h.delta_var);
      la.mu_delta.at(0, m, k) = mu;
      for (int j = 0; j < 2; ++j) em.delta.at(j, m, k) = normal(mu, (1.0 - h.delta_corr) * h.delta_var);
    }
  }
  for (int m = 0; m < 2; ++m) {
    for (int k = 0; k < h.k_gamma; ++k) {
      const double v = h.gamma_var[static_cast<std::size_t>(k)];
      const double mu = normal(0.0, h.gamma_corr * v);
      la.mu_gamma.at(0, m, k) = mu;
      for (int j = 0; j < 2; ++j) em.gamma.at(j, m, k) = normal(mu, (1.0 - h.gamma_corr) * v);
    }
  }
  {
    auto mvn = [&](const std::array<double, 3>& mean, const CompoundSymmetric& cov) {
      const auto l = cov.cholesky();
      const std::array<double, 3> z{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
      std::array<double, 3> x{};
      for (int i = 0; i < 3; ++i) {
        x[i] = mean[i];
        for (int k = 0; k <= i; ++k) x[i] += l[i][k] * z[k];
      }
      return x;
    };
    la.mu_beta = mvn({0.0, 0.0, 0.0}, CompoundSymmetric{h.beta_corr * h.beta_var, h.beta_type_corr});
    for (int j = 0; j < 2; ++j) em.beta[j] = mvn(la.mu_beta, CompoundSymmetric{(1.0 - h.beta_corr) * h.beta_var, h.beta_type_corr});
  }
  {
    const double v = h.rho_tilde.var, r1 = h.rho_corr1, r2 = h.rho_corr2;
    la.mu_rho_tilde = normal(h.rho_tilde.mean, r1 * r2 * v);
    la.rho_tilde_beta = normal(la.mu_rho_tilde, (1.0 - r2) * r1 * v);
    em.rho_theta = inv_logit(normal(la.mu_rho_tilde, (1.0 - r2) * r1 * v));
    for (int j = 0; j < 2; ++j) em.rho_beta[j] = inv_logit(normal(la.rho_tilde_beta, (1.0 - r1) * v));
  }
  for (int i = 0; i < 3; ++i) {
    em.eta[i] = normal(h.eta[i].mean, h.eta[i].var);
    em.theta[i] = normal(0.0, h.theta_var[i]);
    for (int m = 0; m < 2; ++m)
      for (int k = 0; k < h.k_kappa; ++k) em.kappa.at(i, m, k) = normal(0.0, h.kappa_var[i][static_cast<std::size_t>(k)]);
  }
  return p;
}

ModelParams sample_prior(const Hyperparameters& hyper, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0);
  return sample_prior(hyper, rng);
}

}  // namespace nhmm
