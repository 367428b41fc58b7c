#include "nhmm/parameters.hpp"

#include <cmath>
#include <stdexcept>

#include "nhmm/numeric.hpp"

namespace nhmm {

const char* block_name(Block b) {
  switch (b) {
    case Block::Nu: return "nu";
    case Block::Xi: return "xi";
    case Block::Alpha: return "alpha";
    case Block::Beta: return "beta";
    case Block::Gamma: return "gamma";
    case Block::Delta: return "delta";
    case Block::Zeta: return "zeta";
    case Block::Rho: return "rho";
    case Block::Eta: return "eta";
    case Block::Theta: return "theta";
    case Block::Kappa: return "kappa";
    case Block::Latent: return "latent";
  }
  return "?";
}

std::string param_name(const ParamTag& tag) {
  std::string s = tag.stem;
  for (int idx : {tag.i, tag.j, tag.k}) {
    if (idx == 0) break;
    s += '_';
    s += std::to_string(idx);
  }
  return s;
}

ParamLayout ParamLayout::make(int k_gamma, int k_kappa) {
  ParamLayout layout;
  layout.k_gamma = k_gamma;
  layout.k_kappa = k_kappa;
  ModelParams dummy(k_gamma, k_kappa);
  for_each_param(dummy, [&](const ParamTag& tag, double&) {
    layout.tags.push_back(tag);
    layout.names.push_back(param_name(tag));
  });
  return layout;
}

std::size_t ParamLayout::find(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return names.size();
}

std::vector<double> to_vector(const ModelParams& p) {
  std::vector<double> v;
  for_each_param(p, [&](const ParamTag&, const double& x) { v.push_back(x); });
  return v;
}

ModelParams from_vector(const std::vector<double>& v, int k_gamma, int k_kappa) {
  ModelParams p(k_gamma, k_kappa);
  std::size_t i = 0;
  for_each_param(p, [&](const ParamTag&, double& x) {
    if (i >= v.size()) throw std::invalid_argument("parameter vector too short");
    x = v[i++];
  });
  if (i != v.size()) throw std::invalid_argument("parameter vector too long");
  return p;
}

std::vector<double> unconstrain(const ModelParams& p) {
  std::vector<double> u;
  for_each_param(p, [&](const ParamTag& tag, const double& x) {
    if (tag.transform == Transform::Logit) {
      if (!(x > 0.0 && x < 1.0)) throw std::domain_error(param_name(tag) + " outside (0,1)");
      u.push_back(logit(x));
    } else {
      u.push_back(x);
    }
  });
  return u;
}

ModelParams constrain(const std::vector<double>& u, int k_gamma, int k_kappa, double* log_jacobian) {
  ModelParams p(k_gamma, k_kappa);
  std::size_t i = 0;
  double lj = 0.0;
  for_each_param(p, [&](const ParamTag& tag, double& x) {
    if (i >= u.size()) throw std::invalid_argument("unconstrained vector too short");
    const double ui = u[i++];
    if (tag.transform == Transform::Logit) {
      x = inv_logit(ui);
      lj += log_inv_logit(ui) + log_inv_logit(-ui);
    } else {
      x = ui;
    }
  });
  if (i != u.size()) throw std::invalid_argument("unconstrained vector too long");
  if (log_jacobian) *log_jacobian = lj;
  return p;
}

bool in_support(const ModelParams& p) {
  bool ok = true;
  for_each_param(p, [&](const ParamTag& tag, const double& x) {
    if (!std::isfinite(x)) ok = false;
    if (tag.transform == Transform::Logit && !(x > 0.0 && x < 1.0)) ok = false;
  });
  return ok;
}

}  // namespace nhmm
