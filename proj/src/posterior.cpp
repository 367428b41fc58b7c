#include "nhmm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nhmm/numeric.hpp"

namespace nhmm {

PosteriorModel::PosteriorModel(const ModelData& data, Hyperparameters hyper, ModelMode mode)
    : data_(&data), hyper_(std::move(hyper)), mode_(mode), layout_(ParamLayout::make(hyper_.k_gamma, hyper_.k_kappa)) {
  hyper_.validate();
  if (std::max(hyper_.k_gamma, hyper_.k_kappa) > data.annual_harmonics) {
    throw std::invalid_argument("model data has fewer annual harmonics than the prior requires");
  }
}

ModelParams PosteriorModel::to_params(const std::vector<double>& u) const {
  return constrain(u, hyper_.k_gamma, hyper_.k_kappa);
}

double PosteriorModel::log_density(const std::vector<double>& u) const {
  if (u.size() != dim()) throw std::invalid_argument("parameter vector has the wrong length");
  for (double x : u)
    if (!std::isfinite(x)) return kNegInf;
  double log_jac = 0.0;
  const ModelParams p = constrain(u, hyper_.k_gamma, hyper_.k_kappa, &log_jac);
  if (!in_support(p)) return kNegInf;
  const double lp = log_prior(p, hyper_);
  if (!std::isfinite(lp)) return kNegInf;
  const double ll = log_likelihood(*data_, p, mode_);
  if (!std::isfinite(ll)) return kNegInf;
  return ll + lp + log_jac;
}

double PosteriorModel::log_density(const std::vector<double>& u, std::vector<double>& grad) const {
  if (u.size() != dim()) throw std::invalid_argument("parameter vector has the wrong length");
  grad.assign(dim(), 0.0);
  for (double x : u)
    if (!std::isfinite(x)) return kNegInf;
  double log_jac = 0.0;
  const ModelParams p = constrain(u, hyper_.k_gamma, hyper_.k_kappa, &log_jac);
  if (!in_support(p)) return kNegInf;
  // Default-constructed params hold 0.5 for xi and rho, so start from an explicit zero vector.
  ModelParams g = from_vector(std::vector<double>(dim(), 0.0), hyper_.k_gamma, hyper_.k_kappa);
  const double lp = log_prior(p, hyper_, &g);
  if (!std::isfinite(lp)) return kNegInf;
  const double ll = log_likelihood_gradient(*data_, p, mode_, g);
  if (!std::isfinite(ll)) {
    grad.assign(dim(), 0.0);
    return kNegInf;
  }
  const std::vector<double> gn = to_vector(g);
  const std::vector<double> x = to_vector(p);
  for (std::size_t i = 0; i < dim(); ++i) {
    if (layout_.tags[i].transform == Transform::Logit) {
      grad[i] = gn[i] * x[i] * (1.0 - x[i]) + (1.0 - 2.0 * x[i]);
    } else {
      grad[i] = gn[i];
    }
  }
  return ll + lp + log_jac;
}

}  // namespace nhmm
