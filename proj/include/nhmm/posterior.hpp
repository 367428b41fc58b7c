#pragma once

// Log posterior in the unconstrained sampling space.

#include <vector>

#include "nhmm/inference.hpp"
#include "nhmm/prior.hpp"

namespace nhmm {

/// Target density for the samplers. Holds a reference to the data; the data must outlive it.
class PosteriorModel {
 public:
  PosteriorModel(const ModelData& data, Hyperparameters hyper, ModelMode mode = ModelMode::FourState);

  std::size_t dim() const { return layout_.size(); }
  const ParamLayout& layout() const { return layout_; }
  const Hyperparameters& hyper() const { return hyper_; }
  const ModelData& data() const { return *data_; }
  ModelMode mode() const { return mode_; }

  /// log-likelihood + log-prior + log-Jacobian at unconstrained `u`; -inf on support violation.
  double log_density(const std::vector<double>& u) const;
  /// Same value; `grad` receives the gradient with respect to `u`.
  double log_density(const std::vector<double>& u, std::vector<double>& grad) const;

  ModelParams to_params(const std::vector<double>& u) const;

 private:
  const ModelData* data_;
  Hyperparameters hyper_;
  ModelMode mode_;
  ParamLayout layout_;
};

}  // namespace nhmm
