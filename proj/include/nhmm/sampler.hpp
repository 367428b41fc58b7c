#pragma once

// Multi-chain MCMC: fixed-integration-time HMC with windowed metric adaptation, or blockwise
// adaptive random-walk Metropolis. Both work in the unconstrained space.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nhmm/posterior.hpp"
#include "nhmm/random.hpp"

namespace nhmm {

/// Anything with a log density over R^d. The gradient overload is only needed for HMC.
class Target {
 public:
  virtual ~Target() = default;
  virtual std::size_t dim() const = 0;
  virtual double log_density(const std::vector<double>& u) const = 0;
  virtual double log_density(const std::vector<double>& u, std::vector<double>& grad) const = 0;
  /// Overdispersed starting point.
  virtual std::vector<double> initial_point(Rng& rng) const = 0;
  virtual std::vector<std::string> names() const;
  /// Block id per coordinate, for blockwise Metropolis.
  virtual std::vector<int> blocks() const;
};

/// The model posterior as a sampling target; starts are unconstrained prior draws.
class PosteriorTarget : public Target {
 public:
  explicit PosteriorTarget(const PosteriorModel& model) : model_(&model) {}
  std::size_t dim() const override { return model_->dim(); }
  double log_density(const std::vector<double>& u) const override { return model_->log_density(u); }
  double log_density(const std::vector<double>& u, std::vector<double>& grad) const override {
    return model_->log_density(u, grad);
  }
  std::vector<double> initial_point(Rng& rng) const override;
  std::vector<std::string> names() const override { return model_->layout().names; }
  std::vector<int> blocks() const override;
  const PosteriorModel& model() const { return *model_; }

 private:
  const PosteriorModel* model_;
};

enum class Algorithm { Hmc, AdaptiveMetropolis };
const char* algorithm_name(Algorithm a);
/// "hmc" or "adaptive-metropolis"; throws InputError.
Algorithm parse_algorithm(const std::string& text);

struct SamplerConfig {
  int chains = 4;
  int iterations = 10000;
  double burn_in = 0.5;
  int thin = 10;
  Algorithm algorithm = Algorithm::Hmc;
  std::uint64_t seed = 20240101;
  unsigned threads = 0;  // 0: one per chain, capped at the hardware count

  // HMC
  double target_accept = 0.8;
  double integration_time = 2.0;  // in metric-scaled units; steps = ceil(time / step size)
  int max_leapfrog = 64;
  double step_jitter = 0.1;
  double max_energy_error = 1000.0;
  bool dense_metric = true;
  /// Before warmup, climb to a local mode with modified Newton steps and start from a draw of the
  /// Laplace approximation there, whose covariance also seeds the metric.
  bool laplace_start = true;
  int laplace_iterations = 100;

  // Adaptive Metropolis
  double metropolis_target_accept = 0.234;

  /// Coordinates with free[i] == false stay at fixed_values[i]. Empty means all free.
  std::vector<bool> free;
  std::vector<double> fixed_values;
  /// Optional starting points, one per chain, replacing the target's initial_point.
  std::vector<std::vector<double>> inits;
  int init_attempts = 100;

  int burn_in_iterations() const;
  int retained_per_chain() const;
  /// Throws InputError.
  void validate(std::size_t dim) const;
};

struct ChainStats {
  double accept_rate = 0.0;   // mean acceptance statistic after burn-in
  int divergences = 0;        // after burn-in (HMC)
  double step_size = 0.0;     // HMC, final
  int leapfrog_steps = 0;     // HMC, final
  bool dense_metric = false;  // HMC, final metric type
  double laplace_log_density = 0.0;  // HMC with laplace_start: log density at the mode reached
  int laplace_iterations = 0;        // Newton steps taken
  std::vector<double> block_accept;  // Metropolis, per block after burn-in
};

struct Diagnostics {
  std::vector<std::string> names;
  std::vector<double> rhat;      // empty with one chain
  std::vector<double> ess_bulk;
  std::vector<ChainStats> chains;

  double max_rhat() const;
  double min_ess() const;
};

/// Retained draws in unconstrained coordinates with provenance.
struct PosteriorDraws {
  std::vector<std::string> names;
  std::vector<std::vector<double>> u;
  std::vector<int> chain;      // 1-based
  std::vector<int> iteration;  // 1-based, counting burn-in
  std::vector<double> lp;
  int n_chains = 0;
  std::optional<ModelMode> mode;  // set when the draws come from the model posterior

  std::size_t size() const { return u.size(); }
  /// Values of coordinate `i` grouped by chain.
  std::vector<std::vector<double>> by_chain(std::size_t i) const;
};

struct McmcResult {
  PosteriorDraws draws;
  Diagnostics diagnostics;
};

/// Throws NumericalError if a chain finds no finite starting point in `init_attempts` tries.
McmcResult run_mcmc(const Target& target, const SamplerConfig& config);

/// Convenience overload for the model posterior.
McmcResult run_mcmc(const PosteriorModel& model, const SamplerConfig& config);

Diagnostics compute_diagnostics(const PosteriorDraws& draws, std::vector<ChainStats> chain_stats = {});

/// Constrained parameters of draw i.
ModelParams draw_params(const PosteriorDraws& draws, std::size_t i, int k_gamma, int k_kappa);

/// CSV with columns chain, iter, lp__ and one per parameter in natural (constrained) units.
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws, int k_gamma, int k_kappa);
/// Inverse of write_draws_csv; throws InputError on malformed rows.
PosteriorDraws read_draws_csv(std::istream& in, int k_gamma, int k_kappa);

/// JSON text for the diagnostics summary.
std::string diagnostics_json(const Diagnostics& d, const SamplerConfig& config);

}  // namespace nhmm
