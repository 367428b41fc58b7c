#include "nhmm/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include "json.hpp"

#include "nhmm/diagnostics.hpp"
#include "nhmm/error.hpp"
#include "nhmm/numeric.hpp"

namespace nhmm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<std::string> Target::names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < dim(); ++i) out.push_back("x_" + std::to_string(i + 1));
  return out;
}

std::vector<int> Target::blocks() const { return std::vector<int>(dim(), 0); }

std::vector<double> PosteriorTarget::initial_point(Rng& rng) const {
  return unconstrain(sample_prior(model_->hyper(), rng));
}

std::vector<int> PosteriorTarget::blocks() const {
  std::vector<int> out;
  for (const auto& tag : model_->layout().tags) out.push_back(static_cast<int>(tag.block));
  return out;
}

const char* algorithm_name(Algorithm a) { return a == Algorithm::Hmc ? "hmc" : "adaptive-metropolis"; }

Algorithm parse_algorithm(const std::string& text) {
  if (text == "hmc") return Algorithm::Hmc;
  if (text == "adaptive-metropolis") return Algorithm::AdaptiveMetropolis;
  throw InputError("unknown sampler algorithm '" + text + "' (expected hmc or adaptive-metropolis)");
}

int SamplerConfig::burn_in_iterations() const {
  return static_cast<int>(std::lround(burn_in * static_cast<double>(iterations)));
}

int SamplerConfig::retained_per_chain() const {
  const int kept = iterations - burn_in_iterations();
  return (kept + thin - 1) / thin;
}

void SamplerConfig::validate(std::size_t dim) const {
  if (chains < 1) throw InputError("sampler.chains must be at least 1");
  if (iterations < 2) throw InputError("sampler.iterations must be at least 2");
  if (!(burn_in > 0.0 && burn_in < 1.0)) throw InputError("sampler.burn_in must lie in (0,1)");
  if (thin < 1) throw InputError("sampler.thin must be at least 1");
  if (retained_per_chain() < 1) throw InputError("no draws would be retained");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("sampler.target_accept must lie in (0,1)");
  if (!(integration_time > 0.0)) throw InputError("sampler.integration_time must be positive");
  if (max_leapfrog < 1) throw InputError("sampler.max_leapfrog must be at least 1");
  if (laplace_iterations < 1) throw InputError("sampler.laplace_iterations must be at least 1");
  if (!(step_jitter >= 0.0 && step_jitter < 1.0)) throw InputError("sampler.step_jitter must lie in [0,1)");
  if (!free.empty() && free.size() != dim) throw InputError("free mask has the wrong length");
  if (!free.empty() && fixed_values.size() != dim) throw InputError("fixed values have the wrong length");
  if (!inits.empty() && inits.size() != static_cast<std::size_t>(chains)) throw InputError("need one init per chain");
  for (const auto& v : inits)
    if (v.size() != dim) throw InputError("init has the wrong length");
  if (init_attempts < 1) throw InputError("init_attempts must be at least 1");
}

namespace {

/// Maps between the full coordinate vector and the free coordinates being sampled.
struct Subspace {
  std::vector<std::size_t> idx;
  std::vector<double> base;

  VectorXd restrict(const std::vector<double>& full) const {
    VectorXd z(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) z[static_cast<Eigen::Index>(i)] = full[idx[i]];
    return z;
  }
  std::vector<double> expand(const VectorXd& z) const {
    std::vector<double> full = base;
    for (std::size_t i = 0; i < idx.size(); ++i) full[idx[i]] = z[static_cast<Eigen::Index>(i)];
    return full;
  }
  Eigen::Index size() const { return static_cast<Eigen::Index>(idx.size()); }
};

struct ChainOutput {
  std::vector<std::vector<double>> u;
  std::vector<int> iteration;
  std::vector<double> lp;
  ChainStats stats;
};

bool should_keep(int it, const SamplerConfig& cfg) {
  const int b = cfg.burn_in_iterations();
  return it >= b && (it - b) % cfg.thin == 0;
}

/// Running mean and covariance.
class Welford {
 public:
  explicit Welford(Eigen::Index d) : mean_(VectorXd::Zero(d)), m2_(MatrixXd::Zero(d, d)) {}
  void add(const VectorXd& x) {
    ++n_;
    const VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_.noalias() += delta * (x - mean_).transpose();
  }
  long count() const { return n_; }
  MatrixXd covariance() const { return m2_ / static_cast<double>(n_ - 1); }
  void reset() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

 private:
  long n_ = 0;
  VectorXd mean_;
  MatrixXd m2_;
};

// ---------------------------------------------------------------- HMC

class Metric {
 public:
  explicit Metric(Eigen::Index d) : dense_(false), diag_(VectorXd::Ones(d)) {}

  void set_diagonal(const VectorXd& v) {
    dense_ = false;
    diag_ = v;
  }
  void set_dense(const MatrixXd& s) {
    dense_ = true;
    sigma_ = s;
    chol_ = sigma_.llt().matrixL();
  }
  bool dense() const { return dense_; }

  VectorXd sample_momentum(Rng& rng) const {
    const Eigen::Index d = dense_ ? sigma_.rows() : diag_.size();
    VectorXd xi(d);
    for (Eigen::Index i = 0; i < d; ++i) xi[i] = standard_normal(rng);
    if (dense_) return chol_.transpose().triangularView<Eigen::Upper>().solve(xi);
    return xi.cwiseQuotient(diag_.cwiseSqrt());
  }
  VectorXd velocity(const VectorXd& p) const { return dense_ ? VectorXd(sigma_ * p) : VectorXd(diag_.cwiseProduct(p)); }
  double kinetic(const VectorXd& p) const { return 0.5 * p.dot(velocity(p)); }

 private:
  bool dense_;
  VectorXd diag_;
  MatrixXd sigma_;
  MatrixXd chol_;
};

/// Stan-style windowed warmup: fast initial buffer, doubling slow windows, fast terminal buffer.
class WindowSchedule {
 public:
  WindowSchedule(int warmup, int init_buffer = 75, int term_buffer = 50, int base_window = 25) : warmup_(warmup) {
    if (warmup < 20) {
      adapt_ = false;
      return;
    }
    if (init_buffer + base_window + term_buffer > warmup) {
      init_buffer = static_cast<int>(0.15 * warmup);
      term_buffer = static_cast<int>(0.1 * warmup);
      base_window = warmup - init_buffer - term_buffer;
    }
    init_ = init_buffer;
    term_ = term_buffer;
    window_size_ = base_window;
    next_end_ = init_ + window_size_ - 1;
    if (next_end_ + 2 * window_size_ >= warmup_ - term_) next_end_ = warmup_ - term_ - 1;
  }

  bool in_window(int it) const { return adapt_ && it >= init_ && it < warmup_ - term_; }
  bool window_ends(int it) const { return adapt_ && it == next_end_ && it < warmup_; }

  void advance() {
    if (next_end_ == warmup_ - term_ - 1) {
      next_end_ = warmup_;  // no more windows
      return;
    }
    window_size_ *= 2;
    next_end_ += window_size_;
    if (next_end_ + 2 * window_size_ >= warmup_ - term_) next_end_ = warmup_ - term_ - 1;
  }

 private:
  int warmup_;
  bool adapt_ = true;
  int init_ = 0, term_ = 0, window_size_ = 0, next_end_ = -1;
};

class DualAveraging {
 public:
  void restart(double step) {
    mu_ = std::log(10.0 * step);
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    counter_ = 0;
  }
  double update(double accept_stat, double delta) {
    ++counter_;
    const double c = static_cast<double>(counter_);
    const double eta = 1.0 / (c + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(c) / kGamma;
    const double w = std::pow(c, -kKappa);
    x_bar_ = w * x + (1.0 - w) * x_bar_;
    return std::exp(x);
  }
  double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double mu_ = 0.0, s_bar_ = 0.0, x_bar_ = 0.0;
  long counter_ = 0;
};

class HmcChain {
 public:
  HmcChain(const Target& target, const Subspace& sub, const SamplerConfig& cfg, Rng& rng)
      : target_(target), sub_(sub), cfg_(cfg), rng_(rng), metric_(sub.size()) {}

  double eval(const VectorXd& z, VectorXd& grad) const {
    std::vector<double> g;
    const double lp = target_.log_density(sub_.expand(z), g);
    grad.resize(sub_.size());
    for (std::size_t i = 0; i < sub_.idx.size(); ++i) grad[static_cast<Eigen::Index>(i)] = g[sub_.idx[i]];
    if (!std::isfinite(lp) || !grad.allFinite()) return kNegInf;
    return lp;
  }

  struct Step {
    double accept_stat;
    bool divergent;
  };

  /// One trajectory from (z_, lp_, grad_) with `n_steps` leapfrog steps of size `eps`.
  Step transition(double eps, int n_steps) {
    const VectorXd p0 = metric_.sample_momentum(rng_);
    VectorXd z = z_, g = grad_, p = p0;
    const double h0 = -lp_ + metric_.kinetic(p0);
    double lp = lp_;
    for (int s = 0; s < n_steps; ++s) {
      p += 0.5 * eps * g;
      z += eps * metric_.velocity(p);
      lp = eval(z, g);
      if (lp == kNegInf) break;
      p += 0.5 * eps * g;
    }
    double dh = lp == kNegInf ? std::numeric_limits<double>::infinity() : -lp + metric_.kinetic(p) - h0;
    if (std::isnan(dh)) dh = std::numeric_limits<double>::infinity();
    const double accept_stat = dh > 0.0 ? std::exp(-dh) : 1.0;
    const bool divergent = dh > cfg_.max_energy_error;
    if (uniform01(rng_) < accept_stat) {
      z_ = z;
      grad_ = g;
      lp_ = lp;
    }
    return {accept_stat, divergent};
  }

  /// Doubles or halves the step until one-step acceptance crosses 0.8.
  double find_reasonable_step(double eps) {
    auto one_step_dh = [&](double e) {
      const VectorXd p0 = metric_.sample_momentum(rng_);
      VectorXd g = grad_;
      VectorXd p = p0 + 0.5 * e * g;
      const VectorXd z = z_ + e * metric_.velocity(p);
      const double lp = eval(z, g);
      if (lp == kNegInf) return -std::numeric_limits<double>::infinity();
      p += 0.5 * e * g;
      return (lp - metric_.kinetic(p)) - (lp_ - metric_.kinetic(p0));
    };
    double dh = one_step_dh(eps);
    const int direction = dh > std::log(0.8) ? 1 : -1;
    for (int i = 0; i < 60; ++i) {
      const double next = direction == 1 ? 2.0 * eps : 0.5 * eps;
      dh = one_step_dh(next);
      if (direction == 1 && !(dh > std::log(0.8))) break;
      eps = next;
      if (direction == -1 && dh > std::log(0.8)) break;
    }
    return eps;
  }

  ChainOutput run(const VectorXd& z0) {
    z_ = z0;
    lp_ = eval(z_, grad_);
    ChainOutput out;
    if (cfg_.laplace_start) laplace_start(out.stats);
    const int warmup = cfg_.burn_in_iterations();
    WindowSchedule schedule(warmup);
    Welford window(sub_.size());
    DualAveraging da;
    double eps = find_reasonable_step(0.1);
    da.restart(eps);
    double accept_sum = 0.0;
    long accept_n = 0;
    auto steps_for = [&](double e) {
      const double n = std::ceil(cfg_.integration_time / e);
      return static_cast<int>(std::clamp(n, 1.0, static_cast<double>(cfg_.max_leapfrog)));
    };
    for (int it = 0; it < cfg_.iterations; ++it) {
      const double jitter = 1.0 + cfg_.step_jitter * (2.0 * uniform01(rng_) - 1.0);
      const Step st = transition(eps * jitter, steps_for(eps));
      if (it < warmup) {
        eps = da.update(st.accept_stat, cfg_.target_accept);
        if (schedule.in_window(it)) window.add(z_);
        if (schedule.window_ends(it)) {
          update_metric(window);
          window.reset();
          schedule.advance();
          eps = find_reasonable_step(eps);
          da.restart(eps);
        }
        if (it == warmup - 1) eps = da.final_step();
      } else {
        accept_sum += st.accept_stat;
        ++accept_n;
        if (st.divergent) ++out.stats.divergences;
      }
      if (should_keep(it, cfg_)) {
        out.u.push_back(sub_.expand(z_));
        out.iteration.push_back(it + 1);
        out.lp.push_back(lp_);
      }
    }
    out.stats.accept_rate = accept_n > 0 ? accept_sum / static_cast<double>(accept_n) : 0.0;
    out.stats.step_size = eps;
    out.stats.leapfrog_steps = steps_for(eps);
    out.stats.dense_metric = metric_.dense();
    return out;
  }

 private:
  /// -Hessian of the log density at z by central differences of the gradient, symmetrised.
  /// Columns whose perturbed points leave the support are left at zero.
  MatrixXd negative_hessian(const VectorXd& z) const {
    const Eigen::Index d = z.size();
    MatrixXd h = MatrixXd::Zero(d, d);
    VectorXd gp, gm;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double e = 1e-5 * std::max(1.0, std::fabs(z[i]));
      VectorXd zp = z, zm = z;
      zp[i] += e;
      zm[i] -= e;
      if (eval(zp, gp) == kNegInf || eval(zm, gm) == kNegInf) continue;
      h.col(i) = -(gp - gm) / (2.0 * e);
    }
    return 0.5 * (h + h.transpose());
  }

  /// Modified Newton ascent from the current point: eigenvalues of -H are replaced by their absolute
  /// values (floored), each step backtracks until the log density improves. Leaves the chain at a
  /// draw from N(mode, cov) and the metric at cov, where cov is the modified inverse at the mode.
  void laplace_start(ChainStats& stats) {
    const Eigen::Index d = z_.size();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es;
    VectorXd lambda;
    auto decompose = [&] {
      es.compute(negative_hessian(z_));
      lambda = es.eigenvalues().cwiseAbs();
      const double floor = std::max(1e-8, 1e-14 * lambda.maxCoeff());
      lambda = lambda.cwiseMax(floor);
    };
    int it = 0;
    for (; it < cfg_.laplace_iterations; ++it) {
      decompose();
      const VectorXd step = es.eigenvectors() * (es.eigenvectors().transpose() * grad_).cwiseQuotient(lambda);
      VectorXd z, g;
      double lp = kNegInf, t = 1.0;
      for (int k = 0; k < 40; ++k, t *= 0.5) {
        z = z_ + t * step;
        lp = eval(z, g);
        if (lp > lp_) break;
      }
      if (!(lp > lp_)) break;
      const double gain = lp - lp_;
      z_ = z;
      grad_ = g;
      lp_ = lp;
      if (gain < 1e-8 * std::max(1.0, std::fabs(lp_))) break;
    }
    decompose();
    stats.laplace_log_density = lp_;
    stats.laplace_iterations = it;

    const MatrixXd root = es.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal();
    const MatrixXd cov = root * root.transpose();
    if (cfg_.dense_metric) metric_.set_dense(0.5 * (cov + cov.transpose()));
    else metric_.set_diagonal(cov.diagonal());
    for (int attempt = 0; attempt < 10; ++attempt) {
      VectorXd xi(d);
      for (Eigen::Index i = 0; i < d; ++i) xi[i] = standard_normal(rng_);
      const VectorXd z = z_ + root * xi;
      VectorXd g;
      const double lp = eval(z, g);
      if (lp != kNegInf) {
        z_ = z;
        grad_ = g;
        lp_ = lp;
        break;
      }
    }
  }

  /// Windowed estimate, shrunk towards its own diagonal by d / (n + d). A dense metric is only
  /// re-estimated from windows comfortably longer than the dimension; shorter windows keep it.
  void update_metric(const Welford& w) {
    const long n = w.count();
    if (n < 3) return;
    const double nd = static_cast<double>(n);
    MatrixXd s = w.covariance();
    const Eigen::Index d = s.rows();
    if (cfg_.dense_metric && n > d + 10) {
      const double a = nd / (nd + static_cast<double>(d));
      MatrixXd reg = a * s;
      reg.diagonal() = s.diagonal();
      metric_.set_dense(reg);
    } else if (!metric_.dense()) {
      const double a = nd / (nd + 5.0), b = 1e-3 * 5.0 / (nd + 5.0);
      metric_.set_diagonal((a * s.diagonal().array() + b).matrix());
    }
  }

  const Target& target_;
  const Subspace& sub_;
  const SamplerConfig& cfg_;
  Rng& rng_;
  Metric metric_;
  VectorXd z_, grad_;
  double lp_ = kNegInf;
};

// ---------------------------------------------------------------- adaptive Metropolis

class MetropolisChain {
 public:
  MetropolisChain(const Target& target, const Subspace& sub, const SamplerConfig& cfg, Rng& rng)
      : target_(target), sub_(sub), cfg_(cfg), rng_(rng) {
    const std::vector<int> all_blocks = target.blocks();
    std::map<int, std::vector<Eigen::Index>> groups;
    for (std::size_t i = 0; i < sub.idx.size(); ++i) groups[all_blocks[sub.idx[i]]].push_back(static_cast<Eigen::Index>(i));
    for (auto& [id, members] : groups) {
      BlockState b;
      b.members = members;
      const auto d = static_cast<Eigen::Index>(members.size());
      b.stats = std::make_unique<Welford>(d);
      b.chol = MatrixXd::Identity(d, d) * (0.1 / std::sqrt(static_cast<double>(d)));
      b.target = d == 1 ? 0.44 : cfg.metropolis_target_accept;
      blocks_.push_back(std::move(b));
    }
  }

  ChainOutput run(const VectorXd& z0) {
    VectorXd z = z0;
    double lp = target_.log_density(sub_.expand(z));
    ChainOutput out;
    const int warmup = cfg_.burn_in_iterations();
    for (int it = 0; it < cfg_.iterations; ++it) {
      const bool adapting = it < warmup;
      for (auto& b : blocks_) {
        const auto d = static_cast<Eigen::Index>(b.members.size());
        VectorXd xi(d);
        for (Eigen::Index i = 0; i < d; ++i) xi[i] = standard_normal(rng_);
        const VectorXd step = std::exp(b.log_scale) * (b.chol * xi);
        VectorXd prop = z;
        for (Eigen::Index i = 0; i < d; ++i) prop[b.members[static_cast<std::size_t>(i)]] += step[i];
        const double lp_prop = target_.log_density(sub_.expand(prop));
        double a = 0.0;
        if (std::isfinite(lp_prop)) a = lp_prop >= lp ? 1.0 : std::exp(lp_prop - lp);
        const bool accept = uniform01(rng_) < a;
        if (accept) {
          z = prop;
          lp = lp_prop;
        }
        if (adapting) {
          b.log_scale += (a - b.target) / std::pow(static_cast<double>(it) + 1.0, 0.6);
        } else {
          ++b.proposed;
          if (accept) ++b.accepted;
        }
      }
      if (adapting) {
        for (auto& b : blocks_) {
          const auto d = static_cast<Eigen::Index>(b.members.size());
          VectorXd x(d);
          for (Eigen::Index i = 0; i < d; ++i) x[i] = z[b.members[static_cast<std::size_t>(i)]];
          b.stats->add(x);
          // Refresh the proposal shape every 50 iterations once the block has enough history.
          if (b.stats->count() > 2 * d + 10 && it % 50 == 49) {
            const MatrixXd s = b.stats->covariance() + 1e-10 * MatrixXd::Identity(d, d);
            Eigen::LLT<MatrixXd> llt(s * (2.38 * 2.38 / static_cast<double>(d)));
            if (llt.info() == Eigen::Success) {
              b.chol = llt.matrixL();
              if (!b.shaped) b.log_scale = 0.0;
              b.shaped = true;
            }
          }
        }
      }
      if (should_keep(it, cfg_)) {
        out.u.push_back(sub_.expand(z));
        out.iteration.push_back(it + 1);
        out.lp.push_back(lp);
      }
    }
    long prop = 0, acc = 0;
    for (const auto& b : blocks_) {
      out.stats.block_accept.push_back(b.proposed > 0 ? static_cast<double>(b.accepted) / static_cast<double>(b.proposed) : 0.0);
      prop += b.proposed;
      acc += b.accepted;
    }
    out.stats.accept_rate = prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;
    return out;
  }

 private:
  struct BlockState {
    std::vector<Eigen::Index> members;
    std::unique_ptr<Welford> stats;
    MatrixXd chol;
    double log_scale = 0.0;
    double target = 0.234;
    bool shaped = false;
    long proposed = 0, accepted = 0;
  };

  const Target& target_;
  const Subspace& sub_;
  const SamplerConfig& cfg_;
  Rng& rng_;
  std::vector<BlockState> blocks_;
};

ChainOutput run_chain(const Target& target, const SamplerConfig& cfg, int chain) {
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain) + 1);
  const std::size_t dim = target.dim();
  Subspace sub;
  for (std::size_t i = 0; i < dim; ++i)
    if (cfg.free.empty() || cfg.free[i]) sub.idx.push_back(i);
  if (sub.idx.empty()) throw InputError("no free parameters to sample");

  std::vector<double> start;
  bool found = false;
  for (int attempt = 0; attempt < cfg.init_attempts && !found; ++attempt) {
    try {
      start = cfg.inits.empty() ? target.initial_point(rng) : cfg.inits[static_cast<std::size_t>(chain)];
    } catch (const std::exception&) {
      continue;
    }
    if (!cfg.free.empty())
      for (std::size_t i = 0; i < dim; ++i)
        if (!cfg.free[i]) start[i] = cfg.fixed_values[i];
    std::vector<double> g;
    const double lp = cfg.algorithm == Algorithm::Hmc ? target.log_density(start, g) : target.log_density(start);
    bool ok = std::isfinite(lp);
    for (double x : g) ok = ok && std::isfinite(x);
    found = ok;
    if (!cfg.inits.empty()) break;
  }
  if (!found) {
    throw NumericalError("chain " + std::to_string(chain + 1) + ": no finite log posterior after " +
                         std::to_string(cfg.init_attempts) + " initialisation attempts");
  }
  sub.base = start;
  const VectorXd z0 = sub.restrict(start);
  if (cfg.algorithm == Algorithm::Hmc) {
    HmcChain h(target, sub, cfg, rng);
    return h.run(z0);
  }
  MetropolisChain m(target, sub, cfg, rng);
  return m.run(z0);
}

}  // namespace

double Diagnostics::max_rhat() const {
  double m = std::numeric_limits<double>::quiet_NaN();
  for (double r : rhat)
    if (!std::isnan(r)) m = std::isnan(m) ? r : std::max(m, r);
  return m;
}

double Diagnostics::min_ess() const {
  double m = std::numeric_limits<double>::quiet_NaN();
  for (double e : ess_bulk)
    if (!std::isnan(e)) m = std::isnan(m) ? e : std::min(m, e);
  return m;
}

std::vector<std::vector<double>> PosteriorDraws::by_chain(std::size_t i) const {
  std::vector<std::vector<double>> out(static_cast<std::size_t>(n_chains));
  for (std::size_t d = 0; d < u.size(); ++d) out[static_cast<std::size_t>(chain[d] - 1)].push_back(u[d][i]);
  return out;
}

Diagnostics compute_diagnostics(const PosteriorDraws& draws, std::vector<ChainStats> chain_stats) {
  Diagnostics d;
  d.names = draws.names;
  d.chains = std::move(chain_stats);
  if (draws.size() == 0) return d;
  const std::size_t dim = draws.u.front().size();
  for (std::size_t i = 0; i < dim; ++i) {
    const auto chains = draws.by_chain(i);
    const bool enough = chains.front().size() >= 4;
    if (draws.n_chains >= 2) d.rhat.push_back(enough ? split_rhat(chains) : std::numeric_limits<double>::quiet_NaN());
    d.ess_bulk.push_back(enough ? ess_bulk(chains) : std::numeric_limits<double>::quiet_NaN());
  }
  return d;
}

McmcResult run_mcmc(const Target& target, const SamplerConfig& config) {
  config.validate(target.dim());
  const auto n = static_cast<std::size_t>(config.chains);
  std::vector<ChainOutput> outputs(n);
  std::vector<std::exception_ptr> errors(n);
  unsigned threads = config.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < n; c = next++) {
      try {
        outputs[c] = run_chain(target, config, static_cast<int>(c));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  McmcResult res;
  PosteriorDraws& dr = res.draws;
  dr.names = target.names();
  dr.n_chains = config.chains;
  std::vector<ChainStats> stats;
  for (std::size_t c = 0; c < n; ++c) {
    auto& o = outputs[c];
    for (std::size_t i = 0; i < o.u.size(); ++i) {
      dr.u.push_back(std::move(o.u[i]));
      dr.chain.push_back(static_cast<int>(c) + 1);
      dr.iteration.push_back(o.iteration[i]);
      dr.lp.push_back(o.lp[i]);
    }
    stats.push_back(o.stats);
  }
  res.diagnostics = compute_diagnostics(dr, std::move(stats));
  return res;
}

McmcResult run_mcmc(const PosteriorModel& model, const SamplerConfig& config) {
  PosteriorTarget target(model);
  McmcResult r = run_mcmc(target, config);
  r.draws.mode = model.mode();
  return r;
}

ModelParams draw_params(const PosteriorDraws& draws, std::size_t i, int k_gamma, int k_kappa) {
  return constrain(draws.u.at(i), k_gamma, k_kappa);
}

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws, int k_gamma, int k_kappa) {
  out << "chain,iter,lp__";
  for (const auto& n : draws.names) out << ',' << n;
  out << '\n';
  char buf[40];
  for (std::size_t d = 0; d < draws.size(); ++d) {
    out << draws.chain[d] << ',' << draws.iteration[d];
    std::snprintf(buf, sizeof buf, ",%.17g", draws.lp[d]);
    out << buf;
    for (double x : to_vector(draw_params(draws, d, k_gamma, k_kappa))) {
      std::snprintf(buf, sizeof buf, ",%.17g", x);
      out << buf;
    }
    out << '\n';
  }
}

PosteriorDraws read_draws_csv(std::istream& in, int k_gamma, int k_kappa) {
  const ParamLayout layout = ParamLayout::make(k_gamma, k_kappa);
  std::string line;
  if (!std::getline(in, line)) throw InputError("draws file is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() != layout.size() + 3 || header[0] != "chain" || header[1] != "iter" || header[2] != "lp__") {
    throw InputError("draws header does not match the parameter layout", 1);
  }
  for (std::size_t i = 0; i < layout.size(); ++i)
    if (header[i + 3] != layout.names[i]) throw InputError("unexpected draws column '" + header[i + 3] + "'", 1, header[i + 3]);
  PosteriorDraws d;
  d.names = layout.names;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        vals.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw InputError("malformed number '" + cell + "'", row, header.size() > vals.size() ? header[vals.size()] : "");
      }
    }
    if (vals.size() != header.size()) throw InputError("wrong number of columns", row);
    const int c = static_cast<int>(vals[0]);
    d.chain.push_back(c);
    d.iteration.push_back(static_cast<int>(vals[1]));
    d.lp.push_back(vals[2]);
    const ModelParams p = from_vector(std::vector<double>(vals.begin() + 3, vals.end()), k_gamma, k_kappa);
    if (!in_support(p)) throw InputError("draw outside the parameter support", row);
    d.u.push_back(unconstrain(p));
    d.n_chains = std::max(d.n_chains, c);
  }
  if (d.size() == 0) throw InputError("draws file has no rows");
  return d;
}

std::string diagnostics_json(const Diagnostics& d, const SamplerConfig& config) {
  nlohmann::ordered_json j;
  j["algorithm"] = algorithm_name(config.algorithm);
  j["chains"] = config.chains;
  j["iterations"] = config.iterations;
  j["burn_in"] = config.burn_in;
  j["thin"] = config.thin;
  j["seed"] = config.seed;
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr); };
  j["max_rhat"] = num(d.max_rhat());
  j["min_ess_bulk"] = num(d.min_ess());
  nlohmann::ordered_json chains = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < d.chains.size(); ++c) {
    const auto& s = d.chains[c];
    nlohmann::ordered_json cj;
    cj["chain"] = c + 1;
    cj["accept_rate"] = s.accept_rate;
    if (config.algorithm == Algorithm::Hmc) {
      cj["divergences"] = s.divergences;
      cj["step_size"] = s.step_size;
      cj["leapfrog_steps"] = s.leapfrog_steps;
      cj["metric"] = s.dense_metric ? "dense" : "diagonal";
      if (config.laplace_start) {
        cj["laplace_log_density"] = num(s.laplace_log_density);
        cj["laplace_iterations"] = s.laplace_iterations;
      }
    } else {
      cj["block_accept"] = s.block_accept;
    }
    chains.push_back(cj);
  }
  j["chain_stats"] = chains;
  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < d.names.size(); ++i) {
    nlohmann::ordered_json pj;
    pj["name"] = d.names[i];
    pj["rhat"] = i < d.rhat.size() ? num(d.rhat[i]) : nlohmann::ordered_json(nullptr);
    pj["ess_bulk"] = i < d.ess_bulk.size() ? num(d.ess_bulk[i]) : nlohmann::ordered_json(nullptr);
    params.push_back(pj);
  }
  j["parameters"] = params;
  return j.dump(2) + "\n";
}

}  // namespace nhmm
