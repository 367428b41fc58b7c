#include "nhmm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "nhmm/error.hpp"
#include "nhmm/numeric.hpp"

namespace nhmm {

namespace {

constexpr std::size_t pair_prev(int k) { return static_cast<std::size_t>(kAugmentedPairs[static_cast<std::size_t>(k)].prev - 1); }
constexpr std::size_t pair_curr(int k) { return static_cast<std::size_t>(kAugmentedPairs[static_cast<std::size_t>(k)].curr - 1); }

/// Everything state-dependent about one day's emission, for all four states.
struct DayTerms {
  std::array<Vec2, 4> mu;
  std::array<std::array<double, 3>, 4> omega;
  std::array<PrecisionComponents, 4> pc;
  std::array<double, 4> half_log_det;  // 0.5 (ln tau1 + ln tau2)
  std::array<std::array<double, 4>, 2> b_weight;
  std::array<double, 4> theta_weight;
};

/// rho^k for k = 0..max_k by repeated multiplication.
std::vector<double> power_table(double rho, int max_k) {
  std::vector<double> out(static_cast<std::size_t>(max_k) + 1);
  double v = 1.0;
  for (auto& x : out) {
    x = v;
    v *= rho;
  }
  return out;
}

int max_lag(const ModelData& data) {
  int m = 1;
  for (const auto& d : data.cov.days) m = std::max(m, d.n);
  return m;
}

void compute_day_terms(const ModelData& data, const EmissionParams& em, std::vector<DayTerms>& out) {
  if (std::max(em.k_gamma(), em.k_kappa()) > data.annual_harmonics) {
    throw std::invalid_argument("model data was prepared with too few annual harmonics");
  }
  const int kmax = max_lag(data);
  const std::array<std::vector<double>, 2> pow_beta{power_table(em.rho_beta[0], kmax), power_table(em.rho_beta[1], kmax)};
  const std::vector<double> pow_theta = power_table(em.rho_theta, kmax);
  out.resize(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    const DayCovariates& day = data.cov.days[t];
    const SeasonalBasis& basis = data.basis[t];
    DayTerms& d = out[t];
    const auto type = static_cast<std::size_t>(day.region_type() - 1);
    const auto n = static_cast<std::size_t>(day.n);
    const auto nm = static_cast<std::size_t>(std::min(day.n, day.p));
    for (int j = 0; j < 2; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      d.b_weight[ju] = {pow_beta[ju][n], 1.0, pow_beta[ju][nm], 0.0};
      const double base = em.alpha[ju] + seasonal_mean(em, basis, j) +
                          (em.zeta[ju][0] + em.zeta[ju][1] * day.w[j]) * day.w_tilde[j];
      for (std::size_t s = 0; s < 4; ++s) d.mu[s][j] = base + d.b_weight[ju][s] * em.beta[ju][type];
    }
    d.theta_weight = {pow_theta[n], 1.0, pow_theta[nm], 0.0};
    std::array<double, 3> omega_base{};
    for (int i = 0; i < 3; ++i) {
      omega_base[static_cast<std::size_t>(i)] = em.eta[static_cast<std::size_t>(i)] + seasonal_precision(em, basis, i);
    }
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t i = 0; i < 3; ++i) d.omega[s][i] = omega_base[i] + d.theta_weight[s] * em.theta[i];
      d.pc[s] = precision_from_predictors(d.omega[s]);
      d.half_log_det[s] = 0.5 * (std::clamp(d.omega[s][1], -kLogPrecisionClamp, kLogPrecisionClamp) +
                                 std::clamp(d.omega[s][2], -kLogPrecisionClamp, kLogPrecisionClamp));
    }
  }
}

double emission_log(const DayTerms& d, std::size_t b, Vec2 e) {
  const PrecisionComponents& pc = d.pc[b];
  const double u1 = e.x1;
  const double u2 = e.x2 - pc.phi * e.x1;
  return -kLog2Pi + d.half_log_det[b] - 0.5 * (pc.tau1 * u1 * u1 + pc.tau2 * u2 * u2);
}

/// ln lambda for every pair, tabulated once per evaluation over the calendar positions in the data.
class LogTransitions {
 public:
  LogTransitions(const TransitionParams& nu, const ModelData& data, ModelMode mode) : nu_(nu), mode_(mode) {
    int max_n = 1, max_p = 2;
    for (const auto& d : data.cov.days) {
      max_n = std::max(max_n, d.n);
      max_p = std::max(max_p, d.p);
    }
    in41_.resize(static_cast<std::size_t>(max_n) + 1);
    stay41_.resize(in41_.size());
    for (int n = 1; n <= max_n; ++n) {
      const double a = clamp(logit_lambda_41(nu, n));
      in41_[static_cast<std::size_t>(n)] = log_inv_logit(a);
      stay41_[static_cast<std::size_t>(n)] = log_inv_logit(-a);
    }
    for (int first = 0; first < 2; ++first) {
      out34_[first].resize(static_cast<std::size_t>(max_p) + 1);
      stay34_[first].resize(out34_[first].size());
      for (int p = 1; p <= max_p; ++p) {
        const double a = clamp(logit_34(p, first == 1));
        out34_[first][static_cast<std::size_t>(p)] = log_inv_logit(a);
        stay34_[first][static_cast<std::size_t>(p)] = log_inv_logit(-a);
      }
    }
    for (int bridge = 0; bridge < 2; ++bridge) {
      const double a = clamp(nu.nu23_1 + (bridge == 1 ? nu.nu23_2 : 0.0));
      in23_[bridge] = log_inv_logit(a);
      to4_[bridge] = log_inv_logit(-a);
    }
  }

  /// Logit of lambda_34, extended to p = 1 by sqrt(max(p - 2, 0)).
  double logit_34(int p, bool n_is_one) const {
    return nu_.nu34_1 + nu_.nu34_2 * std::sqrt(static_cast<double>(std::max(p - 2, 0))) / 10.0 +
           (n_is_one ? nu_.nu34_3 : 0.0);
  }

  PairVector operator()(int n, int p) const {
    PairVector out;
    out.fill(kNegInf);
    if (n == 0 && p == 0) {
      for (int a = 1; a <= 4; ++a) out[static_cast<std::size_t>(pair_index(a, 2))] = 0.0;
      return out;
    }
    if (mode_ == ModelMode::TwoState) {
      out[static_cast<std::size_t>(pair_index(2, 4))] = 0.0;
      out[static_cast<std::size_t>(pair_index(4, 4))] = 0.0;
      return out;
    }
    const auto nu = static_cast<std::size_t>(n), pu = static_cast<std::size_t>(p);
    const int first = n == 1 ? 1 : 0;
    const int bridge = n == 2 ? 1 : 0;
    out[static_cast<std::size_t>(pair_index(1, 1))] = 0.0;
    out[static_cast<std::size_t>(pair_index(2, 3))] = in23_[bridge];
    out[static_cast<std::size_t>(pair_index(2, 4))] = to4_[bridge];
    out[static_cast<std::size_t>(pair_index(3, 3))] = stay34_[first][pu];
    out[static_cast<std::size_t>(pair_index(3, 4))] = out34_[first][pu];
    out[static_cast<std::size_t>(pair_index(4, 1))] = in41_[nu];
    out[static_cast<std::size_t>(pair_index(4, 4))] = stay41_[nu];
    return out;
  }

 private:
  static double clamp(double a) { return std::clamp(a, -kLogitClamp, kLogitClamp); }

  TransitionParams nu_;
  ModelMode mode_;
  std::vector<double> in41_, stay41_;
  std::array<std::vector<double>, 2> out34_, stay34_;
  std::array<double, 2> in23_{}, to4_{};
};

/// ln sum exp over the pairs leaving (by_prev) or entering (!by_prev) each state.
std::array<double, 4> group_log_sum_exp(const PairVector& v, bool by_prev) {
  std::array<double, 4> mx;
  mx.fill(kNegInf);
  for (int k = 0; k < kNumPairs; ++k) {
    const std::size_t s = by_prev ? pair_prev(k) : pair_curr(k);
    mx[s] = std::max(mx[s], v[static_cast<std::size_t>(k)]);
  }
  std::array<double, 4> sum{};
  for (int k = 0; k < kNumPairs; ++k) {
    const std::size_t s = by_prev ? pair_prev(k) : pair_curr(k);
    if (mx[s] != kNegInf) sum[s] += std::exp(v[static_cast<std::size_t>(k)] - mx[s]);
  }
  std::array<double, 4> out;
  for (std::size_t s = 0; s < 4; ++s) out[s] = mx[s] == kNegInf ? kNegInf : mx[s] + std::log(sum[s]);
  return out;
}

/// Day-1 variance for each state.
std::array<Mat2, 4> initial_variances(const DayTerms& d, const Mat2& psi) {
  std::array<Mat2, 4> v{};
  for (std::size_t s = 0; s < 4; ++s) v[s] = solve_lyapunov(psi, precision_inverse(d.pc[s]));
  return v;
}

void run_filter(const ModelData& data, const ModelParams& params, ModelMode mode, const std::vector<DayTerms>& terms,
                FilterResult& res) {
  const std::size_t T = data.size();
  const EmissionParams& em = params.emission;
  const Mat2 psi = psi_from_xi(em.xi[0], em.xi[1]);

  ForwardMessages& msg = res.messages;
  msg.mode = mode;
  msg.log_filtered.resize(T);
  msg.log_increment.resize(T);
  msg.log_local.resize(T);

  // xi within a few ulps of 0 or 1 rounds to a unit-root Psi; treat that as zero likelihood.
  if (!(std::fabs(2.0 * em.xi[0] - 1.0) < 1.0 && std::fabs(2.0 * em.xi[1] - 1.0) < 1.0)) {
    res.log_likelihood = kNegInf;
    return;
  }

  const StateDistribution init = initial_distribution(data.cov.initial.n, data.cov.initial.p, mode);
  std::array<double, 4> log_prev{};
  for (std::size_t s = 0; s < 4; ++s) log_prev[s] = init.probs[s] > 0.0 ? std::log(init.probs[s]) : kNegInf;

  const std::array<Mat2, 4> v1 = initial_variances(terms[0], psi);
  const LogTransitions log_lambda(params.transition, data, mode);

  double loglik = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const DayCovariates& day = data.cov.days[t];
    const DayTerms& d = terms[t];
    PairVector local = log_lambda(day.n, day.p);
    std::array<Vec2, 4> psi_dev{};
    if (t > 0) {
      for (std::size_t a = 0; a < 4; ++a) psi_dev[a] = psi * (data.y[t - 1] - terms[t - 1].mu[a]);
    }
    for (int k = 0; k < kNumPairs; ++k) {
      auto ku = static_cast<std::size_t>(k);
      if (local[ku] == kNegInf) continue;
      const std::size_t a = pair_prev(k), b = pair_curr(k);
      if (t == 0) {
        local[ku] += log_density_covariance(data.y[0] - d.mu[b], v1[b]);
      } else {
        local[ku] += emission_log(d, b, data.y[t] - d.mu[b] - psi_dev[a]);
      }
    }
    PairVector joint{};
    for (int k = 0; k < kNumPairs; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      joint[ku] = log_prev[pair_prev(k)] == kNegInf ? kNegInf : log_prev[pair_prev(k)] + local[ku];
    }
    // One pass of max-shifted exponentials serves both the normaliser and the next day's S_t marginal.
    double mx = kNegInf;
    for (double x : joint) mx = std::max(mx, x);
    if (!(mx > kNegInf) || !std::isfinite(mx)) {
      res.log_likelihood = std::isnan(mx) ? std::nan("") : kNegInf;
      msg.log_local[t] = local;
      return;
    }
    double total = 0.0;
    std::array<double, 4> into{};
    for (int k = 0; k < kNumPairs; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (joint[ku] == kNegInf) continue;
      const double e = std::exp(joint[ku] - mx);
      total += e;
      into[pair_curr(k)] += e;
    }
    const double lse = mx + std::log(total);
    for (auto& x : joint) x -= lse;
    msg.log_filtered[t] = joint;
    msg.log_increment[t] = lse;
    msg.log_local[t] = local;
    loglik += lse;
    for (std::size_t b = 0; b < 4; ++b) log_prev[b] = into[b] > 0.0 ? std::log(into[b] / total) : kNegInf;
  }
  res.log_likelihood = loglik;
}

/// Buffers reused across evaluations on one thread. At desk scale these are a few hundred kB each,
/// and allocating them fresh per gradient showed up as page-fault time in the sampler.
struct Workspace {
  std::vector<DayTerms> terms;
  FilterResult filter;
  std::vector<PairVector> post;
  std::vector<std::array<Vec2, 4>> g_mu;
  std::vector<std::array<std::array<double, 3>, 4>> g_omega;
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

}  // namespace

ModelData ModelData::make(std::vector<Vec2> log_demand, CovariateSeries cov, int annual_harmonics) {
  if (log_demand.empty()) throw InputError("no observations");
  if (log_demand.size() != cov.size()) throw InputError("demand and covariates differ in length");
  for (std::size_t t = 0; t < log_demand.size(); ++t) {
    if (!std::isfinite(log_demand[t].x1) || !std::isfinite(log_demand[t].x2)) {
      throw InputError("non-finite log demand on day " + std::to_string(t + 1), static_cast<long>(t) + 1);
    }
  }
  ModelData d;
  d.y = std::move(log_demand);
  d.cov = std::move(cov);
  d.annual_harmonics = annual_harmonics;
  d.basis.reserve(d.y.size());
  for (const auto& day : d.cov.days) d.basis.push_back(seasonal_basis(day.t_index, annual_harmonics));
  return d;
}

PairVector ForwardMessages::log_joint(std::size_t t) const {
  double cum = 0.0;
  for (std::size_t u = 0; u <= t; ++u) cum += log_increment[u];
  PairVector out = log_filtered[t];
  for (auto& x : out) x += cum;
  return out;
}

FilterResult forward_filter(const ModelData& data, const ModelParams& params, ModelMode mode) {
  Workspace& ws = workspace();
  compute_day_terms(data, params.emission, ws.terms);
  FilterResult res;
  run_filter(data, params, mode, ws.terms, res);
  return res;
}

double log_likelihood(const ModelData& data, const ModelParams& params, ModelMode mode) {
  Workspace& ws = workspace();
  compute_day_terms(data, params.emission, ws.terms);
  run_filter(data, params, mode, ws.terms, ws.filter);
  return ws.filter.log_likelihood;
}

namespace {

void smooth_pairs_into(const ForwardMessages& msg, std::vector<PairVector>& out) {
  const std::size_t T = msg.size();
  out.resize(T);
  if (T == 0) return;
  // log_beta[k] = ln p(y_{t+1:T} | pair_t = k, y_{1:t}) / prod of later increments; depends on curr state only.
  PairVector log_beta{};
  for (std::size_t t = T; t-- > 0;) {
    PairVector post{};
    for (int k = 0; k < kNumPairs; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      post[ku] = msg.log_filtered[t][ku] == kNegInf ? kNegInf : msg.log_filtered[t][ku] + log_beta[ku];
    }
    const double lse = log_sum_exp(post);
    for (int k = 0; k < kNumPairs; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      out[t][ku] = post[ku] == kNegInf ? 0.0 : std::exp(post[ku] - lse);
    }
    if (t == 0) break;
    PairVector ahead;
    for (int k = 0; k < kNumPairs; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      ahead[ku] = msg.log_local[t][ku] == kNegInf ? kNegInf : msg.log_local[t][ku] + log_beta[ku];
    }
    const std::array<double, 4> by_state = group_log_sum_exp(ahead, true);
    for (int k = 0; k < kNumPairs; ++k) {
      log_beta[static_cast<std::size_t>(k)] = by_state[pair_curr(k)] - msg.log_increment[t];
    }
  }
}

}  // namespace

std::vector<PairVector> smooth_pairs(const ForwardMessages& msg) {
  std::vector<PairVector> out;
  smooth_pairs_into(msg, out);
  return out;
}

SmoothedStates backward_smooth(const ForwardMessages& msg) {
  const std::vector<PairVector> pairs = smooth_pairs(msg);
  SmoothedStates out;
  out.probs.assign(pairs.size() + 1, {});
  auto normalise = [](std::array<double, 4>& p) {
    const double s = p[0] + p[1] + p[2] + p[3];
    if (s > 0.0)
      for (auto& x : p) x /= s;
  };
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    for (int k = 0; k < kNumPairs; ++k) {
      out.probs[t + 1][pair_curr(k)] += pairs[t][static_cast<std::size_t>(k)];
      if (t == 0) out.probs[0][pair_prev(k)] += pairs[0][static_cast<std::size_t>(k)];
    }
    normalise(out.probs[t + 1]);
  }
  normalise(out.probs[0]);
  return out;
}

SmoothedStates backward_smooth(const ForwardMessages& msg, const ModelData& data, const ModelParams& params) {
  if (msg.size() != data.size()) throw std::invalid_argument("forward messages do not match the data length");
  (void)params;
  return backward_smooth(msg);
}

double log_likelihood_gradient(const ModelData& data, const ModelParams& params, ModelMode mode, ModelParams& grad) {
  Workspace& ws = workspace();
  compute_day_terms(data, params.emission, ws.terms);
  run_filter(data, params, mode, ws.terms, ws.filter);
  const FilterResult& fr = ws.filter;
  if (!std::isfinite(fr.log_likelihood)) return fr.log_likelihood;
  smooth_pairs_into(fr.messages, ws.post);
  const std::vector<DayTerms>& terms = ws.terms;
  const std::vector<PairVector>& post = ws.post;

  const std::size_t T = data.size();
  const EmissionParams& em = params.emission;
  const Mat2 psi = psi_from_xi(em.xi[0], em.xi[1]);
  const Mat2 dpsi1 = Mat2::symmetric(1.0, 1.0, 1.0);
  const Mat2 dpsi2 = Mat2::symmetric(1.0, -1.0, 1.0);

  // d loglik / d mu_t(s) and d loglik / d omega_t(s).
  auto& g_mu = ws.g_mu;
  auto& g_omega = ws.g_omega;
  g_mu.assign(T, {});
  g_omega.assign(T, {});
  double g_xi1 = 0.0, g_xi2 = 0.0;
  auto& g_nu = grad.transition;

  auto clamp_active = [](double w) { return std::fabs(w) < kLogPrecisionClamp ? 1.0 : 0.0; };

  for (std::size_t t = 0; t < T; ++t) {
    const DayCovariates& day = data.cov.days[t];
    const DayTerms& d = terms[t];
    const PairVector& w = post[t];

    // Transition logits.
    if (!day.holiday() && mode == ModelMode::FourState) {
      const double a41 = logit_lambda_41(params.transition, day.n);
      const double a23 = logit_lambda_23(params.transition, day.n);
      const double sq34 = std::sqrt(static_cast<double>(std::max(day.p - 2, 0))) / 10.0;
      const double a34 = params.transition.nu34_1 + params.transition.nu34_2 * sq34 + (day.n == 1 ? params.transition.nu34_3 : 0.0);
      auto dlog = [](double a, bool into) {
        if (std::fabs(a) >= kLogitClamp) return 0.0;
        const double s = inv_logit(a);
        return into ? 1.0 - s : -s;
      };
      const double c41 = w[static_cast<std::size_t>(pair_index(4, 1))] * dlog(a41, true) +
                         w[static_cast<std::size_t>(pair_index(4, 4))] * dlog(a41, false);
      g_nu.nu41_1 += c41;
      g_nu.nu41_2 += c41 * std::sqrt(static_cast<double>(day.n - 1)) / 10.0;
      const double c34 = w[static_cast<std::size_t>(pair_index(3, 4))] * dlog(a34, true) +
                         w[static_cast<std::size_t>(pair_index(3, 3))] * dlog(a34, false);
      g_nu.nu34_1 += c34;
      g_nu.nu34_2 += c34 * sq34;
      if (day.n == 1) g_nu.nu34_3 += c34;
      const double c23 = w[static_cast<std::size_t>(pair_index(2, 3))] * dlog(a23, true) +
                         w[static_cast<std::size_t>(pair_index(2, 4))] * dlog(a23, false);
      g_nu.nu23_1 += c23;
      if (day.n == 2) g_nu.nu23_2 += c23;
    }

    if (t == 0) {
      std::array<double, 4> ws{};
      for (int k = 0; k < kNumPairs; ++k) ws[pair_curr(k)] += w[static_cast<std::size_t>(k)];
      for (std::size_t b = 0; b < 4; ++b) {
        if (ws[b] <= 0.0) continue;
        const PrecisionComponents& pc = d.pc[b];
        const Mat2 sigma = precision_inverse(pc);
        const Mat2 v = solve_lyapunov(psi, sigma);
        const Mat2 vinv = v.inverse();
        const Vec2 e = data.y[0] - d.mu[b];
        const Vec2 ve = vinv * e;
        const Mat2 gv = 0.5 * (outer(ve, ve) - vinv);
        const Mat2 adj = solve_lyapunov(psi.transpose(), gv);
        g_mu[0][b] += ws[b] * ve;
        g_xi1 += ws[b] * 2.0 * trace_product(adj, dpsi1 * v * psi.transpose());
        g_xi2 += ws[b] * 2.0 * trace_product(adj, dpsi2 * v * psi.transpose());
        const double i1 = 1.0 / pc.tau1, i2 = 1.0 / pc.tau2, f = pc.phi;
        const Mat2 ds_phi = Mat2::symmetric(0.0, i1, 2.0 * f * i1);
        const Mat2 ds_w2 = Mat2::symmetric(-i1, -f * i1, -f * f * i1);
        const Mat2 ds_w3 = Mat2::symmetric(0.0, 0.0, -i2);
        auto& go = g_omega[0][b];
        go[0] += ws[b] * trace_product(adj, ds_phi);
        go[1] += ws[b] * trace_product(adj, ds_w2) * clamp_active(d.omega[b][1]);
        go[2] += ws[b] * trace_product(adj, ds_w3) * clamp_active(d.omega[b][2]);
      }
      continue;
    }

    const DayTerms& dp = terms[t - 1];
    for (int k = 0; k < kNumPairs; ++k) {
      const double wk = w[static_cast<std::size_t>(k)];
      if (wk <= 0.0) continue;
      const std::size_t a = pair_prev(k), b = pair_curr(k);
      const Vec2 dev = data.y[t - 1] - dp.mu[a];
      const Vec2 e = data.y[t] - d.mu[b] - psi * dev;
      const PrecisionComponents& pc = d.pc[b];
      const double u1 = e.x1;
      const double u2 = e.x2 - pc.phi * e.x1;
      const Vec2 oe{pc.tau1 * u1 - pc.phi * pc.tau2 * u2, pc.tau2 * u2};
      g_mu[t][b] += wk * oe;
      g_mu[t - 1][a] += -wk * (psi * oe);
      g_xi1 += wk * (oe.x1 + oe.x2) * (dev.x1 + dev.x2);
      g_xi2 += wk * (oe.x1 - oe.x2) * (dev.x1 - dev.x2);
      auto& go = g_omega[t][b];
      go[0] += wk * pc.tau2 * u2 * e.x1;
      go[1] += wk * (0.5 - 0.5 * pc.tau1 * u1 * u1) * clamp_active(d.omega[b][1]);
      go[2] += wk * (0.5 - 0.5 * pc.tau2 * u2 * u2) * clamp_active(d.omega[b][2]);
    }
  }

  EmissionParams& ge = grad.emission;
  const int kmax = max_lag(data);
  const std::array<std::vector<double>, 2> pow_beta{power_table(em.rho_beta[0], kmax), power_table(em.rho_beta[1], kmax)};
  const std::vector<double> pow_theta = power_table(em.rho_theta, kmax);
  ge.xi[0] += g_xi1;
  ge.xi[1] += g_xi2;
  for (std::size_t t = 0; t < T; ++t) {
    const DayCovariates& day = data.cov.days[t];
    const SeasonalBasis& basis = data.basis[t];
    const DayTerms& d = terms[t];
    const auto type = static_cast<std::size_t>(day.region_type() - 1);
    const int kmin = std::min(day.n, day.p);

    for (int j = 0; j < 2; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      double sum = 0.0, sum_b = 0.0, sum_rho = 0.0;
      for (std::size_t s = 0; s < 4; ++s) {
        const double g = g_mu[t][s][j];
        if (g == 0.0) continue;
        sum += g;
        sum_b += g * d.b_weight[ju][s];
        if (s == 0 && day.n >= 1) sum_rho += g * day.n * pow_beta[ju][static_cast<std::size_t>(day.n - 1)];
        if (s == 2 && kmin >= 1) sum_rho += g * kmin * pow_beta[ju][static_cast<std::size_t>(kmin - 1)];
      }
      if (sum == 0.0) continue;
      ge.alpha[ju] += sum;
      ge.beta[ju][type] += sum_b;
      ge.rho_beta[ju] += sum_rho * em.beta[ju][type];
      for (int k = 0; k < em.k_gamma(); ++k) {
        ge.gamma.at(j, 0, k) += sum * basis.annual_cos[static_cast<std::size_t>(k)];
        ge.gamma.at(j, 1, k) += sum * basis.annual_sin[static_cast<std::size_t>(k)];
      }
      for (int k = 0; k < 3; ++k) {
        ge.delta.at(j, 0, k) += sum * basis.weekly_cos[static_cast<std::size_t>(k)];
        ge.delta.at(j, 1, k) += sum * basis.weekly_sin[static_cast<std::size_t>(k)];
      }
      ge.zeta[ju][0] += sum * day.w_tilde[j];
      ge.zeta[ju][1] += sum * day.w[j] * day.w_tilde[j];
    }

    for (int i = 0; i < 3; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      double sum = 0.0, sum_th = 0.0, sum_rho = 0.0;
      for (std::size_t s = 0; s < 4; ++s) {
        const double g = g_omega[t][s][iu];
        if (g == 0.0) continue;
        sum += g;
        sum_th += g * d.theta_weight[s];
        if (s == 0 && day.n >= 1) sum_rho += g * day.n * pow_theta[static_cast<std::size_t>(day.n - 1)];
        if (s == 2 && kmin >= 1) sum_rho += g * kmin * pow_theta[static_cast<std::size_t>(kmin - 1)];
      }
      if (sum == 0.0 && sum_th == 0.0) continue;
      ge.eta[iu] += sum;
      ge.theta[iu] += sum_th;
      ge.rho_theta += sum_rho * em.theta[iu];
      for (int k = 0; k < em.k_kappa(); ++k) {
        ge.kappa.at(i, 0, k) += sum * basis.annual_cos[static_cast<std::size_t>(k)];
        ge.kappa.at(i, 1, k) += sum * basis.annual_sin[static_cast<std::size_t>(k)];
      }
    }
  }
  return fr.log_likelihood;
}

SmoothedStates rao_blackwell_states(std::span<const ModelParams> draws, const ModelData& data, ModelMode mode,
                                    unsigned threads) {
  if (draws.empty()) throw std::invalid_argument("need at least one draw");
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(draws.size())));
  std::vector<SmoothedStates> partial(threads);
  auto work = [&](unsigned w) {
    SmoothedStates acc;
    acc.probs.assign(data.size() + 1, {});
    for (std::size_t i = w; i < draws.size(); i += threads) {
      const SmoothedStates s = backward_smooth(forward_filter(data, draws[i], mode).messages);
      for (std::size_t t = 0; t < s.size(); ++t)
        for (std::size_t k = 0; k < 4; ++k) acc.probs[t][k] += s.probs[t][k];
    }
    partial[w] = std::move(acc);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  SmoothedStates out;
  out.probs.assign(data.size() + 1, {});
  // Sum partial results in a fixed order so the result does not depend on scheduling.
  for (const auto& p : partial)
    for (std::size_t t = 0; t < out.size(); ++t)
      for (std::size_t k = 0; k < 4; ++k) out.probs[t][k] += p.probs[t][k];
  const double inv = 1.0 / static_cast<double>(draws.size());
  for (auto& row : out.probs)
    for (auto& x : row) x *= inv;
  return out;
}

std::vector<int> pointwise_mode(const SmoothedStates& s) {
  std::vector<int> out;
  out.reserve(s.size());
  for (const auto& p : s.probs) {
    out.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) + 1);
  }
  return out;
}

}  // namespace nhmm
