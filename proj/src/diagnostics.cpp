#include "nhmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace nhmm {

namespace {

ChainDraws split(const ChainDraws& chains) {
  ChainDraws out;
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) throw std::invalid_argument("chains must have equal length");
    if (c.size() < 4) throw std::invalid_argument("each chain needs at least 4 draws");
    const std::size_t half = c.size() / 2;
    // Odd lengths drop the middle draw.
    out.emplace_back(c.begin(), c.begin() + static_cast<long>(half));
    out.emplace_back(c.end() - static_cast<long>(half), c.end());
  }
  return out;
}

ChainDraws rank_normalise(const ChainDraws& chains) {
  std::vector<double> flat;
  for (const auto& c : chains) flat.insert(flat.end(), c.begin(), c.end());
  const std::size_t S = flat.size();
  std::vector<std::size_t> order(S);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return flat[a] < flat[b]; });
  std::vector<double> rank(S);
  for (std::size_t i = 0; i < S;) {
    std::size_t j = i;
    while (j + 1 < S && flat[order[j + 1]] == flat[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // average rank, 1-based
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  const boost::math::normal std_normal;
  ChainDraws out = chains;
  std::size_t idx = 0;
  for (auto& c : out)
    for (auto& x : c) x = boost::math::quantile(std_normal, (rank[idx++] - 0.375) / (static_cast<double>(S) + 0.25));
  return out;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double rhat_basic(const ChainDraws& c) {
  const auto N = static_cast<double>(c.front().size());
  std::vector<double> means, vars;
  for (const auto& x : c) {
    means.push_back(mean(x));
    vars.push_back(variance(x));
  }
  const double B = N * variance(means);
  const double W = mean(vars);
  if (W <= 0.0) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(((N - 1.0) / N * W + B / N) / W);
}

// Multi-chain ESS with Geyer's initial monotone sequence, chains of equal length.
double ess_basic(const ChainDraws& c) {
  const std::size_t M = c.size();
  const std::size_t N = c.front().size();
  std::vector<double> means(M), acov0(M);
  std::vector<std::vector<double>> centred(M);
  for (std::size_t m = 0; m < M; ++m) {
    means[m] = mean(c[m]);
    centred[m].resize(N);
    for (std::size_t i = 0; i < N; ++i) centred[m][i] = c[m][i] - means[m];
  }
  auto acov = [&](std::size_t m, std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < N; ++i) s += centred[m][i] * centred[m][i + lag];
    return s / static_cast<double>(N);
  };
  const auto Nd = static_cast<double>(N);
  double mean_var = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    acov0[m] = acov(m, 0);
    mean_var += acov0[m] * Nd / (Nd - 1.0);
  }
  mean_var /= static_cast<double>(M);
  double var_plus = mean_var * (Nd - 1.0) / Nd;
  if (M > 1) var_plus += variance(means);
  if (!(var_plus > 0.0)) return 1.0;

  auto rho = [&](std::size_t lag) {
    if (lag == 0) return 1.0;
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) s += acov(m, lag);
    s /= static_cast<double>(M);
    return 1.0 - (mean_var - s) / var_plus;
  };

  // Sum of positive, monotonically non-increasing pair sums.
  double tau_sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  std::size_t t = 0;
  while (t + 1 < N) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau_sum += pair;
    prev_pair = pair;
    t += 2;
  }
  const double tau = std::max(-1.0 + 2.0 * tau_sum, 1.0 / std::log10(static_cast<double>(M * N)));
  const double ess = static_cast<double>(M * N) / tau;
  return std::max(1.0, ess);
}

}  // namespace

double split_rhat(const ChainDraws& chains) {
  if (chains.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const ChainDraws s = split(chains);
  const double bulk = rhat_basic(rank_normalise(s));
  std::vector<double> flat;
  for (const auto& c : s) flat.insert(flat.end(), c.begin(), c.end());
  std::nth_element(flat.begin(), flat.begin() + static_cast<long>(flat.size() / 2), flat.end());
  double med = flat[flat.size() / 2];
  if (flat.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(flat.begin(), flat.begin() + static_cast<long>(flat.size() / 2)));
  }
  ChainDraws folded = s;
  for (auto& c : folded)
    for (auto& x : c) x = std::fabs(x - med);
  const double tail = rhat_basic(rank_normalise(folded));
  return std::max(bulk, tail);
}

double ess_bulk(const ChainDraws& chains) {
  if (chains.empty()) throw std::invalid_argument("no chains");
  return ess_basic(rank_normalise(split(chains)));
}

double ess_mean(const ChainDraws& chains) {
  if (chains.empty()) throw std::invalid_argument("no chains");
  return ess_basic(split(chains));
}

double mcse_mean(const ChainDraws& chains) {
  std::vector<double> flat;
  for (const auto& c : chains) flat.insert(flat.end(), c.begin(), c.end());
  return std::sqrt(variance(flat) / ess_mean(chains));
}

}  // namespace nhmm
