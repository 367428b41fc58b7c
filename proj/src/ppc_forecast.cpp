#include "nhmm/ppc_forecast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "nhmm/numeric.hpp"

namespace nhmm {

namespace {

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  for (auto& th : pool) th.join();
}

std::vector<SeasonalBasis> bases(const CovariateSeries& cov, int harmonics) {
  std::vector<SeasonalBasis> out;
  out.reserve(cov.size());
  for (const auto& d : cov.days) out.push_back(seasonal_basis(d.t_index, harmonics));
  return out;
}

int harmonics_needed(std::span<const ModelParams> draws) {
  int k = 1;
  for (const auto& p : draws) k = std::max({k, p.k_gamma(), p.k_kappa()});
  return k;
}

double sorted_quantile(const std::vector<double>& v, double q) {
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

DayPrediction summarise(std::vector<double> v) {
  DayPrediction d;
  double s = 0.0;
  for (double x : v) s += x;
  d.mean = s / static_cast<double>(v.size());
  std::sort(v.begin(), v.end());
  d.q025 = sorted_quantile(v, 0.025);
  d.q975 = sorted_quantile(v, 0.975);
  return d;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

}  // namespace

Replicates posterior_predictive_replicates(std::span<const ModelParams> draws, const CovariateSeries& cov,
                                           ModelMode mode, std::uint64_t seed, unsigned threads) {
  if (draws.empty()) throw std::invalid_argument("need at least one draw");
  const std::vector<SeasonalBasis> basis = bases(cov, harmonics_needed(draws));
  Replicates out(draws.size());
  parallel_for(draws.size(), threads, [&](std::size_t i) {
    Rng rng = make_rng(seed, i);
    out[i] = simulate(draws[i], cov, basis, rng, mode).log_demand;
  });
  return out;
}

double empirical_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("no values");
  std::sort(v.begin(), v.end());
  return sorted_quantile(v, q);
}

int gap_bucket(int n, int p) { return std::min(std::min(n, p), kGapBuckets - 1); }

std::string gap_label(int bucket) {
  return bucket == kGapBuckets - 1 ? std::to_string(bucket) + "+" : std::to_string(bucket);
}

PpcSummary coverage_by_gap(const Replicates& reps, std::span<const Vec2> observed, const CovariateSeries& cov) {
  if (reps.size() < 40) throw std::invalid_argument("at least 40 replicates are needed for 95% intervals");
  if (observed.size() != cov.size()) throw std::invalid_argument("observations and covariates differ in length");
  for (const auto& r : reps)
    if (r.size() != observed.size()) throw std::invalid_argument("replicate length differs from the data");
  PpcSummary s;
  s.replicates = static_cast<int>(reps.size());
  s.days.resize(observed.size());
  s.outside.resize(observed.size());
  std::vector<double> col(reps.size());
  for (std::size_t t = 0; t < observed.size(); ++t) {
    const int b = gap_bucket(cov.days[t].n, cov.days[t].p);
    for (int j = 0; j < 2; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      for (std::size_t r = 0; r < reps.size(); ++r) col[r] = reps[r][t][j];
      const DayPrediction d = summarise(col);
      s.days[t][ju] = d;
      const double y = observed[t][j];
      const bool out = y < d.q025 || y > d.q975;
      s.outside[t][ju] = out;
      for (GapCoverage* g : {&s.by_gap[static_cast<std::size_t>(b)][ju], &s.overall[ju]}) {
        ++g->days;
        if (out) ++g->outside;
        g->mean_error += y - d.mean;
      }
    }
  }
  for (auto& row : s.by_gap)
    for (auto& g : row)
      if (g.days > 0) g.mean_error /= g.days;
  for (auto& g : s.overall)
    if (g.days > 0) g.mean_error /= g.days;
  return s;
}

void write_ppc_csv(std::ostream& out, const PpcSummary& s, std::span<const Vec2> observed, const CovariateSeries& cov) {
  out << "date,region,observed,pred_mean,pred_q025,pred_q975,outside95\n";
  for (std::size_t t = 0; t < s.days.size(); ++t) {
    for (int j = 0; j < 2; ++j) {
      const auto& d = s.days[t][static_cast<std::size_t>(j)];
      out << format_date(cov.days[t].date) << ',' << j + 1 << ',' << fmt(observed[t][j]) << ',' << fmt(d.mean) << ','
          << fmt(d.q025) << ',' << fmt(d.q975) << ',' << (s.outside[t][static_cast<std::size_t>(j)] ? 1 : 0) << '\n';
    }
  }
}

std::string ppc_report_json(const PpcSummary& s, ModelMode mode) {
  nlohmann::ordered_json j;
  j["mode"] = mode_name(mode);
  j["replicates"] = s.replicates;
  j["interval"] = "central 95% (empirical 2.5% and 97.5% replicate quantiles)";
  auto cell = [](const GapCoverage& g) {
    nlohmann::ordered_json c;
    c["days"] = g.days;
    c["outside"] = g.outside;
    c["fraction"] = g.fraction();
    c["mean_error"] = g.mean_error;
    return c;
  };
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int b = 0; b < kGapBuckets; ++b) {
    for (int r = 0; r < 2; ++r) {
      const auto& g = s.by_gap[static_cast<std::size_t>(b)][static_cast<std::size_t>(r)];
      if (g.days == 0) continue;
      nlohmann::ordered_json row = cell(g);
      row["gap"] = gap_label(b);
      row["region"] = r + 1;
      rows.push_back(row);
    }
  }
  j["by_gap"] = rows;
  nlohmann::ordered_json overall = nlohmann::ordered_json::array();
  for (int r = 0; r < 2; ++r) {
    nlohmann::ordered_json row = cell(s.overall[static_cast<std::size_t>(r)]);
    row["region"] = r + 1;
    overall.push_back(row);
  }
  j["overall"] = overall;
  return j.dump(2) + "\n";
}

ForecastPaths forecast(std::span<const ModelParams> draws, const ModelData& history, const CovariateSeries& future,
                       ModelMode mode, std::uint64_t seed, unsigned threads) {
  if (draws.empty()) throw std::invalid_argument("need at least one draw");
  if (future.size() == 0) throw std::invalid_argument("forecast horizon must be at least one day");
  const int k = harmonics_needed(draws);
  const std::vector<SeasonalBasis> basis = bases(future, k);
  const DayCovariates& last_day = history.cov.days.back();
  if (future.days.front().t_index != last_day.t_index + 1) {
    throw std::invalid_argument("future covariates must continue the history's day index");
  }
  const SeasonalBasis last_basis = seasonal_basis(last_day.t_index, k);
  ForecastPaths out;
  out.log_demand.resize(draws.size());
  out.states.resize(draws.size());
  parallel_for(draws.size(), threads, [&](std::size_t i) {
    Rng rng = make_rng(seed, i);
    const FilterResult fr = forward_filter(history, draws[i], mode);
    if (!std::isfinite(fr.log_likelihood)) throw std::runtime_error("draw has a non-finite likelihood");
    // Filtered marginal of S_T, which is also the smoothed one at the last day.
    std::array<double, 4> sT{};
    const PairVector& last = fr.messages.log_filtered.back();
    for (int p = 0; p < kNumPairs; ++p)
      sT[static_cast<std::size_t>(kAugmentedPairs[static_cast<std::size_t>(p)].curr - 1)] +=
          std::exp(last[static_cast<std::size_t>(p)]);
    const int state = categorical_draw(rng, sT) + 1;
    const SimulationAnchor anchor{history.y.back(), last_day, last_basis, state};
    simulate_forward(draws[i], future.days, basis, anchor, rng, mode, out.states[i], out.log_demand[i]);
  });
  return out;
}

ForecastSummary summarise_forecast(const ForecastPaths& paths) {
  ForecastSummary s;
  const std::size_t h = paths.log_demand.front().size();
  s.days.resize(h);
  s.state_probs.assign(h, {});
  std::vector<double> col(paths.log_demand.size());
  for (std::size_t t = 0; t < h; ++t) {
    for (int j = 0; j < 2; ++j) {
      for (std::size_t r = 0; r < col.size(); ++r) col[r] = paths.log_demand[r][t][j];
      s.days[t][static_cast<std::size_t>(j)] = summarise(col);
    }
    for (const auto& st : paths.states) s.state_probs[t][static_cast<std::size_t>(st[t] - 1)] += 1.0;
    for (auto& p : s.state_probs[t]) p /= static_cast<double>(paths.states.size());
  }
  return s;
}

void write_forecast_csv(std::ostream& out, const ForecastSummary& s, const CovariateSeries& future) {
  out << "date,region,pred_mean,pred_q025,pred_q975,p_state1,p_state2,p_state3,p_state4\n";
  for (std::size_t t = 0; t < s.days.size(); ++t) {
    for (int j = 0; j < 2; ++j) {
      const auto& d = s.days[t][static_cast<std::size_t>(j)];
      out << format_date(future.days[t].date) << ',' << j + 1 << ',' << fmt(d.mean) << ',' << fmt(d.q025) << ','
          << fmt(d.q975);
      for (double p : s.state_probs[t]) out << ',' << fmt(p);
      out << '\n';
    }
  }
}

}  // namespace nhmm
