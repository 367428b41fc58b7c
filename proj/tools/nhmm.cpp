// Command-line front end: simulate | fit | smooth | forecast | ppc | report.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure, 4 R-hat above threshold with --strict.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nhmm/error.hpp"
#include "nhmm/generative.hpp"
#include "nhmm/io.hpp"
#include "nhmm/ppc_forecast.hpp"
#include "nhmm/prior.hpp"
#include "nhmm/sampler.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace nhmm;

namespace {

constexpr const char* kVersion = "1.0.0";

/// Stream tags so each command draws from its own part of the --seed stream tree.
enum SeedStream : std::uint64_t { kSimulate = 1, kPpc = 3, kForecast = 4 };

std::uint64_t command_seed(std::uint64_t seed, SeedStream tag) { return splitmix64(seed ^ splitmix64(tag)); }

struct ExitError : std::runtime_error {
  int code;
  ExitError(int c, const std::string& what) : std::runtime_error(what), code(c) {}
};

struct Options {
  std::string data, holidays, config, out_dir, draws, future_cwv, truth;
  std::string mode = "four_state";
  std::uint64_t seed = 20240101;
  int chains = 4;
  int iters = 10000;
  int horizon = 0;
  bool strict = false;
  std::string start = "2016-01-01";
  int days = 1500;
  std::vector<std::string> argv;
};

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::ifstream open_input(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("missing required input: ") + what);
  std::ifstream in(path);
  if (!in) throw InputError(std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

/// Runs a reader and prefixes its message with the file name.
template <class F>
auto read_file(const std::string& path, const char* what, F&& reader) {
  std::ifstream in = open_input(path, what);
  try {
    return reader(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what(), e.row(), e.column());
  }
}

/// Everything a command needs from --config: prior, sampler and a few command settings.
struct RunConfig {
  ConfigMap snapshot;
  Hyperparameters hyper;
  SamplerConfig sampler;
  int baseline_window = 10;
  double rhat_threshold = 1.05;
  int smooth_max_draws = 1000;
  int ppc_max_draws = 1000;
  int forecast_max_draws = 1000;
  unsigned threads = 0;
};

double config_number(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw InputError("config key '" + key + "': '" + v + "' is not a number");
}

int config_int(const std::string& key, const std::string& v) {
  const double x = config_number(key, v);
  if (x != std::floor(x) || x < 0 || x > 1e9) throw InputError("config key '" + key + "' must be a non-negative integer");
  return static_cast<int>(x);
}

bool config_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("config key '" + key + "' must be true or false");
}

RunConfig load_config(const Options& o) {
  RunConfig rc;
  ConfigMap cfg;
  if (!o.config.empty()) {
    std::ifstream in = open_input(o.config, "config");
    std::stringstream ss;
    ss << in.rdbuf();
    cfg = parse_config_text(ss.str());
  }
  rc.snapshot = cfg;
  rc.hyper = hyperparameters_from_config(cfg);

  SamplerConfig& s = rc.sampler;
  s.chains = o.chains;
  s.iterations = o.iters;
  s.seed = o.seed;
  for (auto it = cfg.begin(); it != cfg.end();) {
    const std::string& k = it->first;
    const std::string& v = it->second;
    bool used = true;
    if (k == "sampler.algorithm") s.algorithm = parse_algorithm(v);
    else if (k == "sampler.burn_in") s.burn_in = config_number(k, v);
    else if (k == "sampler.thin") s.thin = config_int(k, v);
    else if (k == "sampler.target_accept") s.target_accept = config_number(k, v);
    else if (k == "sampler.integration_time") s.integration_time = config_number(k, v);
    else if (k == "sampler.max_leapfrog") s.max_leapfrog = config_int(k, v);
    else if (k == "sampler.dense_metric") s.dense_metric = config_bool(k, v);
    else if (k == "sampler.laplace_start") s.laplace_start = config_bool(k, v);
    else if (k == "sampler.laplace_iterations") s.laplace_iterations = config_int(k, v);
    else if (k == "sampler.metropolis_target_accept") s.metropolis_target_accept = config_number(k, v);
    else if (k == "sampler.rhat_threshold") rc.rhat_threshold = config_number(k, v);
    else if (k == "threads") rc.threads = static_cast<unsigned>(config_int(k, v));
    else if (k == "baseline.window") rc.baseline_window = config_int(k, v);
    else if (k == "smooth.max_draws") rc.smooth_max_draws = config_int(k, v);
    else if (k == "ppc.max_draws") rc.ppc_max_draws = config_int(k, v);
    else if (k == "forecast.max_draws") rc.forecast_max_draws = config_int(k, v);
    else used = false;
    it = used ? cfg.erase(it) : std::next(it);
  }
  if (!cfg.empty()) throw InputError("unknown config key '" + cfg.begin()->first + "'", -1, cfg.begin()->first);
  s.threads = rc.threads;
  return rc;
}

ModelMode mode_of(const Options& o) { return parse_mode(o.mode.c_str()); }

/// Ingested series with covariates built against a baseline smoothed from the series itself.
struct Series {
  DemandTable table;
  HolidayCalendar calendar;
  SeasonalCwvBaseline baseline;
  ModelData data;
};

Series load_series(const Options& o, const RunConfig& rc) {
  Series s;
  s.table = read_file(o.data, "--data", [](std::istream& in) { return read_demand_csv(in); });
  s.calendar = read_file(o.holidays, "--holidays", [](std::istream& in) { return read_holidays_csv(in); });
  s.baseline = smooth_cwv_baseline(s.table.dates, s.table.cwv, rc.baseline_window);
  CovariateSeries cov = build_covariates(s.table.dates, s.table.cwv, s.calendar, s.baseline);
  s.data = ModelData::make(s.table.log_demand(), std::move(cov), std::max(rc.hyper.k_gamma, rc.hyper.k_kappa));
  return s;
}

/// At most `max_draws` retained draws, evenly spaced through the file.
std::vector<ModelParams> load_draws(const Options& o, const RunConfig& rc, int max_draws) {
  const PosteriorDraws d = read_file(o.draws, "--draws", [&](std::istream& in) {
    return read_draws_csv(in, rc.hyper.k_gamma, rc.hyper.k_kappa);
  });
  if (d.size() == 0) throw InputError(o.draws + ": no draws");
  const std::size_t n = std::min<std::size_t>(d.size(), static_cast<std::size_t>(std::max(1, max_draws)));
  std::vector<ModelParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(draw_params(d, i * d.size() / n, rc.hyper.k_gamma, rc.hyper.k_kappa));
  return out;
}

/// Collects output paths and writes manifest_<command>.json once the command has finished, so
/// several commands can share one output directory.
class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), o_(o), started_(utc_now()) {
    if (o.out_dir.empty()) throw InputError("--out-dir is required");
    fs::create_directories(o.out_dir);
  }

  std::string path(const std::string& name) {
    outputs_.push_back(name);
    return (fs::path(o_.out_dir) / name).string();
  }

  std::ofstream open(const std::string& name) {
    std::ofstream out(path(name));
    if (!out) throw InputError("cannot write '" + name + "' in " + o_.out_dir);
    return out;
  }

  void input(const std::string& role, const std::string& p) {
    if (!p.empty()) inputs_.push_back({role, p});
  }

  void finish(const RunConfig* rc, json extra = json::object()) {
    json m;
    m["command"] = command_;
    m["argv"] = o_.argv;
    m["version"] = kVersion;
    m["seed"] = o_.seed;
    m["mode"] = o_.mode;
    json in = json::array();
    for (const auto& [role, p] : inputs_) {
      in.push_back({{"role", role}, {"path", p}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
    }
    m["inputs"] = in;
    if (rc) {
      json c = json::object();
      for (const auto& [k, v] : rc->snapshot) c[k] = v;
      m["config"] = c;
    }
    json out = json::array();
    for (const auto& name : outputs_) {
      const std::string p = (fs::path(o_.out_dir) / name).string();
      out.push_back({{"path", name}, {"sha256", sha256_file(p)}});
    }
    m["outputs"] = out;
    for (auto& [k, v] : extra.items()) m[k] = v;
    m["started"] = started_;
    m["finished"] = utc_now();
    std::ofstream f(fs::path(o_.out_dir) / ("manifest_" + command_ + ".json"));
    f << m.dump(2) << "\n";
  }

 private:
  std::string command_;
  const Options& o_;
  std::string started_;
  std::vector<std::string> outputs_;
  std::vector<std::pair<std::string, std::string>> inputs_;
};

json params_json(const ModelParams& p) {
  const ParamLayout layout = ParamLayout::make(p.k_gamma(), p.k_kappa());
  const std::vector<double> v = to_vector(p);
  json j = json::object();
  for (std::size_t i = 0; i < v.size(); ++i) j[layout.names[i]] = v[i];
  return j;
}

ModelParams truth_from_json(const std::string& path, int k_gamma, int k_kappa) {
  std::ifstream in = open_input(path, "--truth");
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    throw InputError(path + ": not valid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw InputError(path + ": expected an object of parameter name to value");
  const ParamLayout layout = ParamLayout::make(k_gamma, k_kappa);
  std::vector<double> v = to_vector(reference_truth(k_gamma, k_kappa));
  for (auto& [name, value] : j.items()) {
    const std::size_t i = layout.find(name);
    if (i == layout.size()) throw InputError(path + ": unknown parameter '" + name + "'", -1, name);
    if (!value.is_number()) throw InputError(path + ": '" + name + "' is not a number", -1, name);
    v[i] = value.get<double>();
  }
  ModelParams p = from_vector(v, k_gamma, k_kappa);
  if (!in_support(p)) throw InputError(path + ": parameters outside their support");
  return p;
}

int cmd_simulate(const Options& o) {
  const RunConfig rc = load_config(o);
  Run run("simulate", o);
  run.input("config", o.config);
  run.input("truth", o.truth);
  const ModelParams truth =
      o.truth.empty() ? reference_truth(rc.hyper.k_gamma, rc.hyper.k_kappa) : truth_from_json(o.truth, rc.hyper.k_gamma, rc.hyper.k_kappa);
  if (o.days < 1) throw InputError("--days must be positive");
  SyntheticInputs in = synthetic_inputs(parse_date(o.start), o.days, command_seed(o.seed, kSimulate));
  if (!o.holidays.empty()) {
    run.input("holidays", o.holidays);
    in.calendar = read_file(o.holidays, "--holidays", [](std::istream& s) { return read_holidays_csv(s); });
  }
  // Covariates exactly as `fit` will rebuild them from the written files.
  in.baseline = smooth_cwv_baseline(in.dates, in.cwv, rc.baseline_window);
  in.cov = build_covariates(in.dates, in.cwv, in.calendar, in.baseline);
  Rng rng = make_rng(command_seed(o.seed, kSimulate), 1);
  const SimulationOutput sim = simulate(truth, in.cov, rng, mode_of(o));

  DemandTable table;
  table.dates = in.dates;
  table.cwv = in.cwv;
  for (const Vec2& y : sim.log_demand) table.demand.push_back({std::exp(y.x1), std::exp(y.x2)});
  {
    auto f = run.open("data.csv");
    write_demand_csv(f, table);
  }
  {
    auto f = run.open("holidays.csv");
    write_holidays_csv(f, in.calendar);
  }
  {
    auto f = run.open("states.csv");
    f << "date,state\n";
    for (std::size_t t = 0; t < in.dates.size(); ++t) f << format_date(in.dates[t]) << ',' << sim.states[t + 1] << '\n';
  }
  {
    auto f = run.open("truth.json");
    f << params_json(truth).dump(2) << "\n";
  }
  run.finish(&rc);
  return 0;
}

int cmd_fit(const Options& o) {
  const RunConfig rc = load_config(o);
  Run run("fit", o);
  run.input("data", o.data);
  run.input("holidays", o.holidays);
  run.input("config", o.config);
  const Series s = load_series(o, rc);
  const PosteriorModel model(s.data, rc.hyper, mode_of(o));
  rc.sampler.validate(model.dim());
  McmcResult r = run_mcmc(model, rc.sampler);
  {
    auto f = run.open("draws.csv");
    write_draws_csv(f, r.draws, rc.hyper.k_gamma, rc.hyper.k_kappa);
  }
  {
    auto f = run.open("diagnostics.json");
    f << diagnostics_json(r.diagnostics, rc.sampler);
  }
  const double max_rhat = r.diagnostics.max_rhat();
  json extra;
  extra["max_rhat"] = std::isfinite(max_rhat) ? json(max_rhat) : json(nullptr);
  extra["rhat_threshold"] = rc.rhat_threshold;
  run.finish(&rc, extra);
  if (o.strict && std::isfinite(max_rhat) && max_rhat >= rc.rhat_threshold) {
    throw ExitError(4, "max split R-hat " + std::to_string(max_rhat) + " is not below " + std::to_string(rc.rhat_threshold));
  }
  return 0;
}

int cmd_smooth(const Options& o) {
  const RunConfig rc = load_config(o);
  Run run("smooth", o);
  run.input("data", o.data);
  run.input("holidays", o.holidays);
  run.input("config", o.config);
  run.input("draws", o.draws);
  const Series s = load_series(o, rc);
  const std::vector<ModelParams> draws = load_draws(o, rc, rc.smooth_max_draws);
  const SmoothedStates sm = rao_blackwell_states(draws, s.data, mode_of(o), rc.threads);
  {
    auto f = run.open("smoothed.csv");
    write_smoothed_csv(f, s.table.dates, sm);
  }
  {
    const std::vector<int> mode = pointwise_mode(sm);
    auto f = run.open("state_mode.csv");
    f << "date,state\n";
    for (std::size_t t = 0; t < s.table.size(); ++t) f << format_date(s.table.dates[t]) << ',' << mode[t + 1] << '\n';
  }
  run.finish(&rc, {{"draws_used", draws.size()}});
  return 0;
}

int cmd_ppc(const Options& o) {
  const RunConfig rc = load_config(o);
  Run run("ppc", o);
  run.input("data", o.data);
  run.input("holidays", o.holidays);
  run.input("config", o.config);
  run.input("draws", o.draws);
  const Series s = load_series(o, rc);
  const std::vector<ModelParams> draws = load_draws(o, rc, rc.ppc_max_draws);
  const Replicates reps =
      posterior_predictive_replicates(draws, s.data.cov, mode_of(o), command_seed(o.seed, kPpc), std::max(1u, rc.threads));
  PpcSummary summary;
  try {
    summary = coverage_by_gap(reps, s.data.y, s.data.cov);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  {
    auto f = run.open("ppc.csv");
    write_ppc_csv(f, summary, s.data.y, s.data.cov);
  }
  {
    auto f = run.open("ppc_report.json");
    f << ppc_report_json(summary, mode_of(o));
  }
  run.finish(&rc, {{"draws_used", draws.size()}});
  return 0;
}

int cmd_forecast(const Options& o) {
  const RunConfig rc = load_config(o);
  Run run("forecast", o);
  run.input("data", o.data);
  run.input("holidays", o.holidays);
  run.input("config", o.config);
  run.input("draws", o.draws);
  run.input("future_cwv", o.future_cwv);
  if (o.horizon < 1) throw InputError("--horizon must be at least 1");
  const Series s = load_series(o, rc);
  const DemandTable fut = read_file(o.future_cwv, "--future-cwv", [](std::istream& in) { return read_cwv_csv(in); });
  if (static_cast<int>(fut.size()) < o.horizon) throw InputError("--future-cwv has fewer rows than --horizon");
  if (fut.dates.front() != s.table.dates.back() + std::chrono::days{1}) {
    throw InputError("--future-cwv must start the day after the last data row", 2, "date");
  }
  const std::span<const Date> fdates(fut.dates.data(), static_cast<std::size_t>(o.horizon));
  const std::span<const Vec2> fcwv(fut.cwv.data(), static_cast<std::size_t>(o.horizon));
  CovariateOptions copt;
  copt.epoch = s.table.dates.front();
  const CovariateSeries future = build_covariates(fdates, fcwv, s.calendar, s.baseline, copt);
  const std::vector<ModelParams> draws = load_draws(o, rc, rc.forecast_max_draws);
  const ForecastPaths paths =
      forecast(draws, s.data, future, mode_of(o), command_seed(o.seed, kForecast), std::max(1u, rc.threads));
  {
    auto f = run.open("forecast.csv");
    write_forecast_csv(f, summarise_forecast(paths), future);
  }
  run.finish(&rc, {{"draws_used", draws.size()}});
  return 0;
}

/// Plot-ready tables: state timeline, parameter summaries and histograms, PPC scatter with gaps.
int cmd_report(const Options& o) {
  const RunConfig rc = load_config(o);
  Run run("report", o);
  run.input("data", o.data);
  run.input("holidays", o.holidays);
  run.input("config", o.config);
  run.input("draws", o.draws);
  const Series s = load_series(o, rc);
  const fs::path dir(o.out_dir);
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };

  // State timeline with observed demand, from smoothed.csv in the output directory.
  if (fs::exists(dir / "smoothed.csv")) {
    const CsvTable sm = read_file((dir / "smoothed.csv").string(), "smoothed.csv", [](std::istream& in) { return read_csv_table(in); });
    if (sm.rows.size() != s.table.size()) throw InputError("smoothed.csv does not match --data in length");
    const std::size_t pc[4] = {sm.column("p_state1"), sm.column("p_state2"), sm.column("p_state3"), sm.column("p_state4")};
    auto f = run.open("report_states.csv");
    f << "date,n,p,holiday_type,y1,y2,mode_state,p_state1,p_state2,p_state3,p_state4\n";
    for (std::size_t t = 0; t < s.table.size(); ++t) {
      const DayCovariates& d = s.data.cov[t];
      int best = 0;
      double bp = -1.0;
      for (int k = 0; k < 4; ++k) {
        const double p = std::strtod(sm.rows[t][pc[k]].c_str(), nullptr);
        if (p > bp) {
          bp = p;
          best = k;
        }
      }
      f << format_date(d.date) << ',' << d.n << ',' << d.p << ',' << d.region_type() << ',' << num(s.data.y[t].x1) << ','
        << num(s.data.y[t].x2) << ',' << best + 1;
      for (int k = 0; k < 4; ++k) f << ',' << sm.rows[t][pc[k]];
      f << '\n';
    }
  }

  // Posterior summaries for every parameter and histograms for the holiday effects.
  if (!o.draws.empty()) {
    const PosteriorDraws d = read_file(o.draws, "--draws", [&](std::istream& in) {
      return read_draws_csv(in, rc.hyper.k_gamma, rc.hyper.k_kappa);
    });
    const Diagnostics diag = compute_diagnostics(d);
    const ParamLayout layout = ParamLayout::make(rc.hyper.k_gamma, rc.hyper.k_kappa);
    std::vector<std::vector<double>> cols(layout.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::vector<double> v = to_vector(draw_params(d, i, rc.hyper.k_gamma, rc.hyper.k_kappa));
      for (std::size_t k = 0; k < v.size(); ++k) cols[k].push_back(v[k]);
    }
    auto summary = run.open("report_params.csv");
    summary << "parameter,mean,sd,q05,q50,q95,rhat,ess_bulk\n";
    auto hist = run.open("report_density.csv");
    hist << "parameter,bin_lo,bin_hi,density\n";
    for (std::size_t k = 0; k < layout.size(); ++k) {
      const auto& x = cols[k];
      double mean = 0.0, sq = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(x.size());
      for (double v : x) sq += (v - mean) * (v - mean);
      const double sd = x.size() > 1 ? std::sqrt(sq / static_cast<double>(x.size() - 1)) : 0.0;
      summary << layout.names[k] << ',' << num(mean) << ',' << num(sd) << ',' << num(empirical_quantile(x, 0.05)) << ','
              << num(empirical_quantile(x, 0.5)) << ',' << num(empirical_quantile(x, 0.95)) << ','
              << (diag.rhat.empty() ? std::string("NA") : num(diag.rhat[k])) << ',' << num(diag.ess_bulk[k]) << '\n';

      const Block b = layout.tags[k].block;
      if (b != Block::Beta && b != Block::Rho && b != Block::Theta) continue;
      constexpr int bins = 40;
      const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
      const double lo = *lo_it, hi = *hi_it > *lo_it ? *hi_it : *lo_it + 1e-12;
      const double w = (hi - lo) / bins;
      std::vector<int> count(bins, 0);
      for (double v : x) ++count[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>((v - lo) / w)))];
      for (int i = 0; i < bins; ++i) {
        hist << layout.names[k] << ',' << num(lo + i * w) << ',' << num(lo + (i + 1) * w) << ','
             << num(count[static_cast<std::size_t>(i)] / (static_cast<double>(x.size()) * w)) << '\n';
      }
    }
  }

  // PPC scatter: observed against predictive summaries, labelled by gap bucket.
  if (fs::exists(dir / "ppc.csv")) {
    const CsvTable ppc = read_file((dir / "ppc.csv").string(), "ppc.csv", [](std::istream& in) { return read_csv_table(in); });
    const std::size_t cd = ppc.column("date");
    auto f = run.open("report_ppc.csv");
    f << "gap";
    for (const auto& h : ppc.header) f << ',' << h;
    f << '\n';
    const Date first = s.table.dates.front();
    for (const auto& row : ppc.rows) {
      const long t = static_cast<long>((parse_date(row[cd]) - first).count());
      if (t < 0 || t >= static_cast<long>(s.table.size())) throw InputError("ppc.csv date " + row[cd] + " is outside --data");
      const DayCovariates& d = s.data.cov[static_cast<std::size_t>(t)];
      f << gap_label(gap_bucket(d.n, d.p));
      for (const auto& c : row) f << ',' << c;
      f << '\n';
    }
  }
  run.finish(&rc);
  return 0;
}

void write_error_json(const Options& o, const std::string& kind, const std::string& message, long row,
                      const std::string& column, int code) {
  json e;
  e["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  if (row >= 0) e["error"]["row"] = row;
  if (!column.empty()) e["error"]["column"] = column;
  std::cerr << e.dump() << std::endl;
  if (!o.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    std::ofstream f(fs::path(o.out_dir) / "error.json");
    if (f) f << e.dump(2) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  o.argv.assign(argv, argv + argc);
  CLI::App app{"Four-state hidden Markov model for daily gas demand around public holidays"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto common = [&](CLI::App* c, bool needs_data) {
    auto* d = c->add_option("--data", o.data, "Demand/weather CSV (date,y1,y2,w1,w2)");
    auto* h = c->add_option("--holidays", o.holidays, "Holiday CSV (date,type)");
    if (needs_data) {
      d->required();
      h->required();
    }
    c->add_option("--config", o.config, "key = value configuration file");
    c->add_option("--seed", o.seed, "Master random seed");
    c->add_option("--out-dir", o.out_dir, "Output directory")->required();
    c->add_option("--mode", o.mode, "four_state or two_state")->check(CLI::IsMember({"four_state", "two_state"}));
  };

  auto* sim = app.add_subcommand("simulate", "Simulate a synthetic series from known parameters");
  common(sim, false);
  sim->add_option("--start", o.start, "First day (YYYY-MM-DD)");
  sim->add_option("--days", o.days, "Number of days");
  sim->add_option("--truth", o.truth, "JSON object overriding reference parameters by name");

  auto* fit = app.add_subcommand("fit", "Sample the posterior");
  common(fit, true);
  fit->add_option("--chains", o.chains, "Number of chains");
  fit->add_option("--iters", o.iters, "Iterations per chain, burn-in included");
  fit->add_flag("--strict", o.strict, "Exit with code 4 when max R-hat reaches the threshold");

  auto* smooth = app.add_subcommand("smooth", "Posterior state probabilities per day");
  common(smooth, true);
  smooth->add_option("--draws", o.draws, "draws.csv from fit")->required();

  auto* ppc = app.add_subcommand("ppc", "Posterior predictive coverage by distance to the nearest holiday");
  common(ppc, true);
  ppc->add_option("--draws", o.draws, "draws.csv from fit")->required();

  auto* fc = app.add_subcommand("forecast", "Predictive distribution for the days after the data");
  common(fc, true);
  fc->add_option("--draws", o.draws, "draws.csv from fit")->required();
  fc->add_option("--horizon", o.horizon, "Days ahead")->required();
  fc->add_option("--future-cwv", o.future_cwv, "CSV date,w1,w2 for the forecast days")->required();

  auto* rep = app.add_subcommand("report", "Plot-ready tables from the outputs in --out-dir");
  common(rep, true);
  rep->add_option("--draws", o.draws, "draws.csv from fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    write_error_json(o, "usage", e.what(), -1, "", 2);
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*fit) return cmd_fit(o);
    if (*smooth) return cmd_smooth(o);
    if (*ppc) return cmd_ppc(o);
    if (*fc) return cmd_forecast(o);
    if (*rep) return cmd_report(o);
  } catch (const ExitError& e) {
    write_error_json(o, "non_convergence", e.what(), -1, "", e.code);
    return e.code;
  } catch (const InputError& e) {
    write_error_json(o, "input", e.what(), e.row(), e.column(), 2);
    return 2;
  } catch (const NumericalError& e) {
    write_error_json(o, "numerical", e.what(), -1, "", 3);
    return 3;
  } catch (const std::exception& e) {
    write_error_json(o, "numerical", e.what(), -1, "", 3);
    return 3;
  }
  return 0;
}
