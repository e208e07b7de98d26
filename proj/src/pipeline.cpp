// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "garchrnn/csv_io.hpp"
#include "garchrnn/error.hpp"
#include "garchrnn/eval.hpp"
#include "garchrnn/forecast.hpp"
#include "garchrnn/network.hpp"
#include "garchrnn/risk.hpp"
#include "garchrnn/stats.hpp"

namespace garchrnn {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& known_models() {
  static const std::vector<std::string> names = {"garch", "gjr",  "garch_gru", "garch_lstm",
                                                 "gru",   "lstm", "bm_pipeline"};
  return names;
}

bool is_classical_model(const std::string& model) { return model == "garch" || model == "gjr"; }

namespace {

std::string joined_models() {
  std::string s;
  for (const auto& m : known_models()) s += (s.empty() ? "" : ", ") + m;
  return s;
}

void check_model(const std::string& m) {
  const auto& k = known_models();
  if (std::find(k.begin(), k.end(), m) == k.end())
    throw ConfigError("unknown model '" + m + "'; valid names: " + joined_models());
}

Date parse_config_date(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("splits.") + key + " is required");
  const auto d = Date::parse(j.at(key).get<std::string>());
  if (!d) throw ConfigError(std::string("splits.") + key + " is not a YYYY-MM-DD date");
  return *d;
}

ModelKind network_kind(const std::string& model) {
  return model == "bm_pipeline" ? ModelKind::lstm : parse_model_kind(model);
}

GarchSpec classical_spec(const std::string& model, Innovation dist) {
  return {model == "gjr" ? GarchModel::gjr : GarchModel::plain, dist};
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::size_t date_index(const std::vector<Date>& dates, const Date& d) {
  const auto it = std::lower_bound(dates.begin(), dates.end(), d);
  if (it == dates.end() || *it != d) throw DataError("date " + d.to_string() + " not in series");
  return static_cast<std::size_t>(it - dates.begin());
}

}  // namespace

void RunConfig::validate() const {
  if (prices.empty()) throw ConfigError("data.prices is required");
  if (models.empty()) throw ConfigError("models must be non-empty");
  for (const auto& m : models) check_model(m);
  if (horizons.empty()) throw ConfigError("horizons must be non-empty");
  for (int h : horizons)
    if (h < 1 || h > 30) throw ConfigError("horizons must lie in 1..30, got " + std::to_string(h));
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (!(splits.train_end < splits.test_start && splits.test_start <= splits.test_end &&
        splits.test_end < splits.stress_start && splits.stress_start <= splits.stress_end))
    throw ConfigError(
        "split dates must satisfy train_end < test_start <= test_end < stress_start <= stress_end");
  if (!(val_fraction > 0 && val_fraction < 1)) throw ConfigError("val_fraction must lie in (0, 1)");
  if (!(var_alpha > 0 && var_alpha < 1)) throw ConfigError("var_alpha must lie in (0, 1)");
  if (!(high_vol_q >= 0 && high_vol_q < 1)) throw ConfigError("high_vol_q must lie in [0, 1)");
  if (k < 2) throw ConfigError("k must be at least 2");
  if (window < 1) throw ConfigError("window must be positive");
  if (!(lambda_max > 0 && lambda_max <= 1)) throw ConfigError("lambda_max must lie in (0, 1]");
  if (lm_lags < 1) throw ConfigError("lm_lags must be positive");
  if (parallel < 1) throw ConfigError("parallel must be at least 1");
  train.validate();
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  static const std::set<std::string> allowed = {
      "data",       "models",    "horizons", "seeds",  "train",    "splits",
      "val_fraction", "var_alpha", "high_vol_q", "k",  "window",   "lambda_max",
      "garch_distribution", "lm_lags", "out_dir", "parallel"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");
  RunConfig c;
  try {
    const auto& d = j.at("data");
    fs::path prices = d.at("prices").get<std::string>();
    c.prices = prices.is_absolute() ? prices : base_dir / prices;
    c.date_column = d.value("date_column", c.date_column);
    c.price_column = d.value("price_column", c.price_column);
    c.models = j.at("models").get<std::vector<std::string>>();
    c.horizons = j.value("horizons", std::vector<int>{1, 3, 7});
    c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("train")) {
      if (j["train"].contains("seed") || j["train"].contains("horizon"))
        throw ConfigError("train.seed and train.horizon come from seeds and horizons");
      c.train = train_config_from_json(j["train"]);
    }
    const auto& s = j.at("splits");
    c.splits = {parse_config_date(s, "train_end"), parse_config_date(s, "test_start"),
                parse_config_date(s, "test_end"), parse_config_date(s, "stress_start"),
                parse_config_date(s, "stress_end")};
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.var_alpha = j.value("var_alpha", c.var_alpha);
    c.high_vol_q = j.value("high_vol_q", c.high_vol_q);
    c.k = j.value("k", c.k);
    c.window = j.value("window", c.window);
    c.lambda_max = j.value("lambda_max", c.lambda_max);
    c.garch_distribution = parse_innovation(j.value("garch_distribution", std::string("normal")));
    c.lm_lags = j.value("lm_lags", c.lm_lags);
    if (j.contains("out_dir")) {
      fs::path out = j["out_dir"].get<std::string>();
      c.out_dir = out.is_absolute() ? out : base_dir / out;
    }
    c.parallel = j.value("parallel", c.parallel);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  json train = to_json(c.train);
  train.erase("seed");
  train.erase("horizon");
  return {{"data", {{"prices", c.prices.string()},
                    {"date_column", c.date_column},
                    {"price_column", c.price_column}}},
          {"models", c.models},
          {"horizons", c.horizons},
          {"seeds", c.seeds},
          {"train", train},
          {"splits", {{"train_end", c.splits.train_end.to_string()},
                      {"test_start", c.splits.test_start.to_string()},
                      {"test_end", c.splits.test_end.to_string()},
                      {"stress_start", c.splits.stress_start.to_string()},
                      {"stress_end", c.splits.stress_end.to_string()}}},
          {"val_fraction", c.val_fraction},
          {"var_alpha", c.var_alpha},
          {"high_vol_q", c.high_vol_q},
          {"k", c.k},
          {"window", c.window},
          {"lambda_max", c.lambda_max},
          {"garch_distribution", to_string(c.garch_distribution)},
          {"lm_lags", c.lm_lags},
          {"out_dir", c.out_dir.string()},
          {"parallel", c.parallel}};
}

void apply_overrides(RunConfig& cfg, const RunOverrides& o) {
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.parallel) cfg.parallel = *o.parallel;
  cfg.validate();
}

std::vector<double> Experiment::development_returns() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < returns.size() && returns.dates[i] <= cfg.splits.train_end; ++i)
    out.push_back(returns.values[i]);
  return out;
}

Experiment load_experiment(const RunConfig& cfg) {
  Experiment e;
  e.cfg = cfg;
  const auto prices = load_price_csv(cfg.prices, cfg.date_column, cfg.price_column);
  e.returns = log_returns(prices, true);
  e.vol = realized_volatility(e.returns, cfg.k);
  e.features = default_features(e.returns, e.vol);
  return e;
}

Segments build_segments(const RunConfig& cfg, const FeatureFrame& frame,
                        const ReturnSeries& returns, const VolSeries& vol, int horizon) {
  const auto all = build_windows(frame, vol, cfg.window, horizon);
  Segments seg;
  WindowedDataset dev{{}, all.window, all.horizon};
  seg.test = seg.stress = dev;
  for (const auto& s : all.samples) {
    if (s.target_date <= cfg.splits.train_end)
      dev.samples.push_back(s);
    else if (s.target_date >= cfg.splits.test_start && s.target_date <= cfg.splits.test_end)
      seg.test.samples.push_back(s);
    else if (s.target_date >= cfg.splits.stress_start && s.target_date <= cfg.splits.stress_end)
      seg.stress.samples.push_back(s);
  }
  if (dev.empty())
    throw DataError("no samples with targets on or before " + cfg.splits.train_end.to_string());
  if (seg.test.empty())
    throw DataError("no samples with targets between " + cfg.splits.test_start.to_string() +
                    " and " + cfg.splits.test_end.to_string());
  std::tie(seg.train, seg.val) = chronological_split(dev, cfg.val_fraction);

  const Date last_anchor = seg.train.samples.back().anchor;
  seg.scaler = FeatureScaler::fit(frame, date_index(frame.dates, last_anchor) + 1);
  for (auto* d : {&seg.train, &seg.val, &seg.test, &seg.stress}) seg.scaler.apply(*d);

  std::vector<double> fit_returns;
  for (std::size_t i = 0; i < returns.size() && returns.dates[i] <= last_anchor; ++i)
    fit_returns.push_back(returns.values[i]);
  seg.mu = mean(fit_returns);
  seg.sigma2_init = population_variance(fit_returns);
  if (!(seg.sigma2_init > 0)) throw DataError("training returns have zero variance");
  return seg;
}

std::string job_tag(const std::string& model, int horizon, std::uint64_t seed) {
  return model + "_h" + std::to_string(horizon) + "_s" + std::to_string(seed);
}

namespace {

const char* const kSegmentNames[] = {"train", "val", "test", "stress"};

const WindowedDataset& segment(const Segments& s, std::string_view name) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  return s.stress;
}

struct PreparedData {
  Experiment exp;
  std::optional<GarchFit> pipeline_fit;  // GARCH behind the pipeline benchmark
  std::optional<FeatureFrame> pipeline_frame;
};

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData p{load_experiment(cfg), std::nullopt, std::nullopt};
  if (std::find(cfg.models.begin(), cfg.models.end(), "bm_pipeline") != cfg.models.end()) {
    p.pipeline_fit = fit_garch_mle(p.exp.development_returns(),
                                   {GarchModel::plain, cfg.garch_distribution});
    p.pipeline_frame = pipeline_frame(pipeline_features(p.pipeline_fit->params, p.exp.returns),
                                      p.exp.returns, p.exp.vol);
  }
  return p;
}

const FeatureFrame& frame_for(const PreparedData& p, const std::string& model) {
  return model == "bm_pipeline" ? *p.pipeline_frame : p.exp.features;
}

Segments segments_for(const PreparedData& p, const std::string& model, int horizon) {
  return build_segments(p.exp.cfg, frame_for(p, model), p.exp.returns, p.exp.vol, horizon);
}

fs::path fit_path(const RunConfig& cfg, const std::string& model) {
  return cfg.out_dir / "fits" / (model + ".json");
}

fs::path checkpoint_path(const RunConfig& cfg, const std::string& tag) {
  return cfg.out_dir / "checkpoints" / (tag + ".json");
}

fs::path forecast_path(const RunConfig& cfg, std::string_view seg, const std::string& tag) {
  return cfg.out_dir / "forecasts" / std::string(seg) / (tag + ".csv");
}

std::vector<std::uint64_t> seeds_for(const RunConfig& cfg, const std::string& model) {
  if (is_classical_model(model)) return {0};
  return cfg.seeds;
}

struct Job {
  std::string model;
  int horizon;
  std::uint64_t seed;
};

std::vector<Job> expand_jobs(const RunConfig& cfg, const JobFilter& f) {
  if (f.model) check_model(*f.model);
  if (f.model && std::find(cfg.models.begin(), cfg.models.end(), *f.model) == cfg.models.end())
    throw ConfigError("model '" + *f.model + "' is not listed in the config");
  if (f.horizon && std::find(cfg.horizons.begin(), cfg.horizons.end(), *f.horizon) ==
                       cfg.horizons.end())
    throw ConfigError("horizon " + std::to_string(*f.horizon) + " is not listed in the config");
  std::vector<Job> jobs;
  for (const auto& m : cfg.models) {
    if (f.model && *f.model != m) continue;
    for (int h : cfg.horizons) {
      if (f.horizon && *f.horizon != h) continue;
      for (auto s : seeds_for(cfg, m)) {
        if (f.seed && !is_classical_model(m) && *f.seed != s) continue;
        jobs.push_back({m, h, s});
      }
    }
  }
  if (jobs.empty()) throw ConfigError("no (model, horizon, seed) jobs match the selection");
  return jobs;
}

GarchFit fit_classical(const Experiment& e, const std::string& model) {
  return fit_garch_mle(e.development_returns(), classical_spec(model, e.cfg.garch_distribution));
}

void write_fit(const RunConfig& cfg, const std::string& model, const GarchFit& fit) {
  write_json_file(fit_path(cfg, model), to_json(fit));
}

GarchFit read_fit(const RunConfig& cfg, const std::string& model) {
  return garch_fit_from_json(read_json_file(fit_path(cfg, model)));
}

// Returns true when training diverged.
bool run_train_job(const PreparedData& p, const Job& job) {
  const RunConfig& cfg = p.exp.cfg;
  const Segments seg = segments_for(p, job.model, job.horizon);
  const FeatureFrame& frame = frame_for(p, job.model);
  NetworkShape shape{network_kind(job.model), static_cast<int>(frame.values.cols()),
                     cfg.train.hidden_dim, cfg.train.num_layers};
  TrainConfig tc = cfg.train;
  tc.seed = job.seed;
  tc.horizon = job.horizon;
  Network init = Network::initialize(shape, cfg.lambda_max, seg.mu, seg.sigma2_init, job.seed);
  const auto trained = train_network(std::move(init), seg.train.samples, seg.val.samples, tc);

  const std::string tag = job_tag(job.model, job.horizon, job.seed);
  json ckpt = {{"model_id", job.model},
               {"horizon", job.horizon},
               {"seed", job.seed},
               {"feature_names", frame.names},
               {"scaler", {{"mean", seg.scaler.mean}, {"scale", seg.scaler.scale}}},
               {"train_config", to_json(tc)},
               {"network", to_json(trained.net)},
               {"optimizer", to_json(trained.report.optimizer)}};
  write_json_file(checkpoint_path(cfg, tag), ckpt);

  json report = to_json(trained.report);
  report["model_id"] = job.model;
  report["horizon"] = job.horizon;
  report["seed"] = job.seed;
  report["n_train"] = seg.train.size();
  report["n_val"] = seg.val.size();
  write_json_file(cfg.out_dir / "reports" / (tag + ".json"), report);
  write_json_file(cfg.out_dir / "timing" / (tag + ".json"), timing_json(trained.report));
  return trained.report.diverged;
}

std::vector<double> returns_at_targets(const Experiment& e, const std::vector<ForecastRecord>& recs,
                                       int horizon) {
  std::vector<double> out;
  out.reserve(recs.size());
  for (const auto& r : recs) {
    const std::size_t i = date_index(e.returns.dates, r.anchor_date) + static_cast<std::size_t>(horizon);
    if (i >= e.returns.size()) throw DataError("forecast anchor " + r.anchor_date.to_string() +
                                               " has no realized return");
    out.push_back(e.returns.values[i]);
  }
  return out;
}

std::vector<Date> target_dates(const Experiment& e, const std::vector<ForecastRecord>& recs,
                               int horizon) {
  std::vector<Date> out;
  for (const auto& r : recs)
    out.push_back(e.returns.dates[date_index(e.returns.dates, r.anchor_date) +
                                  static_cast<std::size_t>(horizon)]);
  return out;
}

std::string subset_label(double q) {
  std::ostringstream os;
  os << "high_vol_q" << q;
  return os.str();
}

}  // namespace

void cmd_prepare(const RunConfig& cfg) {
  const auto p = prepare_data(cfg);
  const auto& e = p.exp;
  const fs::path dir = cfg.out_dir / "data";
  write_returns_csv(dir / "returns.csv", e.returns, e.vol);
  write_features_csv(dir / "features.csv", e.features);
  for (int h : cfg.horizons) {
    const Segments seg = build_segments(cfg, e.features, e.returns, e.vol, h);
    for (const char* name : kSegmentNames) {
      const auto& d = segment(seg, name);
      if (d.empty()) continue;
      write_dataset_csv(dir / ("dataset_h" + std::to_string(h) + "_" + name + ".csv"), d,
                        e.features.names);
    }
  }
  const auto diag = diagnose(e.returns, cfg.lm_lags);
  write_json_file(cfg.out_dir / "diagnostics.json",
                  {{"count", diag.count},
                   {"mean", diag.mean},
                   {"std", diag.std},
                   {"skewness", diag.skewness},
                   {"kurtosis", diag.kurtosis},
                   {"lm_stat", diag.lm_stat},
                   {"lm_pvalue", diag.lm_pvalue},
                   {"lm_lags", diag.lm_lags},
                   {"t_stat", diag.t_stat},
                   {"t_pvalue", diag.t_pvalue}});
  write_json_file(cfg.out_dir / "config.resolved.json", to_json(cfg));
}

void cmd_fit_garch(const RunConfig& cfg) {
  const auto e = load_experiment(cfg);
  for (const char* model : {"garch", "gjr"}) write_fit(cfg, model, fit_classical(e, model));
}

void cmd_train(const RunConfig& cfg, const JobFilter& filter) {
  const auto jobs = expand_jobs(cfg, filter);
  const auto p = prepare_data(cfg);

  std::vector<Job> neural;
  std::set<std::string> classical;
  for (const auto& j : jobs) {
    if (is_classical_model(j.model))
      classical.insert(j.model);
    else
      neural.push_back(j);
  }
  for (const auto& m : classical) write_fit(cfg, m, fit_classical(p.exp, m));

  std::vector<std::exception_ptr> errors(neural.size());
  std::vector<char> diverged(neural.size(), 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < neural.size();) {
      try {
        diverged[i] = run_train_job(p, neural[i]) ? 1 : 0;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.parallel), neural.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::string bad;
  for (std::size_t i = 0; i < neural.size(); ++i)
    if (diverged[i]) bad += (bad.empty() ? "" : ", ") + job_tag(neural[i].model, neural[i].horizon, neural[i].seed);
  if (!bad.empty())
    throw DivergenceError("training diverged for " + bad + "; best finite checkpoints were written");
}

void cmd_forecast(const RunConfig& cfg, const JobFilter& filter) {
  const auto jobs = expand_jobs(cfg, filter);
  const auto p = prepare_data(cfg);
  std::vector<std::string> missing;
  for (const auto& j : jobs) {
    const fs::path src = is_classical_model(j.model)
                             ? fit_path(cfg, j.model)
                             : checkpoint_path(cfg, job_tag(j.model, j.horizon, j.seed));
    if (!fs::exists(src)) missing.push_back(src.string());
  }
  if (!missing.empty()) {
    std::string msg = "missing fitted models (run train or fit-garch first):";
    for (const auto& m : missing) msg += "\n  " + m;
    throw DataError(msg);
  }

  for (const auto& j : jobs) {
    const Segments seg = segments_for(p, j.model, j.horizon);
    const std::string tag = job_tag(j.model, j.horizon, j.seed);
    std::unique_ptr<Predictor> pred;
    std::optional<Network> net;
    if (is_classical_model(j.model)) {
      pred = std::make_unique<ClassicalForecaster>(read_fit(cfg, j.model).params, j.horizon);
    } else {
      const json ckpt = read_json_file(checkpoint_path(cfg, tag));
      try {
        net = network_from_json(ckpt.at("network"));
      } catch (const json::exception& e) {
        throw DataError(checkpoint_path(cfg, tag).string() + ": " + e.what());
      }
      if (net->shape.kind != network_kind(j.model))
        throw DataError(checkpoint_path(cfg, tag).string() + ": checkpoint holds a different model");
      pred = std::make_unique<NetworkPredictor>(*net);
    }
    for (const char* name : kSegmentNames) {
      const auto& d = segment(seg, name);
      if (d.empty()) continue;
      write_forecast_csv(forecast_path(cfg, name, tag),
                         rolling_forecast(*pred, d, j.horizon, j.model, j.seed));
    }
  }
}

void cmd_evaluate(const RunConfig& cfg) {
  const auto jobs = expand_jobs(cfg, {});
  const auto e = load_experiment(cfg);
  std::vector<std::string> missing;
  for (const char* name : {"test", "stress"}) {
    for (const auto& j : jobs) {
      const auto path = forecast_path(cfg, name, job_tag(j.model, j.horizon, j.seed));
      if (!fs::exists(path)) missing.push_back(path.string());
    }
  }
  // The stress segment may legitimately be empty when the data stop early.
  std::map<int, bool> has_stress;
  for (int h : cfg.horizons)
    has_stress[h] = !build_segments(cfg, e.features, e.returns, e.vol, h).stress.empty();
  std::erase_if(missing, [&](const std::string& path) {
    if (path.find("/stress/") == std::string::npos) return false;
    for (int h : cfg.horizons)
      if (!has_stress[h] && path.find("_h" + std::to_string(h) + "_s") != std::string::npos) return true;
    return false;
  });
  if (!missing.empty()) {
    std::string msg = "missing forecast files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw DataError(msg);
  }

  json summary = json::object();
  for (const char* name : {"test", "stress"}) {
    std::vector<MetricsReport> per_seed;
    std::vector<SeedAggregate> aggregates;
    for (const auto& model : cfg.models) {
      for (int h : cfg.horizons) {
        if (std::string_view(name) == "stress" && !has_stress[h]) continue;
        std::vector<MetricsReport> full, high;
        for (auto s : seeds_for(cfg, model)) {
          const auto recs = read_forecast_csv(forecast_path(cfg, name, job_tag(model, h, s)));
          auto m = compute_metrics(recs);
          full.push_back(m);
          auto hv = compute_metrics(high_vol_subset(recs, cfg.high_vol_q));
          hv.subset = subset_label(cfg.high_vol_q);
          high.push_back(hv);
        }
        per_seed.insert(per_seed.end(), full.begin(), full.end());
        per_seed.insert(per_seed.end(), high.begin(), high.end());
        aggregates.push_back(aggregate_seeds(full));
        aggregates.push_back(aggregate_seeds(high));
      }
    }
    if (aggregates.empty()) continue;
    const fs::path dir = cfg.out_dir / "metrics";
    write_per_seed_metrics_csv(dir / (std::string(name) + "_per_seed.csv"), per_seed);
    write_aggregate_metrics_csv(dir / (std::string(name) + "_aggregate.csv"), aggregates);
    json rows = json::array();
    for (const auto& a : aggregates) {
      auto summ = [](const MetricSummary& m) {
        return json{{"mean", std::isnan(m.mean) ? json(nullptr) : json(m.mean)},
                    {"std", m.std ? json(*m.std) : json(nullptr)}};
      };
      rows.push_back({{"model_id", a.model_id},
                      {"horizon", a.horizon},
                      {"subset", a.subset},
                      {"n_seeds", a.n_seeds},
                      {"mse", summ(a.mse)},
                      {"mae", summ(a.mae)},
                      {"smape", summ(a.smape)},
                      {"oos_r2", summ(a.oos_r2)}});
    }
    summary[name] = rows;
  }
  write_json_file(cfg.out_dir / "metrics" / "metrics.json", summary);
}

void cmd_backtest(const RunConfig& cfg, int horizon) {
  if (horizon != 1) throw ConfigError("backtest is defined for one-step forecasts only (horizon 1)");
  if (std::find(cfg.horizons.begin(), cfg.horizons.end(), 1) == cfg.horizons.end())
    throw ConfigError("backtest needs horizon 1 in the config");
  if (!(cfg.var_alpha > 0 && cfg.var_alpha < 1)) throw ConfigError("var_alpha must lie in (0, 1)");
  const auto p = prepare_data(cfg);
  const auto& e = p.exp;

  std::vector<std::string> missing;
  for (const auto& model : cfg.models)
    for (auto s : seeds_for(cfg, model))
      for (const char* name : {"train", "test"}) {
        const auto path = forecast_path(cfg, name, job_tag(model, 1, s));
        if (!fs::exists(path)) missing.push_back(path.string());
      }
  if (!missing.empty()) {
    std::string msg = "missing one-day forecast files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw DataError(msg);
  }

  std::map<std::string, std::ostringstream> tables;
  json out = json::object();
  for (const auto& model : cfg.models) {
    const Segments seg = segments_for(p, model, 1);
    for (auto s : seeds_for(cfg, model)) {
      const std::string tag = job_tag(model, 1, s);
      const auto train_recs = read_forecast_csv(forecast_path(cfg, "train", tag));
      std::vector<double> sigma;
      for (const auto& r : train_recs) sigma.push_back(r.predicted_sigma);
      const auto resid =
          standardized_residuals(returns_at_targets(e, train_recs, 1), seg.mu, sigma);
      const double nu = fit_student_t(resid).nu;

      for (const char* name : {"test", "stress"}) {
        const auto path = forecast_path(cfg, name, tag);
        if (std::string_view(name) == "stress" && !fs::exists(path)) continue;
        const auto recs = read_forecast_csv(path);
        std::vector<double> pred;
        for (const auto& r : recs) pred.push_back(r.predicted_sigma);
        const auto dates = target_dates(e, recs, 1);
        const auto var = build_var_series(dates, pred, seg.mu, nu, cfg.var_alpha);
        const auto rep = backtest(returns_at_targets(e, recs, 1), var, cfg.var_alpha);
        write_var_csv(cfg.out_dir / "var" / name / (tag + ".csv"), rep);
        auto& t = tables[name];
        if (t.tellp() == 0)
          t << "model_id,seed,alpha,nu,mu,n_forecasts,n_violations,violation_ratio,mean_pinball_loss\n";
        t << model << ',' << s << ',' << format_double(cfg.var_alpha) << ',' << format_double(nu)
          << ',' << format_double(seg.mu) << ',' << rep.n_forecasts << ',' << rep.n_violations
          << ',' << format_double(rep.violation_ratio) << ','
          << format_double(rep.mean_pinball_loss) << '\n';
        out[name].push_back({{"model_id", model},
                             {"seed", s},
                             {"alpha", cfg.var_alpha},
                             {"nu", nu},
                             {"mu", seg.mu},
                             {"n_forecasts", rep.n_forecasts},
                             {"n_violations", rep.n_violations},
                             {"violation_ratio", rep.violation_ratio},
                             {"mean_pinball_loss", rep.mean_pinball_loss}});
      }
    }
  }
  for (auto& [name, t] : tables) write_text_file(cfg.out_dir / "backtest" / (name + ".csv"), t.str());
  write_json_file(cfg.out_dir / "backtest" / "backtest.json", out);
}

void cmd_params(const RunConfig& cfg) {
  std::ostringstream os;
  os << "model_id,horizon,seed,omega,alpha,beta,alpha_plus_beta,coupling,gamma_lev\n";
  std::vector<std::string> missing;
  auto row = [&](const std::string& model, int h, std::uint64_t s, double omega, double alpha,
                 double beta, std::optional<double> coupling, std::optional<double> gamma) {
    os << model << ',' << h << ',' << s << ',' << format_double(omega) << ','
       << format_double(alpha) << ',' << format_double(beta) << ',' << format_double(alpha + beta)
       << ',' << format_optional(coupling) << ',' << format_optional(gamma) << '\n';
  };
  std::optional<GarchFit> pipeline_fit;
  for (const auto& model : cfg.models) {
    if (model == "gru" || model == "lstm") continue;
    for (int h : cfg.horizons) {
      for (auto s : seeds_for(cfg, model)) {
        if (is_classical_model(model)) {
          const auto path = fit_path(cfg, model);
          if (!fs::exists(path)) {
            missing.push_back(path.string());
            continue;
          }
          const auto fit = read_fit(cfg, model);
          row(model, h, s, fit.params.omega, fit.params.alpha, fit.params.beta, std::nullopt,
              model == "gjr" ? std::optional<double>(fit.params.gamma_lev) : std::nullopt);
          continue;
        }
        const auto path = checkpoint_path(cfg, job_tag(model, h, s));
        if (!fs::exists(path)) {
          missing.push_back(path.string());
          continue;
        }
        if (model == "bm_pipeline") {
          if (!pipeline_fit)
            pipeline_fit = fit_garch_mle(load_experiment(cfg).development_returns(),
                                         {GarchModel::plain, cfg.garch_distribution});
          row(model, h, s, pipeline_fit->params.omega, pipeline_fit->params.alpha,
              pipeline_fit->params.beta, std::nullopt, std::nullopt);
          continue;
        }
        Network net;
        try {
          net = network_from_json(read_json_file(path).at("network"));
        } catch (const json::exception& e) {
          throw DataError(path.string() + ": " + e.what());
        }
        const auto g = net.params.gate.constrained();
        row(model, h, s, g.omega, g.alpha, g.beta, net.params.gate.coupling, std::nullopt);
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing checkpoints:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw DataError(msg);
  }
  write_text_file(cfg.out_dir / "params.csv", os.str());
}

}  // namespace garchrnn
