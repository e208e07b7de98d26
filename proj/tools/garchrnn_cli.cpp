// SPDX-License-Identifier: Apache-2.0
// Command-line front end over the C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "garchrnn/garchrnn.h"

namespace {

int report(gr_status st) {
  if (st != GR_OK) std::fprintf(stderr, "error (%s): %s\n", gr_status_string(st), gr_last_error());
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volatility forecasting with GARCH-gated recurrent networks"};
  app.set_version_flag("--version", std::string(gr_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int parallel = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "run a single seed instead of the configured list")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", out_dir, "output directory (overrides the config)");
  app.add_option("--parallel", parallel, "worker threads for independent training jobs")
      ->check(CLI::PositiveNumber);

  auto* prepare = app.add_subcommand("prepare", "returns, realized volatility, datasets, diagnostics");
  auto* fit = app.add_subcommand("fit-garch", "maximum-likelihood GARCH(1,1) and GJR fits");

  std::string model;
  int horizon = 0;
  auto* train = app.add_subcommand("train", "train networks for every (model, horizon, seed)");
  train->add_option("--model", model, "restrict to one model");
  train->add_option("--horizon", horizon, "restrict to one horizon")->check(CLI::PositiveNumber);

  auto* forecast = app.add_subcommand("forecast", "rolling forecasts on every segment");
  forecast->add_option("--model", model, "restrict to one model");
  forecast->add_option("--horizon", horizon, "restrict to one horizon")->check(CLI::PositiveNumber);

  auto* evaluate = app.add_subcommand("evaluate", "metric tables for the test and stress segments");

  int bt_horizon = 1;
  auto* backtest = app.add_subcommand("backtest", "Student-t VaR backtest of one-day forecasts");
  backtest->add_option("--horizon", bt_horizon, "forecast horizon (must be 1)");

  auto* params = app.add_subcommand("params", "table of fitted GARCH parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return GR_ERR_CONFIG;
  }

  gr_session* session = nullptr;
  if (gr_status st = gr_session_open(config_path.c_str(), &session); st != GR_OK) return report(st);

  gr_status st = GR_OK;
  if (!out_dir.empty()) st = gr_set_out_dir(session, out_dir.c_str());
  if (st == GR_OK && seed >= 0) st = gr_set_seed(session, static_cast<std::uint64_t>(seed));
  if (st == GR_OK && parallel > 0) st = gr_set_parallel(session, parallel);

  const char* model_arg = model.empty() ? nullptr : model.c_str();
  if (st == GR_OK) {
    if (prepare->parsed())
      st = gr_prepare(session);
    else if (fit->parsed())
      st = gr_fit_garch(session);
    else if (train->parsed())
      st = gr_train(session, model_arg, horizon, seed);
    else if (forecast->parsed())
      st = gr_forecast(session, model_arg, horizon, seed);
    else if (evaluate->parsed())
      st = gr_evaluate(session);
    else if (backtest->parsed())
      st = gr_backtest(session, bt_horizon);
    else if (params->parsed())
      st = gr_params(session);
  }
  gr_session_close(session);
  return report(st);
}
