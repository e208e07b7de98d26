// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "garchrnn/garchrnn.h"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

/// Runs the CLI binary with `args`, returning its exit status.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(GARCHRNN_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& j) {
  std::ofstream(dir / "config.json") << j.dump(2);
  return dir / "config.json";
}

}  // namespace

TEST_SUITE("c_api") {
  TEST_CASE("scalar entry points") {
    double out[3] = {0, 0, 0};
    REQUIRE(gr_constrain_garch(0, 0, 0, 0.97, out) == GR_OK);
    CHECK(out[0] == doctest::Approx(0.6931).epsilon(1e-4));
    CHECK(out[1] == doctest::Approx(0.2425).epsilon(1e-14));
    CHECK(out[2] == doctest::Approx(0.2425).epsilon(1e-14));
    double q = 0;
    REQUIRE(gr_t_quantile(0.5, 5, &q) == GR_OK);
    CHECK(q == 0.0);
    CHECK(gr_t_quantile(1.5, 5, &q) == GR_ERR_DATA);
    CHECK(std::string(gr_last_error()).find("alpha") != std::string::npos);
    CHECK(gr_constrain_garch(0, 0, 0, 0.97, nullptr) != GR_OK);
    CHECK(std::string(gr_status_string(GR_ERR_DIVERGENCE)).size() > 0);
    CHECK(std::string(gr_version()).size() > 0);
  }

  TEST_CASE("session status mapping") {
    gr_session* s = nullptr;
    CHECK(gr_session_open("/nonexistent/config.json", &s) == GR_ERR_CONFIG);
    CHECK(s == nullptr);
    CHECK(gr_session_open_json("{not json", ".", &s) == GR_ERR_CONFIG);

    const auto dir = testing::fresh_dir("capi");
    auto j = testing::small_run_config(dir, {"garch"});
    j["data"]["price_column"] = "adj_close";
    REQUIRE(gr_session_open_json(j.dump().c_str(), dir.c_str(), &s) == GR_OK);
    CHECK(gr_prepare(s) == GR_ERR_DATA);
    CHECK(std::string(gr_last_error()).find("adj_close") != std::string::npos);
    CHECK(gr_backtest(s, 3) == GR_ERR_CONFIG);
    CHECK(gr_set_parallel(s, 0) == GR_ERR_CONFIG);
    gr_session_close(s);

    j["data"]["price_column"] = "close";
    REQUIRE(gr_session_open_json(j.dump().c_str(), dir.c_str(), &s) == GR_OK);
    CHECK(gr_set_out_dir(s, (dir / "via_api").c_str()) == GR_OK);
    CHECK(gr_prepare(s) == GR_OK);
    CHECK(fs::exists(dir / "via_api/diagnostics.json"));
    CHECK(gr_forecast(s, "garch", 1, -1) == GR_ERR_DATA);
    CHECK(gr_train(s, "lstm", 1, -1) == GR_ERR_CONFIG);
    gr_session_close(s);
    gr_session_close(nullptr);
  }

  TEST_CASE("command-line exit codes") {
    const auto dir = testing::fresh_dir("cli_codes");
    const auto log = dir / "log.txt";
    auto j = testing::small_run_config(dir, {"garch"});
    const auto cfg = write_config(dir, j);
    const std::string base = "--config " + cfg.string() + " ";

    CHECK(run_cli(base + "prepare", log) == 0);
    CHECK(run_cli(base + "backtest --horizon 3", log) == 2);
    CHECK(run_cli(base, log) == 2);
    CHECK(run_cli("prepare", log) == 2);
    CHECK(run_cli(base + "--parallel 0 prepare", log) == 2);

    j["models"] = {"transformer"};
    write_config(dir, j);
    CHECK(run_cli(base + "prepare", log) == 2);
    const auto text = testing::read_text(log);
    CHECK(text.find("garch_gru") != std::string::npos);

    j["models"] = {"garch"};
    j["data"]["price_column"] = "Adj Close";
    write_config(dir, j);
    CHECK(run_cli(base + "prepare", log) == 3);
    CHECK(testing::read_text(log).find("Adj Close") != std::string::npos);

    std::ofstream(dir / "empty.csv") << "";
    j["data"]["price_column"] = "close";
    j["data"]["prices"] = "empty.csv";
    write_config(dir, j);
    CHECK(run_cli(base + "prepare", log) == 3);
    CHECK(testing::read_text(log).find("length >= 2") != std::string::npos);
  }
}
