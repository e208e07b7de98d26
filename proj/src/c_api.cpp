// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/garchrnn.h"

#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include <json.hpp>

#include "garchrnn/cells.hpp"
#include "garchrnn/error.hpp"
#include "garchrnn/pipeline.hpp"
#include "garchrnn/risk.hpp"

struct gr_session {
  garchrnn::RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

template <class F>
gr_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return GR_OK;
  } catch (const garchrnn::Error& e) {
    g_last_error = e.what();
    return static_cast<gr_status>(static_cast<int>(e.kind()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return GR_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (!p) throw garchrnn::ConfigError(std::string(what) + " must not be NULL");
}

garchrnn::JobFilter make_filter(const char* model, int horizon, int64_t seed) {
  garchrnn::JobFilter f;
  if (model) f.model = model;
  if (horizon != 0) f.horizon = horizon;
  if (seed >= 0) f.seed = static_cast<std::uint64_t>(seed);
  return f;
}

}  // namespace

extern "C" {

gr_status gr_session_open(const char* config_path, gr_session** out) {
  return guarded([&] {
    require(config_path, "config_path");
    require(out, "out");
    *out = nullptr;
    auto s = std::make_unique<gr_session>();
    s->cfg = garchrnn::load_run_config(config_path);
    *out = s.release();
  });
}

gr_status gr_session_open_json(const char* json_text, const char* base_dir, gr_session** out) {
  return guarded([&] {
    require(json_text, "json_text");
    require(out, "out");
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      throw garchrnn::ConfigError(std::string("config: ") + e.what());
    }
    auto s = std::make_unique<gr_session>();
    s->cfg = garchrnn::parse_run_config(
        j, base_dir ? std::filesystem::path(base_dir) : std::filesystem::current_path());
    *out = s.release();
  });
}

void gr_session_close(gr_session* session) { delete session; }

gr_status gr_set_out_dir(gr_session* session, const char* out_dir) {
  return guarded([&] {
    require(session, "session");
    require(out_dir, "out_dir");
    garchrnn::apply_overrides(session->cfg, {std::filesystem::path(out_dir), {}, {}});
  });
}

gr_status gr_set_seed(gr_session* session, uint64_t seed) {
  return guarded([&] {
    require(session, "session");
    garchrnn::apply_overrides(session->cfg, {{}, seed, {}});
  });
}

gr_status gr_set_parallel(gr_session* session, int workers) {
  return guarded([&] {
    require(session, "session");
    garchrnn::apply_overrides(session->cfg, {{}, {}, workers});
  });
}

gr_status gr_prepare(gr_session* session) {
  return guarded([&] {
    require(session, "session");
    garchrnn::cmd_prepare(session->cfg);
  });
}

gr_status gr_fit_garch(gr_session* session) {
  return guarded([&] {
    require(session, "session");
    garchrnn::cmd_fit_garch(session->cfg);
  });
}

gr_status gr_train(gr_session* session, const char* model, int horizon, int64_t seed) {
  return guarded([&] {
    require(session, "session");
    garchrnn::cmd_train(session->cfg, make_filter(model, horizon, seed));
  });
}

gr_status gr_forecast(gr_session* session, const char* model, int horizon, int64_t seed) {
  return guarded([&] {
    require(session, "session");
    garchrnn::cmd_forecast(session->cfg, make_filter(model, horizon, seed));
  });
}

gr_status gr_evaluate(gr_session* session) {
  return guarded([&] {
    require(session, "session");
    garchrnn::cmd_evaluate(session->cfg);
  });
}

gr_status gr_backtest(gr_session* session, int horizon) {
  return guarded([&] {
    require(session, "session");
    garchrnn::cmd_backtest(session->cfg, horizon);
  });
}

gr_status gr_params(gr_session* session) {
  return guarded([&] {
    require(session, "session");
    garchrnn::cmd_params(session->cfg);
  });
}

gr_status gr_constrain_garch(double u_omega, double u_s, double u_a, double lambda_max,
                             double out[3]) {
  return guarded([&] {
    require(out, "out");
    if (!(lambda_max > 0 && lambda_max <= 1))
      throw garchrnn::ConfigError("lambda_max must lie in (0, 1]");
    const auto t = garchrnn::constrain_garch(u_omega, u_s, u_a, lambda_max);
    out[0] = t.omega;
    out[1] = t.alpha;
    out[2] = t.beta;
  });
}

gr_status gr_t_quantile(double alpha, double nu, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = garchrnn::t_quantile(alpha, nu);
  });
}

const char* gr_last_error(void) { return g_last_error.c_str(); }

const char* gr_status_string(gr_status status) {
  switch (status) {
    case GR_OK: return "ok";
    case GR_ERR_INTERNAL: return "internal error";
    case GR_ERR_CONFIG: return "configuration error";
    case GR_ERR_DATA: return "data error";
    case GR_ERR_DIVERGENCE: return "numerical divergence";
  }
  return "unknown status";
}

const char* gr_version(void) { return GARCHRNN_VERSION; }

}  // extern "C"
