/* SPDX-License-Identifier: Apache-2.0 */
#ifndef GARCHRNN_GARCHRNN_H
#define GARCHRNN_GARCHRNN_H

/*
 * C interface to the volatility toolkit. A session owns a parsed run
 * configuration; every command reads the price CSV named there and writes
 * into the session's output directory. Functions return a gr_status whose
 * numeric values double as process exit codes. After a failure,
 * gr_last_error() describes it (per thread, valid until the next call).
 */

#include <stdint.h>

#if defined(_WIN32)
#if defined(GARCHRNN_BUILDING_LIBRARY)
#define GR_API __declspec(dllexport)
#else
#define GR_API __declspec(dllimport)
#endif
#else
#define GR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gr_status {
  GR_OK = 0,
  GR_ERR_INTERNAL = 1,
  GR_ERR_CONFIG = 2,
  GR_ERR_DATA = 3,
  GR_ERR_DIVERGENCE = 4
} gr_status;

typedef struct gr_session gr_session;

/* Loads a JSON config file. Relative paths inside resolve against its directory. */
GR_API gr_status gr_session_open(const char* config_path, gr_session** out);
/* Same, from JSON text; relative paths resolve against base_dir (NULL = cwd). */
GR_API gr_status gr_session_open_json(const char* json_text, const char* base_dir,
                                      gr_session** out);
GR_API void gr_session_close(gr_session* session);

GR_API gr_status gr_set_out_dir(gr_session* session, const char* out_dir);
/* Replaces the configured seed list by a single seed. */
GR_API gr_status gr_set_seed(gr_session* session, uint64_t seed);
GR_API gr_status gr_set_parallel(gr_session* session, int workers);

GR_API gr_status gr_prepare(gr_session* session);
GR_API gr_status gr_fit_garch(gr_session* session);
/* model NULL, horizon 0 and seed < 0 select every configured value. */
GR_API gr_status gr_train(gr_session* session, const char* model, int horizon, int64_t seed);
GR_API gr_status gr_forecast(gr_session* session, const char* model, int horizon, int64_t seed);
GR_API gr_status gr_evaluate(gr_session* session);
GR_API gr_status gr_backtest(gr_session* session, int horizon);
GR_API gr_status gr_params(gr_session* session);

/* Maps raw gate parameters to omega, alpha, beta. */
GR_API gr_status gr_constrain_garch(double u_omega, double u_s, double u_a, double lambda_max,
                                    double out[3]);
/* alpha-quantile of the unit-variance Student-t. */
GR_API gr_status gr_t_quantile(double alpha, double nu, double* out);

GR_API const char* gr_last_error(void);
GR_API const char* gr_status_string(gr_status status);
GR_API const char* gr_version(void);

#ifdef __cplusplus
}
#endif

#endif /* GARCHRNN_GARCHRNN_H */
