/* Spatially coupled LDGM lossy compression: C API.
 *
 * All functions return a status code (SCLDGM_OK on success) unless noted;
 * on failure scldgm_last_error() describes the most recent error of the
 * calling thread. Objects behind opaque handles must be released with their
 * matching *_free call.
 */
#ifndef SCLDGM_H
#define SCLDGM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SCLDGM_API __declspec(dllexport)
#else
#define SCLDGM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
    SCLDGM_OK = 0,
    SCLDGM_ERR_INVALID = 2,  /* bad parameters or configuration */
    SCLDGM_ERR_BRACKET = 3,  /* threshold bracket / convergence failure */
    SCLDGM_ERR_IO = 4,
    SCLDGM_ERR_INTERNAL = 5
};

SCLDGM_API const char* scldgm_version(void);
/* Message of the last failing call on this thread; empty string if none. */
SCLDGM_API const char* scldgm_last_error(void);

/* ------------------------------------------------------------------ graphs */

typedef struct scldgm_graph scldgm_graph;

typedef struct scldgm_ensemble_params {
    int32_t l;       /* check degree */
    double R;        /* design rate in (0,1] */
    int32_t L;       /* coupled positions; 1 = underlying */
    int32_t w;       /* coupling window; 1 = underlying */
    int32_t n;       /* checks per position */
    uint64_t seed;
    uint64_t stream;
} scldgm_ensemble_params;

SCLDGM_API int scldgm_graph_sample(const scldgm_ensemble_params* params, scldgm_graph** out);
SCLDGM_API void scldgm_graph_free(scldgm_graph* g);
SCLDGM_API int scldgm_graph_counts(const scldgm_graph* g, int32_t* checks, int32_t* codebits,
                                   int64_t* edges);
SCLDGM_API int scldgm_graph_save(const scldgm_graph* g, const char* path);
SCLDGM_API int scldgm_graph_load(const char* path, scldgm_graph** out);

/* xhat must hold num_checks bytes, u holds num_codebits bits as bytes. */
SCLDGM_API int scldgm_reconstruct(const scldgm_graph* g, const uint8_t* u, int32_t u_len,
                                  uint8_t* xhat, int32_t x_len);
SCLDGM_API int scldgm_distortion(const uint8_t* a, const uint8_t* b, int32_t len, double* out);
SCLDGM_API int scldgm_sample_source(int32_t n, uint64_t seed, uint64_t stream, uint8_t* out);
SCLDGM_API double scldgm_coupled_rate(double R, int32_t L, int32_t w);

/* Exhaustive minimum-distortion search; refuses more than 24 code-bits. */
SCLDGM_API int scldgm_exhaustive_optimal(const scldgm_graph* g, const uint8_t* x, int32_t x_len,
                                         uint8_t* u_out, int32_t u_len, double* distortion);

/* ----------------------------------------------------------------- encoder */

enum { SCLDGM_RULE_HARD = 0, SCLDGM_RULE_RANDOM = 1 };

typedef struct scldgm_encode_config {
    double beta;
    int32_t rule;     /* SCLDGM_RULE_* */
    double epsilon;   /* convergence tolerance, 0 selects 0.01 */
    int32_t T;        /* max BP iterations per round, 0 selects 10 */
    double delta;     /* batch fraction; <= 0 selects strict one-bit rounds */
    uint64_t seed;
    uint64_t stream;
} scldgm_encode_config;

typedef struct scldgm_encode_stats {
    double distortion;
    double conv_fraction;
    int64_t rounds;
} scldgm_encode_stats;

SCLDGM_API int scldgm_encode(const scldgm_graph* g, const uint8_t* x, int32_t x_len,
                             const scldgm_encode_config* cfg, uint8_t* u_out, int32_t u_len,
                             scldgm_encode_stats* stats);

/* -------------------------------------------------------------- cavity side */

typedef struct scldgm_cavity_params {
    int32_t l;
    double R;
    int32_t L;
    int32_t w;
    double beta;
    int32_t pop_size;
    int32_t t_max;
    uint64_t seed;
    uint64_t stream;
} scldgm_cavity_params;

typedef struct scldgm_complexity {
    double sigma;
    double sigma_err;
    double f;
    double phi_int;
    int32_t trivial;
} scldgm_complexity;

typedef struct scldgm_thresholds {
    double beta_d;
    double beta_d_bracket;
    double beta_c;
    double beta_c_bracket;
} scldgm_thresholds;

/* Simplified-system complexity at one beta (population dynamics run). */
SCLDGM_API int scldgm_complexity_point(const scldgm_cavity_params* params,
                                       scldgm_complexity* out);
SCLDGM_API int scldgm_find_thresholds(const scldgm_cavity_params* params, double grid_start,
                                      double grid_stop, double grid_step, double tol,
                                      scldgm_thresholds* out);

SCLDGM_API int scldgm_shannon_distortion(double R, double* out);
SCLDGM_API int scldgm_beta_sh(double R, double* out);
SCLDGM_API int scldgm_free_energy(double beta, double R, double* out);
SCLDGM_API int scldgm_internal_energy(double beta, double* out);
SCLDGM_API int scldgm_large_degree_complexity(double beta, double R, double* out);
SCLDGM_API int scldgm_large_degree_beta_c(double R, double* out);

/* -------------------------------------------------------------- experiments */

/* kind: encode | beta-sweep | conv-prob | rd-sweep | sampling-check |
 *       thresholds | complexity-scan | thresholds-table | ensemble-stats.
 * config: newline-separated key=value pairs (same syntax as config files).
 * out_csv: CSV destination, or NULL/empty to skip writing.
 * summary/summary_cap: optional buffer receiving the aligned text table.
 * Returns 0, or 2 (invalid config), 3 (bracket failure), 4 (I/O). */
SCLDGM_API int scldgm_run_experiment(const char* kind, const char* config, const char* out_csv,
                                     char* summary, size_t summary_cap);

#ifdef __cplusplus
}
#endif

#endif /* SCLDGM_H */
