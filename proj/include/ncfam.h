/*
 * ncfam - estimators for unnormalized statistical models.
 *
 * C API of the shared library. The core fits an unnormalized density (the
 * normalizing constant is learned as an extra parameter) by contrasting data
 * against samples from a known auxiliary density through one of five
 * objective nonlinearities, and predicts estimator accuracy from the
 * asymptotic covariance.
 *
 * Conventions:
 *   - All functions return ncfam_status (NCFAM_OK == 0) unless stated
 *     otherwise; on error, ncfam_last_error() describes the failure for the
 *     calling thread.
 *   - Matrices cross the boundary as row-major double buffers; sample
 *     matrices have one row per sample.
 *   - Objects are opaque handles created by the *_create and *_fit
 *     functions and released with the matching *_free (safe on NULL).
 *   - Strings returned through char** are owned by the caller; release them
 *     with ncfam_string_free.
 */
#ifndef NCFAM_H
#define NCFAM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NCFAM_API __declspec(dllexport)
#else
#define NCFAM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  NCFAM_OK = 0,
  NCFAM_ERR_INVALID_ARGUMENT = 1,
  NCFAM_ERR_DOMAIN = 2,
  NCFAM_ERR_SINGULAR = 3,
  NCFAM_ERR_IO = 4,
  NCFAM_ERR_RUNTIME = 5
} ncfam_status;

/* Message for the most recent failure on this thread; never NULL. */
NCFAM_API const char* ncfam_last_error(void);
NCFAM_API const char* ncfam_version(void);
NCFAM_API void ncfam_string_free(char* s);

/* ------------------------------------------------------------------ *
 * Nonlinearity family
 * ------------------------------------------------------------------ */

typedef enum {
  NCFAM_KIND_IS = 0,
  NCFAM_KIND_PO = 1,
  NCFAM_KIND_NC = 2,
  NCFAM_KIND_INVPO = 3,
  NCFAM_KIND_INVIS = 4
} ncfam_kind;

/* Tokens: "is", "po", "nc", "invpo", "invis". */
NCFAM_API ncfam_status ncfam_kind_parse(const char* name, ncfam_kind* out);
NCFAM_API const char* ncfam_kind_name(ncfam_kind kind);

/* (g1, g2) at q = exp(logratio), evaluated in the log domain. */
NCFAM_API ncfam_status ncfam_g_values(ncfam_kind kind, double logratio, double* g1,
                                      double* g2);
/* Gradient weights (g1'(q)q, g2'(q)q) at q = exp(logratio). */
NCFAM_API ncfam_status ncfam_weights(ncfam_kind kind, double logratio,
                                     double* data_weight, double* noise_weight);

/* ------------------------------------------------------------------ *
 * Ground truth for simulated ICA data
 * ------------------------------------------------------------------ */

typedef struct ncfam_truth ncfam_truth;

/* Random mixing matrix (condition number <= 20), unit-variance generalized-
 * Gaussian sources with shape alpha. */
NCFAM_API ncfam_status ncfam_truth_create(int dim, double alpha, uint64_t seed,
                                          ncfam_truth** out);
NCFAM_API ncfam_status ncfam_truth_from_json(const char* json, ncfam_truth** out);
NCFAM_API ncfam_status ncfam_truth_to_json(const ncfam_truth* truth, char** out_json);
NCFAM_API int ncfam_truth_dim(const ncfam_truth* truth);
/* theta* = [row-major B* = A^-1, c*]; buffer length dim*dim + 1. */
NCFAM_API ncfam_status ncfam_truth_theta_star(const ncfam_truth* truth, double* theta,
                                              size_t len);
/* n samples of x = A s; out has n*dim doubles, row-major. */
NCFAM_API ncfam_status ncfam_truth_generate(const ncfam_truth* truth, int n,
                                            uint64_t seed, double* out);
NCFAM_API void ncfam_truth_free(ncfam_truth* truth);

/* ------------------------------------------------------------------ *
 * Auxiliary (noise) distributions
 * ------------------------------------------------------------------ */

typedef struct ncfam_aux ncfam_aux;

/* Moment-matched Gaussian (denominator-n covariance). */
NCFAM_API ncfam_status ncfam_aux_fit_gaussian(const double* data, int n, int dim,
                                              ncfam_aux** out);
NCFAM_API ncfam_status ncfam_aux_gaussian_create(const double* mean, const double* cov,
                                                 int dim, ncfam_aux** out);
/* Product generalized-Gaussian pushed through B^-1 (the exact ICA density). */
NCFAM_API ncfam_status ncfam_aux_gengauss_create(double alpha, const double* B, int dim,
                                                 ncfam_aux** out);
NCFAM_API ncfam_status ncfam_aux_from_json(const char* json, ncfam_aux** out);
NCFAM_API ncfam_status ncfam_aux_to_json(const ncfam_aux* aux, char** out_json);
NCFAM_API int ncfam_aux_dim(const ncfam_aux* aux);
NCFAM_API ncfam_status ncfam_aux_log_density(const ncfam_aux* aux, const double* x,
                                             int dim, double* out);
NCFAM_API ncfam_status ncfam_aux_sample(const ncfam_aux* aux, int n, uint64_t seed,
                                        double* out);
NCFAM_API void ncfam_aux_free(ncfam_aux* aux);

/* ------------------------------------------------------------------ *
 * Estimation problems and the objective
 * ------------------------------------------------------------------ */

typedef struct ncfam_problem ncfam_problem;

/* ICA model of the given shape over fixed data/noise samples; auxiliary
 * log-densities are precomputed at construction. theta has dim*dim + 1
 * entries: row-major B then c. */
NCFAM_API ncfam_status ncfam_problem_create_ica(int dim, double alpha, ncfam_kind kind,
                                                const double* data, int n_data,
                                                const double* noise, int n_noise,
                                                const ncfam_aux* aux,
                                                ncfam_problem** out);
NCFAM_API int ncfam_problem_theta_dim(const ncfam_problem* p);
/* diverged flags overflowing evaluations (out parameter may be NULL). */
NCFAM_API ncfam_status ncfam_objective_value(const ncfam_problem* p, const double* theta,
                                             size_t len, double* value, int* diverged);
NCFAM_API ncfam_status ncfam_objective_gradient(const ncfam_problem* p,
                                                const double* theta, size_t len,
                                                double* grad, int* diverged);
NCFAM_API void ncfam_problem_free(ncfam_problem* p);

/* ------------------------------------------------------------------ *
 * Optimization
 * ------------------------------------------------------------------ */

typedef struct {
  int max_iters;
  double grad_tol; /* on the gradient infinity norm */
  double step_tol;
  double wolfe_c1;
  double wolfe_c2;
  int restart_period; /* 0: every dim(theta) iterations */
} ncfam_opt_config;

NCFAM_API void ncfam_opt_config_default(ncfam_opt_config* cfg);

typedef enum {
  NCFAM_OPT_CONVERGED = 0,
  NCFAM_OPT_MAX_ITERS = 1,
  NCFAM_OPT_LINE_SEARCH_FAILED = 2,
  NCFAM_OPT_DIVERGED = 3
} ncfam_opt_status;

typedef struct {
  ncfam_opt_status status;
  int iterations;
  double objective;
  double grad_norm;
} ncfam_opt_result;

/* Conjugate ascent on the objective from theta0; writes the best iterate to
 * theta_out (length = theta dim). config may be NULL for defaults. */
NCFAM_API ncfam_status ncfam_maximize(const ncfam_problem* p, const double* theta0,
                                      size_t len, const ncfam_opt_config* config,
                                      double* theta_out, ncfam_opt_result* result);

/* ------------------------------------------------------------------ *
 * JSON-configured operations (the CLI surface)
 * ------------------------------------------------------------------ */

/* Estimate from a raw data matrix. Config keys: kind, alpha, gamma, seed,
 * init ("whiten"|"truth"), truth (ground-truth JSON), init_sigma, optimizer
 * {...}, trace_out. Returns the fit as JSON. */
NCFAM_API ncfam_status ncfam_estimate_json(const char* config_json, const double* data,
                                           int n, int dim, char** out_json);

/* Asymptotic covariance report for the ICA setup. Config keys: kind, alpha,
 * dim, gamma, mc, seed, nd_list, noise ("gaussian"|"gengauss-truth"),
 * truth_seed. */
NCFAM_API ncfam_status ncfam_predict_json(const char* config_json, char** out_json);

/* Closed-form MSE-optimal sample-size ratio N_d/N_n for the same setup.
 * valid=0 marks the divergent/undefined case. */
NCFAM_API ncfam_status ncfam_gamma_opt(const char* config_json, double* gamma_hat,
                                       int* valid);

/* MSE-versus-N sweep. Config keys: alpha, dim, kinds, nd, trials, seed, mc,
 * noise_policy, init_sigma, optimizer. Writes the results CSV (and metadata
 * JSON when meta_path is non-NULL). */
NCFAM_API ncfam_status ncfam_sweep_n_csv(const char* config_json, const char* csv_path,
                                         const char* meta_path);

/* MSE-versus-gamma sweep at fixed N_tot. Config keys: alpha, dim, kinds,
 * ntot, gammas, trials, seed, mc, noise_policy, init_sigma, optimizer. */
NCFAM_API ncfam_status ncfam_sweep_gamma_csv(const char* config_json,
                                             const char* csv_path,
                                             const char* meta_path);

/* Fast invariant suite; prints one line per check to stdout.
 * Returns 0 when everything passed, 1 otherwise. */
NCFAM_API int ncfam_verify(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NCFAM_H */
