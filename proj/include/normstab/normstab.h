#ifndef NORMSTAB_H
#define NORMSTAB_H

/* C interface of the normstab library. All handles are opaque; every
 * function that can fail returns an ns_status and leaves a message readable
 * through ns_last_error() on the calling thread. */

#include <stddef.h>

#if defined(NORMSTAB_BUILDING_LIBRARY)
#define NS_API __attribute__((visibility("default")))
#else
#define NS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  NS_OK = 0,
  NS_ERR_ARGUMENT = 1,  /* bad argument or handle */
  NS_ERR_CONFIG = 2,    /* malformed or inconsistent configuration */
  NS_ERR_NUMERICAL = 3, /* a numerical procedure failed */
  NS_ERR_INTERNAL = 4
} ns_status;

typedef enum { NS_GROUP_CENTER = 0, NS_GROUP_STABLE = 1, NS_GROUP_UNSTABLE = 2, NS_GROUP_AMBIGUOUS = 3 } ns_group;

typedef enum { NS_NORMALLY_STABLE = 0, NS_NORMALLY_HYPERBOLIC = 1, NS_INCONCLUSIVE = 2 } ns_verdict;

typedef struct ns_matrix ns_matrix;
typedef struct ns_spectrum ns_spectrum;
typedef struct ns_split ns_split;
typedef struct ns_problem ns_problem;
typedef struct ns_classification ns_classification;
typedef struct ns_report ns_report;

NS_API const char* ns_version(void);
NS_API const char* ns_last_error(void);
NS_API const char* ns_status_string(int status);
/* Name of the library error kind behind the last failure, e.g. "ConfigError". */
NS_API const char* ns_last_error_kind(void);

/* n x n matrix from row-major entries. */
NS_API int ns_matrix_create(int n, const double* row_major, ns_matrix** out);
NS_API int ns_matrix_size(const ns_matrix* m);
NS_API void ns_matrix_free(ns_matrix* m);

NS_API int ns_eigen_decompose(const ns_matrix* a, double tol_zero, double gap, ns_spectrum** out);
NS_API int ns_spectrum_size(const ns_spectrum* s);
NS_API int ns_spectrum_eigenvalue(const ns_spectrum* s, int i, double* re, double* im, int* group);
NS_API int ns_spectrum_counts(const ns_spectrum* s, int* mc, int* ms, int* mu, int* inconclusive);
NS_API double ns_spectrum_gap_margin(const ns_spectrum* s);
NS_API void ns_spectrum_free(ns_spectrum* s);

NS_API int ns_semisimple_zero(const ns_matrix* a, double tol_zero, int* semisimple, int* kernel_dim);

NS_API int ns_spectral_projections(const ns_matrix* a, const ns_spectrum* s, double eps_proj, ns_split** out);
/* Copies P_group (n x n, row-major) into out. */
NS_API int ns_split_projection(const ns_split* s, int group, double* out);
NS_API int ns_split_dims(const ns_split* s, int* mc, int* ms, int* mu);
/* idempotence, completeness, cross, commutation */
NS_API int ns_split_residuals(const ns_split* s, double out[4]);
NS_API void ns_split_free(ns_split* s);

/* "Ex1", "Ex2m1", "Ex2m2", "Hyperbolic3D" */
NS_API int ns_problem_builtin(const char* name, ns_problem** out);
/* Builtin or polynomial configuration document. */
NS_API int ns_problem_from_config(const char* config_json, ns_problem** out);
NS_API int ns_problem_dimension(const ns_problem* p);
NS_API void ns_problem_free(ns_problem* p);

NS_API int ns_classify(const ns_problem* p, ns_classification** out);
NS_API int ns_classification_verdict(const ns_classification* c);
NS_API int ns_classification_dims(const ns_classification* c, int* mc, int* ms, int* mu);
/* Comma-separated failed condition labels, e.g. "(iii)"; empty if none. */
NS_API const char* ns_classification_failed(const ns_classification* c);
/* Row-major n x n A0. */
NS_API int ns_classification_a0(const ns_classification* c, double* out);
NS_API void ns_classification_free(ns_classification* c);

/* Runs a command ("classify", "simulate", "wave.find", "wave.spectrum",
 * "wave.simulate", "ms.symbol", "ms.modes", "ms.chart", "examples.run").
 * config_json and params_json may be NULL. */
NS_API int ns_run(const char* command, const char* config_json, const char* params_json, ns_report** out);
NS_API const char* ns_report_json(const ns_report* r);
NS_API int ns_report_series_count(const ns_report* r);
NS_API const char* ns_report_series_name(const ns_report* r, int i);
NS_API const char* ns_report_series_csv(const ns_report* r, int i);
NS_API void ns_report_free(ns_report* r);

#ifdef __cplusplus
}
#endif

#endif
