/* feedback_lab.h -- C interface to the feedbacklab shared library.
 *
 * The library analyzes cyclic nearest-neighbor negative feedback ODE
 * systems: integer-valued Lyapunov data, invariant-block (Floquet)
 * decompositions, critical-element classification, limit sets and
 * dichotomy-based transversality tests. All analysis entry points are
 * driven by a JSON configuration document; results come back as JSON
 * strings owned by the library (release with fbl_string_free).
 *
 * Thread safety: models are immutable after creation and may be shared
 * across threads; error messages are thread-local.
 */
#ifndef FEEDBACK_LAB_H
#define FEEDBACK_LAB_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct fbl_model fbl_model;

typedef enum fbl_status {
    FBL_OK = 0,
    FBL_ERR_INVALID_ARGUMENT = 1,
    FBL_ERR_DOMAIN = 2,           /* point outside the model domain */
    FBL_ERR_DIMENSION = 3,
    FBL_ERR_NONFINITE = 4,
    FBL_ERR_CONFIG = 5,           /* malformed config / model JSON */
    FBL_ERR_ANALYSIS = 6,         /* the analysis itself failed */
    FBL_ERR_VERIFY_FAILED = 7,    /* verify suite ran and found failures */
    FBL_ERR_IO = 8,
    FBL_ERR_INTERNAL = 9
} fbl_status;

/* Library version string, e.g. "0.1.0". Static storage; do not free. */
const char* fbl_version(void);

/* Message for the most recent error on this thread. Static storage. */
const char* fbl_last_error(void);

/* Releases strings returned through char** out parameters. */
void fbl_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Models                                                              */

/* model_json: {"name": "...", "params": {...}} or
 * {"custom": ["...", ...], "domain": {...}}. */
fbl_status fbl_model_create(const char* model_json, fbl_model** out);
void fbl_model_destroy(fbl_model* model);
int fbl_model_dim(const fbl_model* model);

/* fx must hold dim doubles. */
fbl_status fbl_model_eval(const fbl_model* model, const double* x, double* fx);
/* jac must hold dim*dim doubles, written row-major. */
fbl_status fbl_model_jacobian(const fbl_model* model, const double* x, double* jac);
/* Sampled matrix-class membership report as JSON. */
fbl_status fbl_model_check_class(const fbl_model* model, int samples, unsigned long seed,
                                 char** report_json);

/* ------------------------------------------------------------------ */
/* Integer-valued Lyapunov data                                        */

/* convention: "edge_forward_negative" (default), "paper_verbatim", or an
 * explicit pairing/sign combination. `defined` is 0 when some cyclic
 * product vanishes; `value` is meaningful only when defined. */
fbl_status fbl_n_value(const fbl_model* model, const double* x, const char* convention,
                       int* value, int* defined);
fbl_status fbl_n_bounds(const fbl_model* model, const double* x, const char* convention,
                        int* n_min, int* n_max, int* regular);

/* ------------------------------------------------------------------ */
/* Invariant-block decomposition                                       */

/* matrix: n*n row-major entries of an invertible solution operator.
 * Returns the ordered block decomposition as JSON (bases row-major,
 * moduli, gaps, gap_ok). */
fbl_status fbl_floquet_blocks(const double* matrix, int n, double gap_tol,
                              char** decomposition_json);

/* ------------------------------------------------------------------ */
/* Command runner                                                      */

/* Runs one analysis command ("check-class", "simulate", "limits",
 * "equilibria", "cycles", "floquet", "connect", "transversality",
 * "perturb", "census", "verify") against a config document, writing
 * <out_dir>/<command>.report.json plus CSV artifacts.
 *
 * overrides_json may be NULL or a flat object whose (possibly dotted)
 * keys replace config entries. exit_code receives the CLI convention:
 * 0 ok, 1 analysis failure, 2 invalid config, 3 verify-suite failure.
 * report_json (optional) receives the full report. */
fbl_status fbl_run_command(const char* command, const char* config_json,
                           const char* overrides_json, const char* out_dir,
                           char** report_json, int* exit_code);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FEEDBACK_LAB_H */
