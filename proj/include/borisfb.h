/* C API of the filtered-Boris integrator library.
 *
 * All functions return bfb_status; outputs go through pointers. Handles are
 * opaque and freed with the matching _destroy call. On any error the
 * thread-local message from bfb_last_error() describes the failure.
 */
#ifndef BORISFB_H
#define BORISFB_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bfb_status {
    BFB_OK = 0,
    BFB_ERR_INVALID_ARGUMENT = 1,
    BFB_ERR_ZERO_FIELD = 2,
    BFB_ERR_FILTER_POLE = 3,
    BFB_ERR_SINGULAR_MATRIX = 4,
    BFB_ERR_NO_CONVERGENCE = 5,
    BFB_ERR_DEGENERATE_FIELD = 6,
    BFB_ERR_RESONANCE_REJECTED = 7,
    BFB_ERR_ORACLE_NOT_CONVERGED = 8,
    BFB_ERR_GRID_MISMATCH = 9,
    BFB_ERR_INSUFFICIENT_DATA = 10,
    BFB_ERR_IO = 11,
    BFB_ERR_CHECK_FAILED = 12,
    BFB_ERR_UNKNOWN = 13
} bfb_status;

const char* bfb_status_name(bfb_status status);
const char* bfb_version(void);

/* Thread-local message describing the most recent error on this thread. */
const char* bfb_last_error(void);

/* ---- field models ------------------------------------------------------ */

typedef struct bfb_model bfb_model;

/* Presets: "paper-sec8", "constant-B", "constant-BE". */
bfb_status bfb_model_create(const char* preset, double epsilon, bfb_model** out);
void bfb_model_destroy(bfb_model* model);
bfb_status bfb_model_eval_B(const bfb_model* model, const double x[3], double t, double out[3]);
bfb_status bfb_model_eval_E(const bfb_model* model, const double x[3], double t, double out[3]);

/* ---- method configuration ---------------------------------------------- */

typedef struct bfb_config bfb_config;

/* Methods: "boris", "exp-a", "imp-a", "twop-a". */
bfb_status bfb_config_create(const char* method, bfb_config** out);
void bfb_config_destroy(bfb_config* config);
bfb_status bfb_config_set_fixed_point(bfb_config* config, int max_iters, double tol);
/* policy: "flag" records near-resonant steps, "reject" fails the step. */
bfb_status bfb_config_set_guard(bfb_config* config, double c_min, int k_max, const char* policy);

/* ---- trajectories ------------------------------------------------------ */

typedef struct bfb_trajectory bfb_trajectory;

bfb_status bfb_simulate(const bfb_model* model, const bfb_config* config,
                        const double x0[3], const double v0[3], double h, double t_end,
                        bfb_trajectory** out);
void bfb_trajectory_destroy(bfb_trajectory* traj);
/* Number of stored states (steps + 1). */
long bfb_trajectory_length(const bfb_trajectory* traj);
bfb_status bfb_trajectory_state(const bfb_trajectory* traj, long i, double* t,
                                double x[3], double v_half[3], double v_node[3]);
/* format: "csv" or "json". */
bfb_status bfb_trajectory_write(const bfb_trajectory* traj, const char* path, const char* format);

/* ---- convergence studies and resonance scans --------------------------- */

typedef struct bfb_report bfb_report;

/* h = ratio * epsilon per (method, epsilon, ratio) cell; err_mode is
 * "sup-over-grid" or "endpoint". Methods is a comma-separated list. */
bfb_status bfb_run_convergence(const char* preset, const double x0[3], const double v0[3],
                               double t_end, const double* epsilons, int n_epsilons,
                               const double* h_ratios, int n_ratios, const char* methods,
                               const char* err_mode, const bfb_config* base_config,
                               bfb_report** out);
/* h = 1/k for k = k_from..k_to at a single epsilon; endpoint errors. */
bfb_status bfb_run_scan(const char* preset, const double x0[3], const double v0[3],
                        double t_end, double epsilon, long k_from, long k_to,
                        const char* methods, const bfb_config* base_config, bfb_report** out);
/* The full experiments at paper scale. */
bfb_status bfb_run_convergence_paper(bfb_report** out);
bfb_status bfb_run_scan_paper(bfb_report** out);

void bfb_report_destroy(bfb_report* report);
long bfb_report_num_cells(const bfb_report* report);
bfb_status bfb_report_cell(const bfb_report* report, long i, char method[16], double* epsilon,
                           double* h, long* n_steps, double* err_x, double* err_vpar,
                           double* err_vperp, int* resonance_flag, int* failed);
/* Fitted log-log slope; metric is "err_x", "err_vpar" or "err_vperp". */
bfb_status bfb_report_slope(const bfb_report* report, const char* method, double h_ratio,
                            const char* metric, double* out_slope);
/* format: "csv", "json" or "gnuplot" (csv_ref names the CSV the script plots). */
bfb_status bfb_report_write(const bfb_report* report, const char* path, const char* format,
                            const char* csv_ref);

/* ---- validation -------------------------------------------------------- */

/* Runs the validation suite, printing one pass/fail line per check to
 * stdout. include_slow adds the convergence/scan studies (minutes).
 * Returns BFB_OK with *failures = 0 when everything passed. */
bfb_status bfb_validate(int include_slow, int* failures);

#ifdef __cplusplus
}
#endif

#endif /* BORISFB_H */
