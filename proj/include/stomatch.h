#ifndef STOMATCH_H
#define STOMATCH_H

/* C interface to the online stochastic matching library. All functions
 * return STOMATCH_OK (0) on success or a nonzero status; the message for
 * the most recent failure on the calling thread is available through
 * stomatch_last_error(). Strings returned through char** parameters are
 * heap-allocated and must be released with stomatch_string_free(). */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stomatch_status {
    STOMATCH_OK = 0,
    STOMATCH_ERR_PARSE = 1,
    STOMATCH_ERR_VALIDATE = 2,
    STOMATCH_ERR_DOMAIN = 3,
    STOMATCH_ERR_NUMERIC = 4,
    STOMATCH_ERR_IO = 5,
    STOMATCH_ERR_INTERNAL = 6
} stomatch_status;

typedef struct stomatch_instance stomatch_instance;
typedef struct stomatch_solution stomatch_solution;
typedef struct stomatch_plan stomatch_plan;

const char* stomatch_version(void);
const char* stomatch_last_error(void);
void stomatch_string_free(char* s);

/* ---- instances ---- */

stomatch_status stomatch_instance_from_json(const char* text, stomatch_instance** out);
stomatch_status stomatch_instance_to_json(const stomatch_instance* inst, char** out);
stomatch_status stomatch_instance_load(const char* path, stomatch_instance** out);
stomatch_status stomatch_instance_save(const stomatch_instance* inst, const char* path);

/* mode: "unweighted" | "vertex_weighted" | "general" */
stomatch_status stomatch_instance_gen_random(int n_types, int n_offline, double density,
                                             double rate_lo, double rate_hi, double weight_lo,
                                             double weight_hi, const char* mode, uint64_t seed,
                                             stomatch_instance** out);

/* family: "complete_uniform" (a x b) | "star" (a leaves) | "two_cycle" (a types) */
stomatch_status stomatch_instance_gen_structured(const char* family, int a, int b,
                                                 stomatch_instance** out);

stomatch_status stomatch_instance_counts(const stomatch_instance* inst, int* n_types,
                                         int* n_offline);
stomatch_status stomatch_instance_total_rate(const stomatch_instance* inst, double* out);
void stomatch_instance_free(stomatch_instance* inst);

/* ---- fractional relaxations ---- */

stomatch_status stomatch_solve_natural(const stomatch_instance* inst, double tol,
                                       stomatch_solution** out);
stomatch_status stomatch_solve_jaillet_lu(const stomatch_instance* inst, stomatch_solution** out);
stomatch_status stomatch_solution_objective(const stomatch_solution* sol, double* out);
stomatch_status stomatch_solution_to_json(const stomatch_instance* inst,
                                          const stomatch_solution* sol, char** out);
stomatch_status stomatch_check_feasible_natural(const stomatch_instance* inst,
                                                const stomatch_solution* sol,
                                                double* max_violation, char** worst_constraint);
void stomatch_solution_free(stomatch_solution* sol);

/* ---- sampling plans ---- */

/* kind: "wasteful" | "beta" | "limit" | "amortized" */
stomatch_status stomatch_plan_build(const stomatch_instance* inst, const stomatch_solution* sol,
                                    const char* kind, double beta, double beta_drop,
                                    stomatch_plan** out);
stomatch_status stomatch_plan_to_json(const stomatch_instance* inst, const stomatch_plan* plan,
                                      char** out);
stomatch_status stomatch_plan_verify(const stomatch_instance* inst, const stomatch_solution* sol,
                                     const stomatch_plan* plan, int* ok, char** report_json);
void stomatch_plan_free(stomatch_plan* plan);

/* ---- Monte Carlo studies ---- */

/* model: "poisson" | "fixed". gain_csv may be NULL if the curve is not needed. */
stomatch_status stomatch_monte_carlo(const stomatch_instance* inst, const stomatch_plan* plan,
                                     const char* model, long long trials, uint64_t seed,
                                     int want_opt, char** report_json, char** gain_csv);
stomatch_status stomatch_match_prob(const stomatch_instance* inst, const stomatch_solution* sol,
                                    const stomatch_plan* plan, const char* model, long long trials,
                                    uint64_t seed, int* ok, char** report_json, char** csv);
stomatch_status stomatch_monotonicity(const stomatch_instance* inst, const stomatch_plan* plan,
                                      long long trials, uint64_t seed, int* ok,
                                      char** report_json);
stomatch_status stomatch_model_comparison(const stomatch_instance* inst,
                                          const stomatch_plan* plan, long long trials,
                                          uint64_t seed, int* ok, char** report_json);
stomatch_status stomatch_empirical_lp(const stomatch_instance* inst, const char* model,
                                      long long trials, uint64_t seed, int* ok,
                                      char** report_json);

/* ---- scalar analysis functions ---- */

stomatch_status stomatch_phi(double x, double y, double* out);
stomatch_status stomatch_unmatched_after_first(double x, double y, double* out);
stomatch_status stomatch_kappa(double beta, double x, double* out);
stomatch_status stomatch_delta(double x, double beta_drop, double* out);
stomatch_status stomatch_poisson_tail(double lam, double* out);

/* ---- verification ---- */

stomatch_status stomatch_verify_functions(double grid_step, int* ok, char** report_json);

/* theorem: "t15" | "t19" | "t22". beta_drop only affects t22. */
stomatch_status stomatch_certificate(const char* theorem, double grid_step, double quad_tol,
                                     double beta_drop, int* passed, char** summary_json,
                                     char** csv);
stomatch_status stomatch_jensen_battery(long long cases, uint64_t seed, int* ok,
                                        char** report_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* STOMATCH_H */
