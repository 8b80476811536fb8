/* rgexpect C API: worst-case expectation engine under path-dependent
 * volatility bands, exposed through opaque handles and status codes.
 *
 * Conventions:
 *   - every function returning rgx_status reports RGX_OK (0) on success;
 *     on failure the out-parameters are untouched and rgx_last_error()
 *     returns a thread-local message describing the problem;
 *   - handles are created by rgx_*_create functions and released with the
 *     matching rgx_*_free; freeing NULL is a no-op;
 *   - tree levels hold 2^level values ordered by sign sequence (-1 before +1,
 *     first step most significant).
 */

#ifndef RGEXPECT_H
#define RGEXPECT_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rgx_status {
    RGX_OK = 0,
    RGX_ERR_ARGUMENT = 1,   /* bad numeric argument or precondition */
    RGX_ERR_STRUCTURAL = 2, /* mismatched shapes (paths, policies, grids) */
    RGX_ERR_INFEASIBLE = 3, /* empty delta-interior at a reachable node */
    RGX_ERR_REFUSED = 4,    /* outside the documented size envelope */
    RGX_ERR_NUMERIC = 5,    /* scheme diverged */
    RGX_ERR_NOMEM = 6,
    RGX_ERR_INTERNAL = 7
} rgx_status;

typedef struct rgx_domain rgx_domain;
typedef struct rgx_payoff rgx_payoff;
typedef struct rgx_solution rgx_solution;
typedef struct rgx_pde rgx_pde;
typedef struct rgx_report rgx_report;

const char* rgx_version(void);
/* Thread-local message for the most recent failure in this thread. */
const char* rgx_last_error(void);

/* --- volatility bands ---------------------------------------------------- */

rgx_status rgx_domain_create_constant(double lo, double hi, rgx_domain** out);
/* Piecewise-linear state-dependent bounds a(x), b(x); xs strictly increasing. */
rgx_status rgx_domain_create_state(const double* a_xs, const double* a_ys, int64_t a_n,
                                   const double* b_xs, const double* b_ys, int64_t b_n,
                                   rgx_domain** out);
/* a = a0 + a_coef * min(running max, cap), same shape for b. */
rgx_status rgx_domain_create_path(double a0, double a_coef, double b0, double b_coef, double cap,
                                  rgx_domain** out);
void rgx_domain_free(rgx_domain* d);
double rgx_domain_vol_bound(const rgx_domain* d); /* sup of the upper bound */
/* Sampling diagnostic of the uniform-continuity certificate; 0 = no violation
 * found. */
rgx_status rgx_domain_uc_check(const rgx_domain* d, double horizon, int steps, double delta,
                               int64_t samples, uint64_t seed, double* worst);

/* --- payoffs --------------------------------------------------------------
 * names: terminal_square | terminal_abs | terminal_cos | running_max |
 *        asian_mean | custom_table
 * custom_table takes params as x0,y0,x1,y1,... breakpoint pairs; the other
 * names take no params. horizon/steps/vol_bound size the tree range the
 * payoff bound refers to. */
rgx_status rgx_payoff_create(const char* name, const double* params, int64_t n_params,
                             double horizon, int steps, double vol_bound, rgx_payoff** out);
void rgx_payoff_free(rgx_payoff* p);

/* --- worst-case tree solve ------------------------------------------------ */

rgx_status rgx_tree_solve(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                          int steps, double delta, int vol_points, rgx_solution** out);
/* Root value only; skips recording the optimal tree. */
rgx_status rgx_tree_root_value(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                               int steps, double delta, int vol_points, double* out);

double rgx_solution_root(const rgx_solution* s);
int rgx_solution_steps(const rgx_solution* s);
double rgx_solution_margin(const rgx_solution* s); /* optimal-policy band margin */
double rgx_solution_deg(const rgx_solution* s);
/* Copies the 2^level stored values / realized states / volatilities for one
 * level into buf (levels 0..steps; volatilities exist for level < steps). */
rgx_status rgx_solution_values(const rgx_solution* s, int level, double* buf, int64_t buf_len);
rgx_status rgx_solution_states(const rgx_solution* s, int level, double* buf, int64_t buf_len);
rgx_status rgx_solution_alphas(const rgx_solution* s, int level, double* buf, int64_t buf_len);
/* Exact average of the payoff under the extracted optimal policy. */
rgx_status rgx_solution_policy_value(const rgx_solution* s, const rgx_payoff* payoff, double* out);
/* Largest deviation when the [from,to] window is re-solved against the stored
 * terminal slice. */
rgx_status rgx_solution_dpp_residual(const rgx_solution* s, const rgx_payoff* payoff,
                                     const rgx_domain* domain, int from, int to, double* out);
void rgx_solution_free(rgx_solution* s);

/* Brute-force maximum over all adapted grid policies (at most 4 steps). */
rgx_status rgx_enumerate_policies(const rgx_payoff* payoff, const rgx_domain* domain,
                                  double horizon, int steps, double delta, int vol_points,
                                  double* out);

/* --- Monte Carlo ----------------------------------------------------------
 * model: 0 = binomial, 1 = gaussian. stratified != 0 enumerates all 2^steps
 * sign paths exactly once (binomial only). */
rgx_status rgx_mc_simulate(const rgx_solution* policy_source, const rgx_payoff* payoff,
                           uint64_t n_samples, uint64_t seed, int model, int stratified,
                           double* mean, double* std_error, uint64_t* violations);
/* Same under a constant volatility level instead of the optimal policy. */
rgx_status rgx_mc_simulate_constant(const rgx_domain* domain, double alpha,
                                    const rgx_payoff* payoff, double horizon, int steps,
                                    uint64_t n_samples, uint64_t seed, int model, double* mean,
                                    double* std_error, uint64_t* violations);

/* --- PDE cross-check ------------------------------------------------------ */

rgx_status rgx_pde_solve(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                         double dx, double cfl, double x_half_width /* 0 = auto */,
                         double delta, int snapshots, rgx_pde** out);
double rgx_pde_value(const rgx_pde* p); /* u(0, 0) */
int64_t rgx_pde_columns(const rgx_pde* p);
int64_t rgx_pde_snapshots(const rgx_pde* p);
rgx_status rgx_pde_grid(const rgx_pde* p, double* buf, int64_t buf_len);
rgx_status rgx_pde_slice(const rgx_pde* p, int64_t snapshot, double* time, double* buf,
                         int64_t buf_len);
void rgx_pde_free(rgx_pde* p);

rgx_status rgx_compare(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                       int steps, double delta, int vol_points, double dx, double cfl,
                       double x_half_width, double* tree_root, double* pde_value, double* gap);

rgx_status rgx_pde_delta_family(const rgx_payoff* payoff, const rgx_domain* domain,
                                double horizon, const double* deltas, int64_t n_deltas, double dx,
                                double cfl, double x_half_width, double* values, int* monotone);

/* --- consistency battery -------------------------------------------------- */

rgx_status rgx_check_run(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                         int steps, double delta, int vol_points, uint64_t seed,
                         rgx_report** out);
int64_t rgx_report_rows(const rgx_report* r);
rgx_status rgx_report_row(const rgx_report* r, int64_t i, const char** name, double* residual,
                          int* pass);
void rgx_report_free(rgx_report* r);

/* --- sublinear operator extras -------------------------------------------- */

/* sup over admissible laws of the L^p norm of the payoff. */
rgx_status rgx_lp_norm(const rgx_payoff* payoff, double p, const rgx_domain* domain,
                       double horizon, int steps, double delta, int vol_points, double* out);

#ifdef __cplusplus
}
#endif

#endif /* RGEXPECT_H */
