// Exercises the shared-library surface the way an external client would:
// only rgexpect.h, opaque handles and status codes.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "rgexpect.h"

static int g_failures = 0;

#define CHECK(cond)                                                       \
    do {                                                                  \
        if (!(cond)) {                                                    \
            std::fprintf(stderr, "FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond); \
            ++g_failures;                                                 \
        }                                                                 \
    } while (0)

int main() {
    CHECK(std::strlen(rgx_version()) > 0);

    rgx_domain* dom = nullptr;
    CHECK(rgx_domain_create_constant(1.0, 4.0, &dom) == RGX_OK);
    CHECK(rgx_domain_vol_bound(dom) == 4.0);

    rgx_domain* bad = nullptr;
    CHECK(rgx_domain_create_constant(4.0, 1.0, &bad) == RGX_ERR_ARGUMENT);
    CHECK(bad == nullptr);
    CHECK(std::strlen(rgx_last_error()) > 0);

    rgx_payoff* pay = nullptr;
    CHECK(rgx_payoff_create("terminal_square", nullptr, 0, 1.0, 3, 4.0, &pay) == RGX_OK);
    rgx_payoff* nope = nullptr;
    CHECK(rgx_payoff_create("no_such_payoff", nullptr, 0, 1.0, 3, 4.0, &nope) ==
          RGX_ERR_ARGUMENT);

    // root value and full solve agree on the closed-form instance
    double root = 0.0;
    CHECK(rgx_tree_root_value(pay, dom, 1.0, 3, 0.0, 4, &root) == RGX_OK);
    CHECK(std::fabs(root - 4.0) < 1e-12);

    rgx_solution* sol = nullptr;
    CHECK(rgx_tree_solve(pay, dom, 1.0, 3, 0.0, 4, &sol) == RGX_OK);
    CHECK(std::fabs(rgx_solution_root(sol) - 4.0) < 1e-12);
    CHECK(rgx_solution_steps(sol) == 3);
    CHECK(rgx_solution_margin(sol) == 0.0); // argmax sits on the band edge
    double lvl1[2] = {0, 0};
    CHECK(rgx_solution_values(sol, 1, lvl1, 2) == RGX_OK);
    CHECK(rgx_solution_values(sol, 1, lvl1, 1) == RGX_ERR_ARGUMENT);
    CHECK(rgx_solution_values(sol, 9, lvl1, 2) == RGX_ERR_ARGUMENT);

    double pv = 0.0;
    CHECK(rgx_solution_policy_value(sol, pay, &pv) == RGX_OK);
    CHECK(std::fabs(pv - rgx_solution_root(sol)) < 1e-12);

    double oracle = 0.0;
    CHECK(rgx_enumerate_policies(pay, dom, 1.0, 3, 0.0, 4, &oracle) == RGX_OK);
    CHECK(std::fabs(oracle - root) < 1e-12);
    CHECK(rgx_enumerate_policies(pay, dom, 1.0, 6, 0.0, 4, &oracle) == RGX_ERR_REFUSED);

    double residual = -1.0;
    CHECK(rgx_solution_dpp_residual(sol, pay, dom, 0, 3, &residual) == RGX_OK);
    CHECK(residual <= 1e-12);

    double mean = 0.0, se = 0.0;
    uint64_t violations = 9;
    CHECK(rgx_mc_simulate(sol, pay, 8 /*ignored*/, 0, 0, /*stratified=*/1, &mean, &se,
                          &violations) == RGX_OK);
    CHECK(std::fabs(mean - pv) == 0.0);
    CHECK(violations == 0);
    CHECK(rgx_mc_simulate(sol, pay, 5000, 3, 0, 0, &mean, &se, &violations) == RGX_OK);
    CHECK(std::fabs(mean - 4.0) <= 3.0 * se + 1e-12);

    // infeasible interior surfaces as a status code
    double v = 0.0;
    CHECK(rgx_tree_root_value(pay, dom, 1.0, 3, 1.6, 2, &v) == RGX_ERR_INFEASIBLE);

    // PDE side
    rgx_pde* pde = nullptr;
    CHECK(rgx_pde_solve(pay, dom, 1.0, 0.05, 0.5, 0.0, 0.0, 2, &pde) == RGX_OK);
    CHECK(std::fabs(rgx_pde_value(pde) - 4.0) < 1e-4);
    CHECK(rgx_pde_snapshots(pde) == 4); // terminal + 2 interior + initial
    const int64_t cols = rgx_pde_columns(pde);
    CHECK(cols > 10);
    std::vector<double> xs(static_cast<size_t>(cols));
    CHECK(rgx_pde_grid(pde, xs.data(), cols) == RGX_OK);
    double t_slice = -1.0;
    std::vector<double> slice(static_cast<size_t>(cols));
    CHECK(rgx_pde_slice(pde, 0, &t_slice, slice.data(), cols) == RGX_OK);
    CHECK(t_slice == 1.0);

    double tree = 0.0, pdeval = 0.0, gap = 0.0;
    CHECK(rgx_compare(pay, dom, 1.0, 8, 0.0, 2, 0.05, 0.5, 0.0, &tree, &pdeval, &gap) == RGX_OK);
    CHECK(gap < 1e-3);

    const double deltas[3] = {0.5, 0.1, 0.0};
    double family[3] = {0, 0, 0};
    int monotone = 0;
    CHECK(rgx_pde_delta_family(pay, dom, 1.0, deltas, 3, 0.05, 0.5, 0.0, family, &monotone) ==
          RGX_OK);
    CHECK(monotone == 1);
    CHECK(std::fabs(family[0] - 3.5) < 1e-3);

    double norm = 0.0;
    CHECK(rgx_lp_norm(pay, 1.0, dom, 1.0, 3, 0.0, 4, &norm) == RGX_OK);
    CHECK(std::fabs(norm - 4.0) < 1e-12);

    // state band + uc diagnostic
    const double axs[3] = {-1.0, 0.0, 1.0};
    const double ays[3] = {1.5, 1.0, 1.5};
    const double bxs[1] = {0.0};
    const double bys[1] = {4.0};
    rgx_domain* state = nullptr;
    CHECK(rgx_domain_create_state(axs, ays, 3, bxs, bys, 1, &state) == RGX_OK);
    double worst = -1.0;
    CHECK(rgx_domain_uc_check(state, 1.0, 8, 0.25, 2000, 9, &worst) == RGX_OK);
    CHECK(worst == 0.0);

    rgx_report* rep = nullptr;
    CHECK(rgx_check_run(pay, dom, 1.0, 4, 0.0, 3, 5, &rep) == RGX_OK);
    CHECK(rgx_report_rows(rep) > 5);
    for (int64_t i = 0; i < rgx_report_rows(rep); ++i) {
        const char* name = nullptr;
        double r = 0.0;
        int pass = 0;
        CHECK(rgx_report_row(rep, i, &name, &r, &pass) == RGX_OK);
        if (!pass) std::fprintf(stderr, "check row failed: %s residual=%g\n", name, r);
        CHECK(pass == 1);
    }

    rgx_report_free(rep);
    rgx_domain_free(state);
    rgx_pde_free(pde);
    rgx_solution_free(sol);
    rgx_payoff_free(pay);
    rgx_domain_free(dom);
    rgx_domain_free(nullptr); // no-op

    if (g_failures == 0) std::puts("capi_test: all checks passed");
    return g_failures == 0 ? 0 : 1;
}
