#include "rgexpect.h"

#include <cstring>
#include <string>
#include <vector>

#include "rgexpect/checks.hpp"
#include "rgexpect/domain.hpp"
#include "rgexpect/expectation.hpp"
#include "rgexpect/montecarlo.hpp"
#include "rgexpect/pde_solver.hpp"
#include "rgexpect/tree_solver.hpp"

using namespace rgexpect;

struct rgx_domain {
    DomainProcess dom;
};
struct rgx_payoff {
    Payoff payoff;
};
struct rgx_solution {
    SolveResult result;
};
struct rgx_pde {
    PdeSolution sol;
};
struct rgx_report {
    std::vector<CheckRow> rows;
};

namespace {

thread_local std::string g_last_error;

rgx_status fail(rgx_status code, const char* what) {
    g_last_error = what;
    return code;
}

template <class Fn>
rgx_status guarded(Fn&& fn) {
    try {
        fn();
        return RGX_OK;
    } catch (const ArgumentError& e) {
        return fail(RGX_ERR_ARGUMENT, e.what());
    } catch (const StructuralError& e) {
        return fail(RGX_ERR_STRUCTURAL, e.what());
    } catch (const InfeasibleError& e) {
        return fail(RGX_ERR_INFEASIBLE, e.what());
    } catch (const RefusalError& e) {
        return fail(RGX_ERR_REFUSED, e.what());
    } catch (const NumericError& e) {
        return fail(RGX_ERR_NUMERIC, e.what());
    } catch (const std::bad_alloc&) {
        return fail(RGX_ERR_NOMEM, "out of memory");
    } catch (const std::exception& e) {
        return fail(RGX_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(RGX_ERR_INTERNAL, "unknown error");
    }
}

rgx_status require(bool ok, const char* what) {
    return ok ? RGX_OK : fail(RGX_ERR_ARGUMENT, what);
}

McModel to_model(int model) { return model == 1 ? McModel::gaussian : McModel::binomial; }

} // namespace

extern "C" {

const char* rgx_version(void) { return "1.0.0"; }

const char* rgx_last_error(void) { return g_last_error.c_str(); }

rgx_status rgx_domain_create_constant(double lo, double hi, rgx_domain** out) {
    if (rgx_status s = require(out != nullptr, "null output handle")) return s;
    return guarded([&] { *out = new rgx_domain{DomainProcess::constant(lo, hi)}; });
}

rgx_status rgx_domain_create_state(const double* a_xs, const double* a_ys, int64_t a_n,
                                   const double* b_xs, const double* b_ys, int64_t b_n,
                                   rgx_domain** out) {
    if (rgx_status s = require(out && a_xs && a_ys && b_xs && b_ys && a_n > 0 && b_n > 0,
                               "state band needs nonempty breakpoint tables"))
        return s;
    return guarded([&] {
        PiecewiseLinear a(std::vector<double>(a_xs, a_xs + a_n),
                          std::vector<double>(a_ys, a_ys + a_n));
        PiecewiseLinear b(std::vector<double>(b_xs, b_xs + b_n),
                          std::vector<double>(b_ys, b_ys + b_n));
        *out = new rgx_domain{DomainProcess::state_dependent(std::move(a), std::move(b))};
    });
}

rgx_status rgx_domain_create_path(double a0, double a_coef, double b0, double b_coef, double cap,
                                  rgx_domain** out) {
    if (rgx_status s = require(out != nullptr, "null output handle")) return s;
    return guarded(
        [&] { *out = new rgx_domain{DomainProcess::path_running_max(a0, a_coef, b0, b_coef, cap)}; });
}

void rgx_domain_free(rgx_domain* d) { delete d; }

double rgx_domain_vol_bound(const rgx_domain* d) { return d ? d->dom.max_hi() : 0.0; }

rgx_status rgx_domain_uc_check(const rgx_domain* d, double horizon, int steps, double delta,
                               int64_t samples, uint64_t seed, double* worst) {
    if (rgx_status s = require(d && worst && samples > 0, "bad uc_check arguments")) return s;
    return guarded([&] {
        *worst = uc_check(d->dom, TimeGrid(horizon, steps), delta, samples, seed).worst;
    });
}

rgx_status rgx_payoff_create(const char* name, const double* params, int64_t n_params,
                             double horizon, int steps, double vol_bound, rgx_payoff** out) {
    if (rgx_status s = require(out && name, "null payoff name or handle")) return s;
    return guarded([&] {
        const TimeGrid grid(horizon, steps);
        const double xmax = max_abs_state(grid, vol_bound);
        const std::string id(name);
        Payoff p;
        if (id == "terminal_square") {
            p = terminal_square(xmax);
        } else if (id == "terminal_abs") {
            p = terminal_abs(xmax);
        } else if (id == "terminal_cos") {
            p = terminal_cos();
        } else if (id == "running_max") {
            p = running_max_payoff(xmax);
        } else if (id == "asian_mean") {
            p = asian_mean_payoff(xmax);
        } else if (id == "custom_table") {
            if (!params || n_params < 4 || n_params % 2 != 0)
                throw ArgumentError("custom_table needs x,y breakpoint pairs");
            std::vector<double> xs, ys;
            for (int64_t i = 0; i < n_params; i += 2) {
                xs.push_back(params[i]);
                ys.push_back(params[i + 1]);
            }
            p = terminal_table(PiecewiseLinear(std::move(xs), std::move(ys)));
        } else {
            throw ArgumentError("unknown payoff name: " + id);
        }
        *out = new rgx_payoff{std::move(p)};
    });
}

void rgx_payoff_free(rgx_payoff* p) { delete p; }

rgx_status rgx_tree_solve(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                          int steps, double delta, int vol_points, rgx_solution** out) {
    if (rgx_status s = require(payoff && domain && out, "null handle")) return s;
    return guarded([&] {
        *out = new rgx_solution{
            solve(payoff->payoff, domain->dom, TimeGrid(horizon, steps), delta, vol_points)};
    });
}

rgx_status rgx_tree_root_value(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                               int steps, double delta, int vol_points, double* out) {
    if (rgx_status s = require(payoff && domain && out, "null handle")) return s;
    return guarded([&] {
        *out = root_value(payoff->payoff, domain->dom, TimeGrid(horizon, steps), delta,
                          vol_points);
    });
}

double rgx_solution_root(const rgx_solution* s) { return s ? s->result.field.root() : 0.0; }

int rgx_solution_steps(const rgx_solution* s) { return s ? s->result.field.grid.steps : 0; }

double rgx_solution_margin(const rgx_solution* s) {
    return s ? s->result.optimal.policy.margin : 0.0;
}

double rgx_solution_deg(const rgx_solution* s) { return s ? s->result.optimal.policy.deg : 0.0; }

namespace {

rgx_status copy_level(const std::vector<std::vector<double>>& levels, int level, double* buf,
                      int64_t buf_len) {
    if (rgx_status s = require(buf != nullptr, "null buffer")) return s;
    if (level < 0 || level >= static_cast<int>(levels.size()))
        return fail(RGX_ERR_ARGUMENT, "level outside the stored tree");
    const auto& src = levels[static_cast<std::size_t>(level)];
    if (buf_len < static_cast<int64_t>(src.size()))
        return fail(RGX_ERR_ARGUMENT, "buffer too small for the requested level");
    std::memcpy(buf, src.data(), src.size() * sizeof(double));
    return RGX_OK;
}

} // namespace

rgx_status rgx_solution_values(const rgx_solution* s, int level, double* buf, int64_t buf_len) {
    if (rgx_status st = require(s != nullptr, "null handle")) return st;
    return copy_level(s->result.field.value, level, buf, buf_len);
}

rgx_status rgx_solution_states(const rgx_solution* s, int level, double* buf, int64_t buf_len) {
    if (rgx_status st = require(s != nullptr, "null handle")) return st;
    return copy_level(s->result.field.state, level, buf, buf_len);
}

rgx_status rgx_solution_alphas(const rgx_solution* s, int level, double* buf, int64_t buf_len) {
    if (rgx_status st = require(s != nullptr, "null handle")) return st;
    return copy_level(s->result.optimal.policy.alpha, level, buf, buf_len);
}

rgx_status rgx_solution_policy_value(const rgx_solution* s, const rgx_payoff* payoff,
                                     double* out) {
    if (rgx_status st = require(s && payoff && out, "null handle")) return st;
    return guarded([&] { *out = policy_value(s->result.optimal.policy, payoff->payoff); });
}

rgx_status rgx_solution_dpp_residual(const rgx_solution* s, const rgx_payoff* payoff,
                                     const rgx_domain* domain, int from, int to, double* out) {
    if (rgx_status st = require(s && payoff && domain && out, "null handle")) return st;
    return guarded([&] {
        *out = dpp_check(s->result.field, payoff->payoff, domain->dom, s->result.field.delta,
                         s->result.field.vol_points, from, to);
    });
}

void rgx_solution_free(rgx_solution* s) { delete s; }

rgx_status rgx_enumerate_policies(const rgx_payoff* payoff, const rgx_domain* domain,
                                  double horizon, int steps, double delta, int vol_points,
                                  double* out) {
    if (rgx_status s = require(payoff && domain && out, "null handle")) return s;
    return guarded([&] {
        *out = enumerate_policies(payoff->payoff, domain->dom, TimeGrid(horizon, steps), delta,
                                  vol_points);
    });
}

rgx_status rgx_mc_simulate(const rgx_solution* policy_source, const rgx_payoff* payoff,
                           uint64_t n_samples, uint64_t seed, int model, int stratified,
                           double* mean, double* std_error, uint64_t* violations) {
    if (rgx_status s = require(policy_source && payoff && mean && std_error, "null handle"))
        return s;
    return guarded([&] {
        McEstimate est;
        if (stratified) {
            if (model == 1) throw ArgumentError("stratified runs use the binomial model");
            est = stratified_expectation(policy_source->result.optimal.policy, payoff->payoff);
        } else {
            est = simulate(policy_source->result.optimal.policy, payoff->payoff, n_samples, seed,
                           to_model(model));
        }
        *mean = est.mean;
        *std_error = est.std_error;
        if (violations) *violations = est.violations;
    });
}

rgx_status rgx_mc_simulate_constant(const rgx_domain* domain, double alpha,
                                    const rgx_payoff* payoff, double horizon, int steps,
                                    uint64_t n_samples, uint64_t seed, int model, double* mean,
                                    double* std_error, uint64_t* violations) {
    if (rgx_status s = require(domain && payoff && mean && std_error, "null handle")) return s;
    return guarded([&] {
        const auto est = simulate_feedback([alpha](int, double) { return alpha; }, domain->dom,
                                           payoff->payoff, TimeGrid(horizon, steps), n_samples,
                                           seed, to_model(model));
        *mean = est.mean;
        *std_error = est.std_error;
        if (violations) *violations = est.violations;
    });
}

rgx_status rgx_pde_solve(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                         double dx, double cfl, double x_half_width, double delta, int snapshots,
                         rgx_pde** out) {
    if (rgx_status s = require(payoff && domain && out, "null handle")) return s;
    return guarded([&] {
        if (!payoff->payoff.is_terminal())
            throw ArgumentError("pde: payoff must be a function of the terminal value");
        PdeParams prm;
        prm.dx = dx;
        prm.cfl = cfl;
        prm.x_half_width = x_half_width;
        prm.snapshots = snapshots;
        *out = new rgx_pde{solve_pde([f = payoff->payoff.terminal](double x) { return f(x); },
                                     [&](double x) { return domain->dom.at_state(x).lo; },
                                     [&](double x) { return domain->dom.at_state(x).hi; },
                                     horizon, prm, delta)};
    });
}

double rgx_pde_value(const rgx_pde* p) { return p ? p->sol.value() : 0.0; }

int64_t rgx_pde_columns(const rgx_pde* p) {
    return p ? static_cast<int64_t>(p->sol.x.size()) : 0;
}

int64_t rgx_pde_snapshots(const rgx_pde* p) {
    return p ? static_cast<int64_t>(p->sol.snapshot_times.size()) : 0;
}

rgx_status rgx_pde_grid(const rgx_pde* p, double* buf, int64_t buf_len) {
    if (rgx_status s = require(p && buf, "null handle")) return s;
    if (buf_len < static_cast<int64_t>(p->sol.x.size()))
        return fail(RGX_ERR_ARGUMENT, "buffer too small");
    std::memcpy(buf, p->sol.x.data(), p->sol.x.size() * sizeof(double));
    return RGX_OK;
}

rgx_status rgx_pde_slice(const rgx_pde* p, int64_t snapshot, double* time, double* buf,
                         int64_t buf_len) {
    if (rgx_status s = require(p && time && buf, "null handle")) return s;
    if (snapshot < 0 || snapshot >= static_cast<int64_t>(p->sol.snapshot_times.size()))
        return fail(RGX_ERR_ARGUMENT, "snapshot index out of range");
    const auto& slice = p->sol.snapshot_values[static_cast<std::size_t>(snapshot)];
    if (buf_len < static_cast<int64_t>(slice.size()))
        return fail(RGX_ERR_ARGUMENT, "buffer too small");
    *time = p->sol.snapshot_times[static_cast<std::size_t>(snapshot)];
    std::memcpy(buf, slice.data(), slice.size() * sizeof(double));
    return RGX_OK;
}

void rgx_pde_free(rgx_pde* p) { delete p; }

rgx_status rgx_compare(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                       int steps, double delta, int vol_points, double dx, double cfl,
                       double x_half_width, double* tree_root, double* pde_value, double* gap) {
    if (rgx_status s = require(payoff && domain && tree_root && pde_value && gap, "null handle"))
        return s;
    return guarded([&] {
        PdeParams prm;
        prm.dx = dx;
        prm.cfl = cfl;
        prm.x_half_width = x_half_width;
        const auto rep = compare_rep(payoff->payoff, domain->dom, TimeGrid(horizon, steps), delta,
                                     vol_points, prm);
        *tree_root = rep.tree_root;
        *pde_value = rep.pde_value;
        *gap = rep.gap;
    });
}

rgx_status rgx_pde_delta_family(const rgx_payoff* payoff, const rgx_domain* domain,
                                double horizon, const double* deltas, int64_t n_deltas, double dx,
                                double cfl, double x_half_width, double* values, int* monotone) {
    if (rgx_status s =
            require(payoff && domain && deltas && values && n_deltas > 0, "bad arguments"))
        return s;
    return guarded([&] {
        if (!payoff->payoff.is_terminal())
            throw ArgumentError("pde: payoff must be a function of the terminal value");
        PdeParams prm;
        prm.dx = dx;
        prm.cfl = cfl;
        prm.x_half_width = x_half_width;
        const auto fam =
            delta_family([f = payoff->payoff.terminal](double x) { return f(x); },
                         [&](double x) { return domain->dom.at_state(x).lo; },
                         [&](double x) { return domain->dom.at_state(x).hi; }, horizon,
                         std::span<const double>(deltas, static_cast<std::size_t>(n_deltas)), prm);
        std::memcpy(values, fam.values.data(), fam.values.size() * sizeof(double));
        if (monotone) *monotone = fam.monotone ? 1 : 0;
    });
}

rgx_status rgx_check_run(const rgx_payoff* payoff, const rgx_domain* domain, double horizon,
                         int steps, double delta, int vol_points, uint64_t seed,
                         rgx_report** out) {
    if (rgx_status s = require(payoff && domain && out, "null handle")) return s;
    return guarded([&] {
        CheckParams prm;
        prm.grid = TimeGrid(horizon, steps);
        prm.delta = delta;
        prm.vol_points = vol_points;
        prm.seed = seed;
        *out = new rgx_report{run_check_battery(payoff->payoff, domain->dom, prm)};
    });
}

int64_t rgx_report_rows(const rgx_report* r) {
    return r ? static_cast<int64_t>(r->rows.size()) : 0;
}

rgx_status rgx_report_row(const rgx_report* r, int64_t i, const char** name, double* residual,
                          int* pass) {
    if (rgx_status s = require(r && name && residual && pass, "null handle")) return s;
    if (i < 0 || i >= static_cast<int64_t>(r->rows.size()))
        return fail(RGX_ERR_ARGUMENT, "row index out of range");
    const CheckRow& row = r->rows[static_cast<std::size_t>(i)];
    *name = row.name.c_str();
    *residual = row.residual;
    *pass = row.pass ? 1 : 0;
    return RGX_OK;
}

void rgx_report_free(rgx_report* r) { delete r; }

rgx_status rgx_lp_norm(const rgx_payoff* payoff, double p, const rgx_domain* domain,
                       double horizon, int steps, double delta, int vol_points, double* out) {
    if (rgx_status s = require(payoff && domain && out, "null handle")) return s;
    return guarded([&] {
        *out = lp_norm(payoff->payoff, p, domain->dom, TimeGrid(horizon, steps), delta,
                       vol_points);
    });
}

} // extern "C"
