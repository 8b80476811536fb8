#include "rgexpect/pde_solver.hpp"

#include <algorithm>
#include <cmath>

#include "rgexpect/tree_solver.hpp"

namespace rgexpect {

double g_function(double a, double b, double q) {
    if (!(a >= 0.0) || !(a <= b)) throw ArgumentError("g_function: needs 0 <= a <= b");
    return 0.5 * (q >= 0.0 ? b * q : a * q);
}

PdeSolution solve_pde(const std::function<double(double)>& f,
                      const std::function<double(double)>& a,
                      const std::function<double(double)>& b, double horizon,
                      const PdeParams& params, double delta) {
    if (!(horizon > 0.0)) throw ArgumentError("pde: horizon must be positive");
    if (!(params.dx > 0.0)) throw ArgumentError("pde: dx must be positive");
    if (!(params.cfl > 0.0) || params.cfl > 1.0) throw ArgumentError("pde: cfl must be in (0,1]");
    if (delta < 0.0) throw ArgumentError("pde: delta must be nonnegative");

    PdeSolution sol;
    sol.dx = params.dx;
    sol.cfl = params.cfl;

    // probe the upper bound to size the grid
    double probe_max_b = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.25) probe_max_b = std::max(probe_max_b, b(x));
    const double half_width = params.x_half_width > 0.0
                                  ? params.x_half_width
                                  : 6.0 * std::sqrt(std::max(probe_max_b, 1e-12) * horizon);
    const int half_cols = std::max(2, static_cast<int>(std::ceil(half_width / params.dx)));
    const int cols = 2 * half_cols + 1;
    sol.center = half_cols;
    sol.x.resize(static_cast<std::size_t>(cols));
    for (int i = 0; i < cols; ++i) sol.x[static_cast<std::size_t>(i)] = (i - half_cols) * params.dx;

    std::vector<double> lo(static_cast<std::size_t>(cols)), hi(static_cast<std::size_t>(cols));
    double max_b = 0.0;
    for (int i = 0; i < cols; ++i) {
        const double av = a(sol.x[static_cast<std::size_t>(i)]) + delta;
        const double bv = b(sol.x[static_cast<std::size_t>(i)]) - delta;
        if (!(av >= 0.0) || !(av <= bv))
            throw ArgumentError("pde: bounds must satisfy 0 <= a+delta <= b-delta on the grid");
        lo[static_cast<std::size_t>(i)] = av;
        hi[static_cast<std::size_t>(i)] = bv;
        max_b = std::max(max_b, bv);
    }
    sol.max_b = max_b;

    const double dt_target = params.cfl * params.dx * params.dx / std::max(max_b, 1e-12);
    const int steps = std::max(1, static_cast<int>(std::ceil(horizon / dt_target)));
    sol.steps = steps;
    sol.dt = horizon / steps;

    std::vector<double> cur(static_cast<std::size_t>(cols)), nxt(static_cast<std::size_t>(cols));
    for (int i = 0; i < cols; ++i) cur[static_cast<std::size_t>(i)] = f(sol.x[static_cast<std::size_t>(i)]);

    std::vector<int> snap_at;
    if (params.snapshots > 0) {
        for (int s = 0; s <= params.snapshots; ++s)
            snap_at.push_back(static_cast<int>(std::llround(
                static_cast<double>(steps) * s / (params.snapshots + 1))));
        sol.snapshot_times.push_back(horizon);
        sol.snapshot_values.push_back(cur);
    }

    const double inv_dx2 = 1.0 / (params.dx * params.dx);
    for (int n = steps - 1; n >= 0; --n) {
        nxt[0] = cur[0];
        nxt[static_cast<std::size_t>(cols) - 1] = cur[static_cast<std::size_t>(cols) - 1];
        for (int i = 1; i < cols - 1; ++i) {
            const double d2 = (cur[static_cast<std::size_t>(i) + 1] - 2.0 * cur[static_cast<std::size_t>(i)] +
                               cur[static_cast<std::size_t>(i) - 1]) *
                              inv_dx2;
            const double g = 0.5 * (d2 >= 0.0 ? hi[static_cast<std::size_t>(i)] * d2
                                              : lo[static_cast<std::size_t>(i)] * d2);
            nxt[static_cast<std::size_t>(i)] = cur[static_cast<std::size_t>(i)] + sol.dt * g;
        }
        cur.swap(nxt);
        if (!std::isfinite(cur[static_cast<std::size_t>(sol.center)]))
            throw NumericError("pde: scheme diverged at time step " + std::to_string(n));
        if (!snap_at.empty() && n > 0 &&
            std::find(snap_at.begin(), snap_at.end(), n) != snap_at.end()) {
            sol.snapshot_times.push_back(n * sol.dt);
            sol.snapshot_values.push_back(cur);
        }
    }
    sol.u0 = std::move(cur);
    if (params.snapshots > 0) {
        sol.snapshot_times.push_back(0.0);
        sol.snapshot_values.push_back(sol.u0);
    }
    return sol;
}

DeltaFamilyResult delta_family(const std::function<double(double)>& f,
                               const std::function<double(double)>& a,
                               const std::function<double(double)>& b, double horizon,
                               std::span<const double> deltas, const PdeParams& params) {
    DeltaFamilyResult out;
    out.values.reserve(deltas.size());
    for (double d : deltas)
        out.values.push_back(solve_pde(f, a, b, horizon, params, d).value());
    out.monotone = true;
    for (std::size_t i = 1; i < deltas.size(); ++i) {
        const bool shrinking = deltas[i] <= deltas[i - 1];
        const double lo_v = shrinking ? out.values[i - 1] : out.values[i];
        const double hi_v = shrinking ? out.values[i] : out.values[i - 1];
        if (lo_v > hi_v + 1e-12) out.monotone = false;
    }
    return out;
}

CompareReport compare_rep(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                          double delta, int vol_points, const PdeParams& params) {
    if (!payoff.is_terminal())
        throw ArgumentError("compare_rep: payoff must be a function of the terminal value");
    if (domain.kind() == DomainProcess::Kind::path)
        throw ArgumentError("compare_rep: band must be Markovian");
    CompareReport rep;
    rep.tree_root = root_value(payoff, domain, grid, delta, vol_points);
    const auto pde = solve_pde([&](double x) { return payoff.terminal(x); },
                               [&](double x) { return domain.at_state(x).lo; },
                               [&](double x) { return domain.at_state(x).hi; }, grid.horizon,
                               params, delta);
    rep.pde_value = pde.value();
    rep.gap = std::abs(rep.tree_root - rep.pde_value);
    return rep;
}

} // namespace rgexpect
