#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rgexpect/domain.hpp"
#include "rgexpect/pathspace.hpp"

namespace rgexpect {

/// sup over p in [a, b] of p*q/2, in closed form.
double g_function(double a, double b, double q);

struct PdeParams {
    double dx = 0.02;
    double cfl = 0.5;          ///< time step = cfl * dx^2 / max b; monotone for cfl <= 1
    double x_half_width = 0.0; ///< 0 = auto: 6 * sqrt(max_b * T)
    int snapshots = 0;         ///< stored interior time slices for output
};

/// Backward explicit solution of  -du/dt - G(x, u_xx) = 0,  u(T,.) = f,
/// on a symmetric grid around x = 0, with zero-curvature edge columns.
struct PdeSolution {
    std::vector<double> x;
    std::vector<double> u0; ///< values at t = 0
    std::vector<double> snapshot_times;
    std::vector<std::vector<double>> snapshot_values;
    double dt = 0.0;
    double dx = 0.0;
    int steps = 0;
    double cfl = 0.0;
    double max_b = 0.0;
    int center = 0;

    double value() const { return u0[static_cast<std::size_t>(center)]; } ///< u(0, 0)
};

PdeSolution solve_pde(const std::function<double(double)>& f,
                      const std::function<double(double)>& a,
                      const std::function<double(double)>& b, double horizon,
                      const PdeParams& params, double delta = 0.0);

struct DeltaFamilyResult {
    std::vector<double> values; ///< u^delta(0,0) per requested delta
    bool monotone = false;      ///< non-increasing in delta
};

/// Solves the family with bounds a+delta, b-delta; values must not decrease as
/// delta shrinks.
DeltaFamilyResult delta_family(const std::function<double(double)>& f,
                               const std::function<double(double)>& a,
                               const std::function<double(double)>& b, double horizon,
                               std::span<const double> deltas, const PdeParams& params);

struct CompareReport {
    double tree_root = 0.0;
    double pde_value = 0.0;
    double gap = 0.0;
};

/// Markovian cross-check: worst-case tree value of f(x_T) against the PDE
/// value at (0, 0). The payoff must carry terminal structure and the band must
/// be constant or state-dependent.
CompareReport compare_rep(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                          double delta, int vol_points, const PdeParams& params);

} // namespace rgexpect
