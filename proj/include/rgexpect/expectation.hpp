#pragma once

#include <string>
#include <vector>

#include "rgexpect/tree_solver.hpp"

namespace rgexpect {

/// The conditional worst-case expectation: the solve's value field carries
/// E_t(X) at every level t along the optimal realized tree (E_0 at the root,
/// X itself at the leaves).
ValueField expectation_field(const Payoff& X, const DomainProcess& domain, const TimeGrid& grid,
                             double delta, int vol_points);

/// sup over admissible laws of the L^p norm, computed as E_0(|X|^p)^(1/p).
double lp_norm(const Payoff& X, double p, const DomainProcess& domain, const TimeGrid& grid,
               double delta, int vol_points);

/// Common evaluation prefixes for comparing conditional expectations of
/// different payoffs at the same level-t nodes.
struct AnchorSet {
    int t = 0;
    TimeGrid grid;
    std::vector<std::vector<double>> prefixes; ///< one per level-t node
};

AnchorSet anchors_of(const ValueField& field, int t);

/// E_t(Y) at every anchor (remaining-horizon subproblem values).
std::vector<double> expectation_at(const Payoff& Y, const AnchorSet& anchors,
                                   const DomainProcess& domain, double delta, int vol_points);

using NodeFn = std::function<double(std::span<const double> prefix)>;

struct PropertyReport {
    struct Row {
        std::string name;
        double worst = 0.0;
        bool pass = false;
    };
    std::vector<Row> rows;
    bool all_pass = false;
};

/// Verifies the operator axioms nodewise at level t (anchored on the solve
/// tree of X): monotonicity, translation by the F_t-measurable X', positive
/// homogeneity with an F_t weight, subadditivity of differences, additivity
/// under linearity of X', and the L^p contraction at p = 1, 2.
PropertyReport property_suite(const Payoff& X, const Payoff& X_meas, const NodeFn& eta, int t,
                              const DomainProcess& domain, const TimeGrid& grid, double delta,
                              int vol_points, double tol = 1e-10);

/// max over level-s nodes of |re-solved E_s(E_t(X)) - E_s(X)|.
double time_consistency_check(const Payoff& X, int s, int t, const DomainProcess& domain,
                              const TimeGrid& grid, double delta, int vol_points);

/// ||E_t(xi) - E_t(psi)||_p <= ||xi - psi||_p within tol.
bool lipschitz_check(const Payoff& xi, const Payoff& psi, int t, double p,
                     const DomainProcess& domain, const TimeGrid& grid, double delta,
                     int vol_points, double tol = 1e-10);

} // namespace rgexpect
