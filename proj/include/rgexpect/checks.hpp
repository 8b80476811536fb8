#pragma once

#include <string>
#include <vector>

#include "rgexpect/domain.hpp"
#include "rgexpect/pathspace.hpp"

namespace rgexpect {

struct CheckRow {
    std::string name;
    double residual = 0.0;
    bool pass = false;
};

struct CheckParams {
    TimeGrid grid;
    double delta = 0.0;
    int vol_points = 9;
    std::uint64_t seed = 1;
};

/// Battery of consistency checks on one instance: solver-vs-enumeration (when
/// small enough), dynamic-programming residuals, pasting identities, the
/// upward-filtering ladder, operator axioms, the band's continuity certificate
/// and a Monte Carlo re-sampling of the optimal policy.
std::vector<CheckRow> run_check_battery(const Payoff& payoff, const DomainProcess& domain,
                                        const CheckParams& params);

} // namespace rgexpect
