#pragma once

#include <cstdint>
#include <functional>

#include "rgexpect/domain.hpp"
#include "rgexpect/pathspace.hpp"
#include "rgexpect/tree_solver.hpp"

namespace rgexpect {

enum class McModel { binomial, gaussian };

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0; ///< sample std / sqrt(n)
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    McModel model = McModel::binomial;
    std::uint64_t violations = 0; ///< samples whose volatility left the closed band
    bool stratified = false;
};

/// Forward simulation of the policy's controlled walk. Counter-based seeding:
/// sample i draws from stream(seed, i, step), so the estimate is identical for
/// any worker count or chunking.
McEstimate simulate(const Policy& policy, const Payoff& payoff, std::uint64_t n,
                    std::uint64_t seed, McModel model);

/// Simulation under a Markov feedback rule (step, current value) -> volatility;
/// band violations are counted per visited state, not fatal.
McEstimate simulate_feedback(const std::function<double(int, double)>& vol,
                             const DomainProcess& domain, const Payoff& payoff,
                             const TimeGrid& grid, std::uint64_t n, std::uint64_t seed,
                             McModel model);

/// All 2^N sign paths exactly once, averaged as nested half-sums; the mean
/// reproduces policy_value bit for bit.
McEstimate stratified_expectation(const Policy& policy, const Payoff& payoff);

struct LowerBoundReport {
    double tree_root = 0.0;
    McEstimate estimate;
    bool within_band = false; ///< |mean - root| <= 3 * std_error
};

/// Re-samples the solve's optimal policy and checks the estimate brackets the
/// root value at three standard errors.
LowerBoundReport lower_bound_check(const SolveResult& result, const Payoff& payoff,
                                   std::uint64_t n, std::uint64_t seed);

} // namespace rgexpect
