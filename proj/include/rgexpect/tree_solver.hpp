#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rgexpect/domain.hpp"
#include "rgexpect/pathspace.hpp"

namespace rgexpect {

/// Hard cap on tree depth; level arrays hold 2^k values per level.
constexpr int kMaxTreeSteps = 22;

/// Node-indexed values V_k and realized states of the optimal tree. Each
/// interior value is stored as the exact half-sum of its two stored children,
/// so re-solving any sub-horizon against the stored terminal slice reproduces
/// the stored values bit for bit.
struct ValueField {
    TimeGrid grid;
    double delta = 0.0;
    int vol_points = 0;
    std::vector<std::vector<double>> value; ///< value[k] has 2^k entries, k = 0..steps
    std::vector<std::vector<double>> state; ///< realized x of the optimal tree

    double root() const { return value[0][0]; }
    /// Realized prefix (k+1 values) of node (k, i) on the optimal tree.
    std::vector<double> prefix_of(int k, std::uint64_t node) const;
};

/// Argmax policy extracted from the solve, with the grid index chosen per node.
struct OptimalPolicy {
    Policy policy;
    std::vector<std::vector<int>> choice;
};

struct SolveResult {
    ValueField field;
    OptimalPolicy optimal;
};

/// Worst-case expectation of the payoff over all adapted volatility policies
/// taking values on the M-point grid of the delta-interior band, computed by
/// exact recursion over realized paths. Ties in the inner maximization break
/// toward the smaller volatility.
SolveResult solve(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                  double delta, int vol_points);

/// Root value only; same recursion without recording the tree.
double root_value(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                  double delta, int vol_points);

/// Value of the remaining-horizon subproblem from a given realized prefix
/// (k+1 values) at level k; node0 is the tree position, used in diagnostics.
double anchored_value(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                      double delta, int vol_points, int k, std::uint64_t node0,
                      std::span<const double> prefix);

/// Brute-force maximum over every adapted grid-valued policy; the independent
/// cross-check for solve. Refuses more than four steps.
double enumerate_policies(const Payoff& payoff, const DomainProcess& domain, const TimeGrid& grid,
                          double delta, int vol_points);

/// Average of the payoff over all 2^N realized sign paths, accumulated as
/// nested half-sums so that the value of the optimal policy reproduces the
/// solve root exactly. The policy must have been checked admissible.
double policy_value(const Policy& policy, const Payoff& payoff);

/// Conditional policy values at every level-t node (subtree averages).
std::vector<double> conditional_values(const Policy& policy, const Payoff& payoff, int t);

/// Re-solves every [s, t] subproblem with the stored level-t slice as terminal
/// data and the band shifted to the stored prefixes; returns the largest
/// deviation from the stored level-s values.
double dpp_check(const ValueField& field, const Payoff& payoff, const DomainProcess& domain,
                 double delta, int vol_points, int s, int t);

/// Adapted volatility assignment for the subtree below some level-t node.
struct SuffixPolicy {
    int from_step = 0;
    std::vector<std::vector<double>> alpha; ///< alpha[j] has 2^j entries

    static SuffixPolicy constant(const TimeGrid& grid, int from_step, double a);
    static SuffixPolicy tail_of(const Policy& policy, int from_step, std::uint64_t node);
};

using NodePredicate = std::function<bool(std::span<const double> prefix)>;

/// Pastes replacement suffixes onto the base policy across a partition of the
/// level-t nodes (a null replacement keeps the base suffix on that cell).
/// Every replacement must be admissible on its cell; the pasted margin is the
/// minimum over the pieces.
Policy paste_policies(const Policy& base, int t, const std::vector<NodePredicate>& cells,
                      const std::vector<const SuffixPolicy*>& replacements,
                      const DomainProcess& domain);

/// Pairwise pasting ladder: folds the inputs (which must agree before t) into
/// policies whose conditional values at level t are pointwise non-decreasing
/// and end at the pointwise maximum of the inputs.
std::vector<Policy> upward_filtering_sequence(const Payoff& payoff, const DomainProcess& domain,
                                              int t, const std::vector<Policy>& inputs);

} // namespace rgexpect
