#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rgexpect/pathspace.hpp"
#include "rgexpect/piecewise_linear.hpp"

namespace rgexpect {

/// Closed volatility band [lo, hi] with nonempty interior.
struct VolatilityInterval {
    double lo = 0.0;
    double hi = 1.0;

    VolatilityInterval() = default;
    VolatilityInterval(double lo_, double hi_);
    double width() const { return hi - lo; }
};

/// [lo+delta, hi-delta] when nonempty, otherwise nothing.
std::optional<VolatilityInterval> delta_interior(const VolatilityInterval& iv, double delta);

/// Path-dependent constraint band: the admissible volatility interval at each
/// (step, path-prefix), together with a uniform-continuity certificate
/// modulus(delta) = eps such that prefixes within eps of each other have
/// delta-interiors included in each other's eps-interiors.
class DomainProcess {
public:
    enum class Kind { constant, state, path };

    Kind kind() const { return kind_; }

    /// Interval for the step-k volatility; only prefix[0..k] is consulted.
    VolatilityInterval at(int k, std::span<const double> prefix) const;

    /// Markov access (constant/state kinds only): interval from the current value.
    VolatilityInterval at_state(double x) const;

    double modulus(double delta) const;

    // outer envelope: every band lies inside [min_lo, max_hi]
    double min_lo() const { return min_lo_; }
    double max_hi() const { return max_hi_; }
    // inner envelope hint: values in (max_lo, min_hi) lie inside every band
    // the factories can produce; custom bands report their outer envelope here
    double max_lo() const { return max_lo_; }
    double min_hi() const { return min_hi_; }

    const PiecewiseLinear& lower_table() const { return a_; }
    const PiecewiseLinear& upper_table() const { return b_; }

    static DomainProcess constant(double lo, double hi);
    static DomainProcess state_dependent(PiecewiseLinear a, PiecewiseLinear b);
    /// a = a0 + a_coef * min(running max, cap), same shape for b.
    static DomainProcess path_running_max(double a0, double a_coef, double b0, double b_coef,
                                          double cap);
    /// Arbitrary band with a caller-supplied modulus certificate; used for
    /// experiments and adversarial instances. The certificate is not verified.
    static DomainProcess custom(Kind declared,
                                std::function<VolatilityInterval(int, std::span<const double>)> fn,
                                std::function<double(double)> modulus, double min_lo,
                                double max_hi);

private:
    Kind kind_ = Kind::constant;
    double lo_ = 0.0, hi_ = 1.0;
    PiecewiseLinear a_, b_;
    std::function<VolatilityInterval(int, std::span<const double>)> fn_;
    std::function<double(double)> modulus_;
    double min_lo_ = 0.0, max_hi_ = 1.0;
    double max_lo_ = 0.0, min_hi_ = 1.0;
};

/// Modulus for bands whose lower/upper processes are L-Lipschitz in the path
/// sup-norm: eps(delta) = min(delta / (2 L), delta / 2). A perturbation within
/// eps moves each endpoint by at most delta/2, which keeps the delta-interior
/// inside the eps-interior of the perturbed band.
std::function<double(double)> lipschitz_modulus(double lipschitz);

/// General interval-band constructor from lower/upper path processes with
/// Lipschitz data. Probes nothing; invalid bands surface when evaluated.
DomainProcess make_interval_domain(
    std::function<double(int, std::span<const double>)> lower,
    std::function<double(int, std::span<const double>)> upper, double lipschitz,
    DomainProcess::Kind declared, double min_lo, double max_hi);

/// Adapted volatility assignment on the sign tree: alpha[k] holds 2^k values
/// for k = 0..steps-1. margin/deg are cached by admissibility_margin.
struct Policy {
    TimeGrid grid;
    std::vector<std::vector<double>> alpha;
    double margin = 0.0;
    double deg = 0.0;
    bool margin_known = false;

    int steps() const { return static_cast<int>(alpha.size()); }
    double alpha_at(int k, std::uint64_t node) const;
};

Policy constant_policy(const TimeGrid& grid, double a);
/// Builds a full tree policy from a feedback rule on realized prefixes.
Policy make_feedback_policy(const TimeGrid& grid,
                            const std::function<double(int, std::span<const double>)>& rule);

/// Realized states of the policy tree: out[k][node] for k = 0..steps.
std::vector<std::vector<double>> policy_states(const Policy& policy);

/// Path realization for a tree policy (volatility looked up by node index).
DiscretePath realize_path(const SignSequence& signs, const Policy& policy, const TimeGrid& grid);

struct MarginReport {
    double margin = 0.0; ///< min over nodes of min(alpha - lo, hi - alpha)
    double deg = 0.0;    ///< min(margin/2, 1) when margin > 0, else 0
    bool admissible = false;
    int bad_level = -1; ///< node attaining a nonpositive margin, if any
    std::uint64_t bad_node = 0;
};

/// Exact admissibility margin over every node of the policy tree; caches the
/// result on the policy. Nonpositive margins report the offending node instead
/// of throwing.
MarginReport admissibility_margin(Policy& policy, const DomainProcess& domain);

/// Margin of the policy subtree rooted at (k0, node0) when the realized prefix
/// there is `prefix` (k0+1 values). Used for pasting cells and for perturbed
/// re-checks.
MarginReport subtree_margin(const Policy& policy, const DomainProcess& domain, int k0,
                            std::uint64_t node0, std::span<const double> prefix);

struct UcViolationReport {
    double worst = 0.0; ///< max inclusion violation found; 0 = pass
    long samples = 0;
};

/// Sampling diagnostic for the uniform-continuity certificate: draws prefix
/// pairs within modulus(delta) of each other plus common suffixes and measures
/// how far the delta-interior falls outside the perturbed eps-interior.
UcViolationReport uc_check(const DomainProcess& domain, const TimeGrid& grid, double delta,
                           long samples, std::uint64_t seed);

/// Perturbation radius at (k, prefix) under which the policy subtree stays
/// admissible with deg at least the returned value: min(modulus(deg)/2, 1).
double stability_radius(int k, std::uint64_t node, std::span<const double> prefix,
                        const Policy& policy, const DomainProcess& domain);

} // namespace rgexpect
