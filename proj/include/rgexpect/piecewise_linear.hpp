#pragma once

#include <vector>

#include "rgexpect/common.hpp"

namespace rgexpect {

/// Piecewise-linear function given by sorted breakpoints, constant beyond the
/// first and last breakpoint. Used for state-dependent volatility bounds and
/// table payoffs; constant extrapolation keeps values bounded and the global
/// Lipschitz constant equal to the steepest segment.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> xs, std::vector<double> ys);

    static PiecewiseLinear constant(double c) { return PiecewiseLinear({0.0}, {c}); }

    double operator()(double x) const;

    double lipschitz() const;
    double min_value() const;
    double max_value() const;
    bool is_constant() const { return xs_.size() == 1; }

    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

} // namespace rgexpect
