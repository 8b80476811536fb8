#include "rgexpect/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>

namespace rgexpect {

PiecewiseLinear::PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.empty() || xs_.size() != ys_.size())
        throw ArgumentError("piecewise-linear table needs matching, nonempty breakpoint lists");
    for (std::size_t i = 1; i < xs_.size(); ++i)
        if (!(xs_[i] > xs_[i - 1]))
            throw ArgumentError("piecewise-linear breakpoints must be strictly increasing");
    for (double v : ys_)
        if (!std::isfinite(v)) throw ArgumentError("piecewise-linear values must be finite");
}

double PiecewiseLinear::operator()(double x) const {
    if (xs_.size() == 1 || x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    const double w = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return ys_[i - 1] + w * (ys_[i] - ys_[i - 1]);
}

double PiecewiseLinear::lipschitz() const {
    double l = 0.0;
    for (std::size_t i = 1; i < xs_.size(); ++i)
        l = std::max(l, std::abs(ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1]));
    return l;
}

double PiecewiseLinear::min_value() const { return *std::min_element(ys_.begin(), ys_.end()); }

double PiecewiseLinear::max_value() const { return *std::max_element(ys_.begin(), ys_.end()); }

} // namespace rgexpect
