#include "rgexpect/pathspace.hpp"

#include <algorithm>
#include <cmath>

namespace rgexpect {

TimeGrid::TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ArgumentError("time grid horizon must be positive");
    if (steps < 1) throw ArgumentError("time grid needs at least one step");
    dt = horizon / steps;
}

DiscretePath::DiscretePath(const TimeGrid& grid_, std::vector<double> values_)
    : grid(grid_), values(std::move(values_)) {
    if (values.empty()) throw StructuralError("path needs at least the starting value");
    if (values[0] != 0.0) throw StructuralError("canonical paths start at zero");
    if (static_cast<int>(values.size()) > grid.steps + 1)
        throw StructuralError("path longer than the grid");
}

SignSequence::SignSequence(std::vector<int> bits_) : bits(std::move(bits_)) {
    for (int b : bits)
        if (b != -1 && b != 1) throw StructuralError("sign sequences contain only -1 and +1");
}

std::uint64_t SignSequence::index() const {
    std::uint64_t idx = 0;
    for (int b : bits) idx = (idx << 1) | (b > 0 ? 1u : 0u);
    return idx;
}

SignSequence SignSequence::from_index(int level, std::uint64_t index) {
    std::vector<int> bits(static_cast<std::size_t>(level));
    for (int j = 0; j < level; ++j)
        bits[static_cast<std::size_t>(j)] = (index >> (level - 1 - j)) & 1u ? 1 : -1;
    return SignSequence(std::move(bits));
}

double max_abs_state(const TimeGrid& grid, double vol_bound) {
    return grid.steps * std::sqrt(vol_bound * grid.dt);
}

Payoff constant_payoff(double c) {
    Payoff p;
    p.evaluate = [c](std::span<const double>) { return c; };
    p.bound = std::abs(c);
    p.modulus = [](double) { return 0.0; };
    p.terminal = [c](double) { return c; };
    p.terminal_kind = Payoff::Terminal::generic;
    return p;
}

Payoff terminal_payoff(std::function<double(double)> f, double bound,
                       std::function<double(double)> modulus) {
    Payoff p;
    p.terminal = std::move(f);
    p.terminal_kind = Payoff::Terminal::generic;
    p.evaluate = [fn = p.terminal](std::span<const double> path) { return fn(path.back()); };
    p.bound = bound;
    p.modulus = std::move(modulus);
    return p;
}

Payoff terminal_square(double xmax) {
    Payoff p = terminal_payoff([](double x) { return x * x; }, xmax * xmax,
                               [xmax](double r) { return 2.0 * xmax * r; });
    p.terminal_kind = Payoff::Terminal::square;
    return p;
}

Payoff terminal_abs(double xmax) {
    Payoff p = terminal_payoff([](double x) { return std::abs(x); }, xmax,
                               [](double r) { return r; });
    p.terminal_kind = Payoff::Terminal::abs_value;
    return p;
}

Payoff terminal_cos() {
    Payoff p = terminal_payoff([](double x) { return std::cos(x); }, 1.0,
                               [](double r) { return r; });
    p.terminal_kind = Payoff::Terminal::cosine;
    return p;
}

Payoff terminal_table(PiecewiseLinear f) {
    const double bound = std::max(std::abs(f.min_value()), std::abs(f.max_value()));
    const double lip = f.lipschitz();
    Payoff p = terminal_payoff([f](double x) { return f(x); }, bound,
                               [lip](double r) { return lip * r; });
    p.terminal_kind = Payoff::Terminal::table;
    p.terminal_table = std::move(f);
    return p;
}

Payoff running_max_payoff(double xmax) {
    Payoff p;
    p.evaluate = [](std::span<const double> path) {
        double m = path[0];
        for (double v : path) m = std::max(m, v);
        return m;
    };
    p.bound = xmax;
    p.modulus = [](double r) { return r; };
    return p;
}

Payoff asian_mean_payoff(double xmax) {
    Payoff p;
    p.evaluate = [](std::span<const double> path) {
        double s = 0.0;
        for (double v : path) s += v;
        return s / static_cast<double>(path.size());
    };
    p.bound = xmax;
    p.modulus = [](double r) { return r; };
    return p;
}

Payoff path_payoff(std::function<double(std::span<const double>)> f, double bound,
                   std::function<double(double)> modulus) {
    Payoff p;
    p.evaluate = std::move(f);
    p.bound = bound;
    p.modulus = std::move(modulus);
    return p;
}

Payoff payoff_scale(const Payoff& p, double c) {
    Payoff out;
    out.evaluate = [f = p.evaluate, c](std::span<const double> path) { return c * f(path); };
    out.bound = std::abs(c) * p.bound;
    if (p.modulus) out.modulus = [m = p.modulus, c](double r) { return std::abs(c) * m(r); };
    if (p.is_terminal()) {
        out.terminal = [g = p.terminal, c](double x) { return c * g(x); };
        out.terminal_kind = Payoff::Terminal::generic;
    }
    return out;
}

Payoff payoff_add(const Payoff& p, const Payoff& q) {
    Payoff out;
    out.evaluate = [f = p.evaluate, g = q.evaluate](std::span<const double> path) {
        return f(path) + g(path);
    };
    out.bound = p.bound + q.bound;
    if (p.modulus && q.modulus)
        out.modulus = [m1 = p.modulus, m2 = q.modulus](double r) { return m1(r) + m2(r); };
    if (p.is_terminal() && q.is_terminal()) {
        out.terminal = [g1 = p.terminal, g2 = q.terminal](double x) { return g1(x) + g2(x); };
        out.terminal_kind = Payoff::Terminal::generic;
    }
    return out;
}

Payoff payoff_abs_diff_pow(const Payoff& x, const Payoff& y, double pw) {
    if (pw < 1.0) throw ArgumentError("exponent must be at least 1");
    Payoff out;
    out.evaluate = [f = x.evaluate, g = y.evaluate, pw](std::span<const double> path) {
        return std::pow(std::abs(f(path) - g(path)), pw);
    };
    const double b = x.bound + y.bound;
    out.bound = std::pow(b, pw);
    if (x.modulus && y.modulus) {
        const double lip = (b > 0.0) ? pw * std::pow(b, pw - 1.0) : 0.0;
        out.modulus = [m1 = x.modulus, m2 = y.modulus, lip](double r) {
            return lip * (m1(r) + m2(r));
        };
    }
    if (x.is_terminal() && y.is_terminal()) {
        out.terminal = [g1 = x.terminal, g2 = y.terminal, pw](double v) {
            return std::pow(std::abs(g1(v) - g2(v)), pw);
        };
        out.terminal_kind = Payoff::Terminal::generic;
    }
    return out;
}

DiscretePath concat(const DiscretePath& prefix, const DiscretePath& suffix) {
    if (prefix.grid.steps != suffix.grid.steps || prefix.grid.horizon != suffix.grid.horizon)
        throw StructuralError("concat: paths live on different grids");
    if (suffix.values.empty() || suffix.values[0] != 0.0)
        throw StructuralError("concat: suffix must start at zero");
    const std::size_t total = prefix.values.size() + suffix.values.size() - 1;
    if (total > static_cast<std::size_t>(prefix.grid.steps) + 1)
        throw StructuralError("concat: combined path does not fit the grid");
    std::vector<double> out(total);
    std::copy(prefix.values.begin(), prefix.values.end(), out.begin());
    const double base = prefix.values.back();
    for (std::size_t j = 1; j < suffix.values.size(); ++j)
        out[prefix.values.size() - 1 + j] = base + suffix.values[j];
    return DiscretePath(prefix.grid, std::move(out));
}

Payoff shift_payoff(const Payoff& xi, int k, const DiscretePath& prefix) {
    if (prefix.last_step() != k)
        throw StructuralError("shift_payoff: prefix must have exactly k+1 values");
    Payoff out;
    out.bound = xi.bound;
    out.modulus = xi.modulus;
    out.evaluate = [f = xi.evaluate, head = prefix.values](std::span<const double> suffix) {
        if (suffix.empty() || suffix[0] != 0.0)
            throw StructuralError("shifted payoff expects a suffix starting at zero");
        std::vector<double> full(head.size() + suffix.size() - 1);
        std::copy(head.begin(), head.end(), full.begin());
        const double base = head.back();
        for (std::size_t j = 1; j < suffix.size(); ++j)
            full[head.size() - 1 + j] = base + suffix[j];
        return f(std::span<const double>(full.data(), full.size()));
    };
    if (xi.is_terminal()) {
        out.terminal = [g = xi.terminal, base = prefix.values.back()](double y) {
            return g(base + y);
        };
        out.terminal_kind = Payoff::Terminal::generic;
    }
    return out;
}

double sup_norm(const DiscretePath& path, int from, int to) {
    if (from > to) throw ArgumentError("sup_norm: interval start exceeds end");
    if (from < 0 || to > path.last_step()) throw ArgumentError("sup_norm: interval outside path");
    double m = 0.0;
    for (int j = from; j <= to; ++j)
        m = std::max(m, std::abs(path.values[static_cast<std::size_t>(j)]));
    return m;
}

std::vector<SignSequence> enumerate_nodes(const TimeGrid& grid, int level) {
    if (level < 0 || level > grid.steps) throw ArgumentError("enumerate_nodes: level outside grid");
    std::vector<SignSequence> out;
    out.reserve(std::size_t{1} << level);
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << level); ++i)
        out.push_back(SignSequence::from_index(level, i));
    return out;
}

DiscretePath realize_path(const SignSequence& signs, const VolFn& vol, const TimeGrid& grid) {
    const int n = signs.level();
    if (n > grid.steps) throw StructuralError("realize_path: more signs than grid steps");
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    x[0] = 0.0;
    for (int j = 0; j < n; ++j) {
        const double a = vol(j, std::span<const double>(x.data(), static_cast<std::size_t>(j) + 1));
        if (!std::isfinite(a) || a < 0.0)
            throw StructuralError("realize_path: policy undefined at a visited node");
        x[static_cast<std::size_t>(j) + 1] =
            x[static_cast<std::size_t>(j)] + signs.bits[static_cast<std::size_t>(j)] * std::sqrt(a * grid.dt);
    }
    return DiscretePath(grid, std::move(x));
}

} // namespace rgexpect
