#include "rgexpect/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgexpect/rng.hpp"

namespace rgexpect {

VolatilityInterval::VolatilityInterval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo >= 0.0) || !(lo < hi) || !std::isfinite(hi))
        throw ArgumentError("volatility interval needs 0 <= lo < hi");
}

std::optional<VolatilityInterval> delta_interior(const VolatilityInterval& iv, double delta) {
    if (delta < 0.0 || !std::isfinite(delta))
        throw ArgumentError("delta_interior: delta must be nonnegative");
    const double lo = iv.lo + delta;
    const double hi = iv.hi - delta;
    if (!(lo < hi)) return std::nullopt;
    return VolatilityInterval(lo, hi);
}

VolatilityInterval DomainProcess::at(int k, std::span<const double> prefix) const {
    if (k < 0 || prefix.size() < static_cast<std::size_t>(k) + 1)
        throw StructuralError("domain: prefix too short for requested step");
    switch (kind_) {
        case Kind::constant:
            return VolatilityInterval(lo_, hi_);
        case Kind::state: {
            const double x = prefix[static_cast<std::size_t>(k)];
            return VolatilityInterval(a_(x), b_(x));
        }
        case Kind::path:
            // Only the first k+1 values may influence the band.
            return fn_(k, prefix.subspan(0, static_cast<std::size_t>(k) + 1));
    }
    throw StructuralError("domain: unknown kind");
}

VolatilityInterval DomainProcess::at_state(double x) const {
    switch (kind_) {
        case Kind::constant:
            return VolatilityInterval(lo_, hi_);
        case Kind::state:
            return VolatilityInterval(a_(x), b_(x));
        case Kind::path:
            break;
    }
    throw ArgumentError("domain: state access requires a Markovian band");
}

double DomainProcess::modulus(double delta) const {
    if (!modulus_) throw ArgumentError("domain carries no uniform-continuity certificate");
    if (!(delta >= 0.0)) throw ArgumentError("modulus: delta must be nonnegative");
    return modulus_(delta);
}

std::function<double(double)> lipschitz_modulus(double lipschitz) {
    if (lipschitz < 0.0) throw ArgumentError("negative Lipschitz constant");
    return [lipschitz](double delta) {
        const double half = 0.5 * delta;
        if (lipschitz <= 0.0) return half;
        return std::min(delta / (2.0 * lipschitz), half);
    };
}

DomainProcess DomainProcess::constant(double lo, double hi) {
    VolatilityInterval check(lo, hi);
    DomainProcess d;
    d.kind_ = Kind::constant;
    d.lo_ = lo;
    d.hi_ = hi;
    d.min_lo_ = lo;
    d.max_hi_ = hi;
    d.max_lo_ = lo;
    d.min_hi_ = hi;
    d.modulus_ = lipschitz_modulus(0.0);
    return d;
}

DomainProcess DomainProcess::state_dependent(PiecewiseLinear a, PiecewiseLinear b) {
    // b - a is piecewise linear on the merged breakpoints, so checking the
    // merged knots (plus constant extrapolation) bounds the width everywhere.
    std::vector<double> knots = a.xs();
    knots.insert(knots.end(), b.xs().begin(), b.xs().end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    for (double x : knots) {
        if (!(a(x) >= 0.0)) throw ArgumentError("state band: lower process must be nonnegative");
        if (!(a(x) < b(x))) throw ArgumentError("state band: lower must stay below upper");
    }
    DomainProcess d;
    d.kind_ = Kind::state;
    d.min_lo_ = a.min_value();
    d.max_hi_ = b.max_value();
    d.max_lo_ = a.max_value();
    d.min_hi_ = b.min_value();
    d.modulus_ = lipschitz_modulus(std::max(a.lipschitz(), b.lipschitz()));
    d.a_ = std::move(a);
    d.b_ = std::move(b);
    return d;
}

DomainProcess DomainProcess::path_running_max(double a0, double a_coef, double b0, double b_coef,
                                              double cap) {
    if (!(cap > 0.0)) throw ArgumentError("path band: cap must be positive");
    for (double m : {0.0, cap}) {
        const double lo = a0 + a_coef * m;
        const double hi = b0 + b_coef * m;
        if (!(lo >= 0.0) || !(lo < hi))
            throw ArgumentError("path band: invalid interval within the running-max range");
    }
    DomainProcess d;
    d.kind_ = Kind::path;
    d.fn_ = [a0, a_coef, b0, b_coef, cap](int k, std::span<const double> prefix) {
        double m = 0.0;
        for (int j = 0; j <= k; ++j) m = std::max(m, prefix[static_cast<std::size_t>(j)]);
        m = std::min(m, cap);
        return VolatilityInterval(a0 + a_coef * m, b0 + b_coef * m);
    };
    d.min_lo_ = std::min(a0, a0 + a_coef * cap);
    d.max_hi_ = std::max(b0, b0 + b_coef * cap);
    d.max_lo_ = std::max(a0, a0 + a_coef * cap);
    d.min_hi_ = std::min(b0, b0 + b_coef * cap);
    d.modulus_ = lipschitz_modulus(std::max(std::abs(a_coef), std::abs(b_coef)));
    return d;
}

DomainProcess DomainProcess::custom(
    Kind declared, std::function<VolatilityInterval(int, std::span<const double>)> fn,
    std::function<double(double)> modulus, double min_lo, double max_hi) {
    DomainProcess d;
    d.kind_ = declared;
    d.fn_ = std::move(fn);
    d.modulus_ = std::move(modulus);
    d.min_lo_ = min_lo;
    d.max_hi_ = max_hi;
    d.max_lo_ = min_lo;
    d.min_hi_ = max_hi;
    if (declared != Kind::path)
        throw ArgumentError("custom bands are path-kind; use the dedicated factories otherwise");
    return d;
}

DomainProcess make_interval_domain(std::function<double(int, std::span<const double>)> lower,
                                   std::function<double(int, std::span<const double>)> upper,
                                   double lipschitz, DomainProcess::Kind declared, double min_lo,
                                   double max_hi) {
    auto fn = [lo = std::move(lower), hi = std::move(upper)](int k, std::span<const double> p) {
        return VolatilityInterval(lo(k, p), hi(k, p)); // throws where the band degenerates
    };
    return DomainProcess::custom(declared, std::move(fn), lipschitz_modulus(lipschitz), min_lo,
                                 max_hi);
}

double Policy::alpha_at(int k, std::uint64_t node) const {
    if (k < 0 || k >= steps() || node >= alpha[static_cast<std::size_t>(k)].size())
        throw StructuralError("policy undefined at the requested node");
    return alpha[static_cast<std::size_t>(k)][node];
}

Policy constant_policy(const TimeGrid& grid, double a) {
    Policy p;
    p.grid = grid;
    p.alpha.resize(static_cast<std::size_t>(grid.steps));
    for (int k = 0; k < grid.steps; ++k)
        p.alpha[static_cast<std::size_t>(k)].assign(std::size_t{1} << k, a);
    return p;
}

namespace {

void feedback_fill(Policy& p, const std::function<double(int, std::span<const double>)>& rule,
                   int k, std::uint64_t node, std::vector<double>& path) {
    const int n = p.grid.steps;
    if (k == n) return;
    const double a = rule(k, std::span<const double>(path.data(), static_cast<std::size_t>(k) + 1));
    p.alpha[static_cast<std::size_t>(k)][node] = a;
    const double s = std::sqrt(a * p.grid.dt);
    path[static_cast<std::size_t>(k) + 1] = path[static_cast<std::size_t>(k)] - s;
    feedback_fill(p, rule, k + 1, node << 1, path);
    path[static_cast<std::size_t>(k) + 1] = path[static_cast<std::size_t>(k)] + s;
    feedback_fill(p, rule, k + 1, (node << 1) | 1u, path);
}

} // namespace

Policy make_feedback_policy(const TimeGrid& grid,
                            const std::function<double(int, std::span<const double>)>& rule) {
    Policy p;
    p.grid = grid;
    p.alpha.resize(static_cast<std::size_t>(grid.steps));
    for (int k = 0; k < grid.steps; ++k)
        p.alpha[static_cast<std::size_t>(k)].assign(std::size_t{1} << k, 0.0);
    std::vector<double> path(static_cast<std::size_t>(grid.steps) + 1, 0.0);
    feedback_fill(p, rule, 0, 0, path);
    return p;
}

std::vector<std::vector<double>> policy_states(const Policy& policy) {
    const int n = policy.grid.steps;
    std::vector<std::vector<double>> x(static_cast<std::size_t>(n) + 1);
    x[0] = {0.0};
    for (int k = 0; k < n; ++k) {
        const auto& cur = x[static_cast<std::size_t>(k)];
        auto& nxt = x[static_cast<std::size_t>(k) + 1];
        nxt.resize(cur.size() * 2);
        for (std::uint64_t node = 0; node < cur.size(); ++node) {
            const double s = std::sqrt(policy.alpha_at(k, node) * policy.grid.dt);
            nxt[2 * node] = cur[node] - s;
            nxt[2 * node + 1] = cur[node] + s;
        }
    }
    return x;
}

DiscretePath realize_path(const SignSequence& signs, const Policy& policy, const TimeGrid& grid) {
    const int n = signs.level();
    if (n > grid.steps) throw StructuralError("realize_path: more signs than grid steps");
    std::vector<double> x(static_cast<std::size_t>(n) + 1);
    x[0] = 0.0;
    std::uint64_t node = 0;
    for (int j = 0; j < n; ++j) {
        const double a = policy.alpha_at(j, node);
        const int sgn = signs.bits[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(j) + 1] =
            x[static_cast<std::size_t>(j)] + sgn * std::sqrt(a * grid.dt);
        node = (node << 1) | (sgn > 0 ? 1u : 0u);
    }
    return DiscretePath(grid, std::move(x));
}

namespace {

struct MarginWalk {
    const Policy* policy;
    const DomainProcess* domain;
    int n;
    double worst;
    int bad_level;
    std::uint64_t bad_node;

    void visit(int k, std::uint64_t node, std::vector<double>& path) {
        if (k == n) return;
        const auto iv =
            domain->at(k, std::span<const double>(path.data(), static_cast<std::size_t>(k) + 1));
        const double a = policy->alpha_at(k, node);
        const double m = std::min(a - iv.lo, iv.hi - a);
        if (m < worst) {
            worst = m;
            bad_level = k;
            bad_node = node;
        }
        const double s = std::sqrt(a * policy->grid.dt);
        path[static_cast<std::size_t>(k) + 1] = path[static_cast<std::size_t>(k)] - s;
        visit(k + 1, node << 1, path);
        path[static_cast<std::size_t>(k) + 1] = path[static_cast<std::size_t>(k)] + s;
        visit(k + 1, (node << 1) | 1u, path);
    }
};

MarginReport margin_from(const Policy& policy, const DomainProcess& domain, int k0,
                         std::uint64_t node0, std::span<const double> prefix) {
    const int n = policy.grid.steps;
    if (policy.steps() != n) throw StructuralError("policy does not cover the grid");
    for (int k = 0; k < n; ++k)
        if (policy.alpha[static_cast<std::size_t>(k)].size() != (std::size_t{1} << k))
            throw StructuralError("policy level arrays must hold 2^k values");
    if (prefix.size() != static_cast<std::size_t>(k0) + 1)
        throw StructuralError("margin: prefix must have k+1 values");
    if (prefix[0] != 0.0) throw StructuralError("margin: prefix must start at zero");

    std::vector<double> path(static_cast<std::size_t>(n) + 1, 0.0);
    std::copy(prefix.begin(), prefix.end(), path.begin());
    MarginWalk walk{&policy, &domain, n, std::numeric_limits<double>::infinity(), -1, 0};
    walk.visit(k0, node0, path);

    MarginReport rep;
    rep.margin = walk.worst;
    rep.admissible = walk.worst > 0.0;
    rep.deg = rep.admissible ? std::min(walk.worst / 2.0, 1.0) : 0.0;
    if (!rep.admissible) {
        rep.bad_level = walk.bad_level;
        rep.bad_node = walk.bad_node;
    }
    return rep;
}

} // namespace

MarginReport admissibility_margin(Policy& policy, const DomainProcess& domain) {
    const double zero = 0.0;
    MarginReport rep = margin_from(policy, domain, 0, 0, std::span<const double>(&zero, 1));
    policy.margin = rep.margin;
    policy.deg = rep.deg;
    policy.margin_known = true;
    return rep;
}

MarginReport subtree_margin(const Policy& policy, const DomainProcess& domain, int k0,
                            std::uint64_t node0, std::span<const double> prefix) {
    return margin_from(policy, domain, k0, node0, prefix);
}

UcViolationReport uc_check(const DomainProcess& domain, const TimeGrid& grid, double delta,
                           long samples, std::uint64_t seed) {
    if (!(delta > 0.0)) throw ArgumentError("uc_check: delta must be positive");
    const int n = grid.steps;
    const double eps = domain.modulus(delta);
    UcViolationReport rep;
    rep.samples = samples;

    std::vector<double> base(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> pert(static_cast<std::size_t>(n) + 1, 0.0);
    for (long i = 0; i < samples; ++i) {
        const auto draw = [&](std::uint64_t j) {
            return rng::stream(seed, static_cast<std::uint64_t>(i), j);
        };
        const int t = static_cast<int>(rng::uniform01(draw(0)) * n); // 0..n-1
        // prefix up to t along a random admissible-looking walk
        base[0] = 0.0;
        for (int j = 0; j < t; ++j) {
            const auto iv =
                domain.at(j, std::span<const double>(base.data(), static_cast<std::size_t>(j) + 1));
            const double u = rng::uniform(draw(10 + 2 * static_cast<std::uint64_t>(j)), iv.lo, iv.hi);
            const double sgn = rng::uniform01(draw(11 + 2 * static_cast<std::uint64_t>(j))) < 0.5 ? -1.0 : 1.0;
            base[static_cast<std::size_t>(j) + 1] =
                base[static_cast<std::size_t>(j)] + sgn * std::sqrt(u * grid.dt);
        }
        pert[0] = 0.0;
        for (int j = 1; j <= t; ++j)
            pert[static_cast<std::size_t>(j)] =
                base[static_cast<std::size_t>(j)] +
                rng::uniform(draw(100 + static_cast<std::uint64_t>(j)), -eps, eps);
        // common relative suffix, appended to both prefixes
        const int s_idx = t + static_cast<int>(rng::uniform01(draw(1)) * (n - t)); // t..n-1
        for (int j = t; j < s_idx; ++j) {
            const auto iv =
                domain.at(j, std::span<const double>(base.data(), static_cast<std::size_t>(j) + 1));
            const double u = rng::uniform(draw(200 + 2 * static_cast<std::uint64_t>(j)), iv.lo, iv.hi);
            const double sgn = rng::uniform01(draw(201 + 2 * static_cast<std::uint64_t>(j))) < 0.5 ? -1.0 : 1.0;
            const double inc = sgn * std::sqrt(u * grid.dt);
            base[static_cast<std::size_t>(j) + 1] = base[static_cast<std::size_t>(j)] + inc;
            pert[static_cast<std::size_t>(j) + 1] = pert[static_cast<std::size_t>(j)] + inc;
        }
        const auto iv1 =
            domain.at(s_idx, std::span<const double>(base.data(), static_cast<std::size_t>(s_idx) + 1));
        const auto iv2 =
            domain.at(s_idx, std::span<const double>(pert.data(), static_cast<std::size_t>(s_idx) + 1));
        if (!(iv1.lo + delta < iv1.hi - delta)) continue; // empty delta-interior: nothing to include
        const double v = std::max(0.0, std::max((iv2.lo + eps) - (iv1.lo + delta),
                                                (iv1.hi - delta) - (iv2.hi - eps)));
        rep.worst = std::max(rep.worst, v);
    }
    return rep;
}

double stability_radius(int k, std::uint64_t node, std::span<const double> prefix,
                        const Policy& policy, const DomainProcess& domain) {
    const MarginReport rep = subtree_margin(policy, domain, k, node, prefix);
    if (!rep.admissible) throw ArgumentError("stability_radius: policy inadmissible at the node");
    return std::min(domain.modulus(rep.deg) / 2.0, 1.0);
}

} // namespace rgexpect
